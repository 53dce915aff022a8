//! Acceptance criteria as plain functions. Each returns an [`Outcome`] with
//! one line per clause; the `acceptance` test target runs them all.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use holo_core::adiabatic::{convergence_study, evolve_two_level, two_level_berry_numeric, StudyOptions};
use holo_core::connection::{connection_numeric, field_strength, CONNECTION_STEP, FIELD_STEP};
use holo_core::holonomy::{holonomy_ordered, holonomy_stokes, loop_boundary};
use holo_core::manifold::build_unitary;
use holo_core::matrix::unitary_distance;
use holo_core::verify::{self, convention_search, run_conformance};
use holo_core::{
    Complex, CoordinateIndex as Ci, HolonomySign, Mat2, Method, OrderedOptions, Point, Profile, Region,
    RotationConvention, SubspaceLabel, TwoLevelLoop,
};

pub const SEED: u64 = 42;

#[derive(Debug, Clone)]
pub struct Clause {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub clauses: Vec<Clause>,
    pub seconds: f64,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }
}

struct Collector {
    clauses: Vec<Clause>,
    start: Instant,
}

impl Collector {
    fn new() -> Self {
        Collector { clauses: Vec::new(), start: Instant::now() }
    }

    fn clause(&mut self, name: &str, pass: bool, detail: String) {
        self.clauses.push(Clause { name: name.to_string(), pass, detail });
    }

    /// `value <= tol`
    fn at_most(&mut self, name: &str, value: f64, tol: f64) {
        self.clause(name, value <= tol, format!("{value:.3e} <= {tol:.0e}"));
    }

    fn done(self) -> Outcome {
        Outcome { clauses: self.clauses, seconds: self.start.elapsed().as_secs_f64() }
    }
}

fn conv() -> RotationConvention {
    RotationConvention::default()
}

fn diag(a: Complex, b: Complex) -> Mat2 {
    Mat2::from_diag([a, b])
}

fn one() -> Complex {
    Complex::new(1.0, 0.0)
}

fn i(sign: f64) -> Complex {
    Complex::new(0.0, sign)
}

/// 1. Unitarity, anti-hermiticity and antisymmetry at 1000 seeded points.
pub fn structural() -> Outcome {
    let mut c = Collector::new();
    let points = verify::sample_points(1000, SEED);
    let (mut unit, mut ah_a, mut ah_f, mut anti) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in &points {
        unit = unit.max(build_unitary(p, conv()).unitarity_residual());
        for coord in Ci::ALL {
            for s in SubspaceLabel::BOTH {
                ah_a = ah_a.max(connection_numeric(p, coord, s, conv(), CONNECTION_STEP).matrix.anti_hermitian_residual());
            }
        }
        for (k, &mu) in Ci::ALL.iter().enumerate() {
            for &nu in &Ci::ALL[k + 1..] {
                for s in SubspaceLabel::BOTH {
                    let f = field_strength(p, mu, nu, s, conv(), Method::Numeric, FIELD_STEP).unwrap().matrix;
                    let g = field_strength(p, nu, mu, s, conv(), Method::Numeric, FIELD_STEP).unwrap().matrix;
                    ah_f = ah_f.max(f.anti_hermitian_residual());
                    anti = anti.max((f + g).max_abs());
                }
            }
        }
    }
    c.at_most("build_unitary unitary", unit, 1e-12);
    c.at_most("numeric A anti-hermitian", ah_a, 1e-8);
    c.clause("numeric F antisymmetric exactly", anti == 0.0, format!("max |F_mn + F_nm| = {anti:e}"));
    c.at_most("numeric F anti-hermitian", ah_f, 1e-8);
    let out = c.done();
    let fast = out.seconds < 30.0;
    let mut out = out;
    out.clauses.push(Clause { name: "runtime < 30 s".into(), pass: fast, detail: format!("{:.1} s", out.seconds) });
    out
}

/// 2. Printed zero blocks and zero curvature components.
pub fn zero_blocks() -> Outcome {
    let mut c = Collector::new();
    let points = verify::sample_points(1000, SEED + 1);
    let mut a_max = 0.0f64;
    let mut f_max = 0.0f64;
    let zero_f = [
        (Ci::THETA23, Ci::PHI14, SubspaceLabel::Plus),
        (Ci::THETA23, Ci::PHI24, SubspaceLabel::Plus),
        (Ci::THETA14, Ci::PHI23, SubspaceLabel::Minus),
        (Ci::THETA14, Ci::PHI24, SubspaceLabel::Minus),
        (Ci::THETA14, Ci::THETA23, SubspaceLabel::Plus),
        (Ci::THETA14, Ci::THETA23, SubspaceLabel::Minus),
    ];
    for p in &points {
        for (coord, s) in verify::ZERO_BLOCKS {
            a_max = a_max.max(connection_numeric(p, coord, s, conv(), CONNECTION_STEP).matrix.frobenius_norm());
        }
        for (mu, nu, s) in zero_f {
            let f = field_strength(p, mu, nu, s, conv(), Method::Numeric, FIELD_STEP).unwrap();
            f_max = f_max.max(f.matrix.frobenius_norm());
        }
    }
    c.at_most("zero A blocks", a_max, 1e-7);
    c.at_most("zero F components", f_max, 1e-6);
    c.done()
}

/// Printed formulas that fail under every convention and have no repair in
/// the catalogue.
pub const OPEN_ERRATA: [&str; 5] =
    ["A+_phi13", "F+_theta24_phi13", "F-_theta24_phi13", "F+_theta23_phi13", "F-_theta14_theta13"];

/// 3. Convention resolution and formula conformance.
pub fn conformance() -> Outcome {
    let mut c = Collector::new();
    let search = convention_search(200, SEED).unwrap();
    c.clause(
        "unique best convention, margin >= 10x",
        search.tied.len() == 1 && search.margin >= 10.0,
        format!(
            "selected {}, tied {}, runner-up/best = {:.3}",
            search.selected,
            search.tied.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" "),
            search.margin
        ),
    );
    let report = run_conformance(search.selected, 200, SEED, 1e-6, 1e-6).unwrap();
    let required = [
        "A+_theta23", "A+_theta24", "A-_theta14", "A-_theta24", "A+_phi24", "A-_phi24", "A+_theta14",
        "A-_theta23", "F+_theta24_phi24", "F-_theta24_phi24", "F+_theta14_theta24", "F-_theta23_theta24",
        "F+_theta23_theta24",
    ];
    let worst = required
        .iter()
        .map(|id| report.formula(id).unwrap_or_else(|| panic!("{id} missing")).max_residual)
        .fold(0.0, f64::max);
    c.at_most("required formulas match at 200 points", worst, 1e-6);
    let unexplained: Vec<&str> = report
        .formulas
        .iter()
        .filter(|f| !f.pass && f.repair.is_none() && !OPEN_ERRATA.contains(&f.id.as_str()))
        .map(|f| f.id.as_str())
        .collect();
    let failing = report.formulas.iter().filter(|f| !f.pass).count();
    c.clause(
        "every failure repaired or listed as errata",
        unexplained.is_empty(),
        format!("{failing} failing, unexplained {unexplained:?}"),
    );
    c.clause("structural suite", report.structural_pass(), String::new());
    let out = c.done();
    let secs = out.seconds;
    let mut out = out;
    out.clauses.push(Clause { name: "runtime < 2 min".into(), pass: secs < 120.0, detail: format!("{secs:.1} s") });
    out
}

/// Rectangle on the (theta24, phi13) plane used for population exchange.
pub fn exchange_region() -> Region {
    let fixed = Point::from_array([0.7, 0.4, 0.5, 0.0, 0.0, 1.7, 2.9, 5.1]);
    Region::new((Ci::THETA24, Ci::PHI13), [[0.3, 1.1], [0.5, 1.5]], fixed).unwrap()
}

/// 4. Ordered versus Stokes on two commuting planes.
pub fn stokes_triangle() -> Outcome {
    let mut c = Collector::new();
    let reference = Region::new((Ci::THETA24, Ci::PHI24), [[0.0, FRAC_PI_4], [0.0, PI]], Point::origin()).unwrap();
    let ordered = holonomy_ordered(&loop_boundary(&reference, 40_000).unwrap(), conv(), OrderedOptions::default()).unwrap();
    let expected = [diag(one(), i(-1.0)), diag(one(), i(1.0))];
    for (k, s) in SubspaceLabel::BOTH.into_iter().enumerate() {
        let st = holonomy_stokes(&reference, s, conv(), 1e-10).unwrap();
        c.at_most(&format!("(theta24, phi24) {s}: ordered vs stokes"), unitary_distance(&st, ordered.get(s)), 1e-5);
        c.at_most(&format!("(theta24, phi24) {s}: ordered vs diag(1, -+i)"), unitary_distance(ordered.get(s), &expected[k]), 1e-5);
        c.at_most(&format!("(theta24, phi24) {s}: stokes vs diag(1, -+i)"), unitary_distance(&st, &expected[k]), 1e-5);
    }

    let region = exchange_region();
    let ordered = holonomy_ordered(&loop_boundary(&region, 40_000).unwrap(), conv(), OrderedOptions::default()).unwrap();
    c.clause("(theta24, phi13) area >= 0.5", region.area() >= 0.5, format!("area {:.3}", region.area()));
    for s in SubspaceLabel::BOTH {
        let g = ordered.get(s);
        let off = g[(0, 1)].norm().max(g[(1, 0)].norm());
        c.clause(&format!("(theta24, phi13) {s}: off-diagonal >= 0.1"), off >= 0.1, format!("|offdiag| = {off:.3}"));
        match holonomy_stokes(&region, s, conv(), 1e-10) {
            Ok(st) => c.at_most(&format!("(theta24, phi13) {s}: ordered vs stokes"), unitary_distance(&st, g), 1e-4),
            Err(e) => c.clause(&format!("(theta24, phi13) {s}: ordered vs stokes"), false, e.to_string()),
        }
    }
    let out = c.done();
    let secs = out.seconds;
    let mut out = out;
    out.clauses.push(Clause { name: "runtime < 5 min".into(), pass: secs < 300.0, detail: format!("{secs:.1} s") });
    out
}

/// 5. Opposite phases on (theta24, phi24) loops and in the two-level model.
pub fn opposite_phases() -> Outcome {
    let mut c = Collector::new();
    let regions = [
        Region::new((Ci::THETA24, Ci::PHI24), [[0.0, FRAC_PI_4], [0.0, PI]], Point::origin()).unwrap(),
        Region::new(
            (Ci::THETA24, Ci::PHI24),
            [[0.2, 1.0], [0.4, 2.1]],
            Point::from_array([0.3, 0.9, 1.2, 0.0, 2.0, 0.7, 4.0, 0.0]),
        )
        .unwrap(),
        Region::new(
            (Ci::THETA24, Ci::PHI24),
            [[0.5, 1.4], [1.0, 4.0]],
            Point::from_array([1.1, 0.2, 0.6, 0.0, 5.5, 3.3, 0.1, 0.0]),
        )
        .unwrap(),
    ];
    let mut worst = 0.0f64;
    for r in &regions {
        let g = holonomy_ordered(&loop_boundary(r, 8000).unwrap(), conv(), OrderedOptions::default()).unwrap();
        worst = worst.max((g.gamma_plus[(1, 1)].arg() + g.gamma_minus[(1, 1)].arg()).abs());
    }
    c.at_most("arg(G+_22) = -arg(G-_22)", worst, 1e-8);

    let mut worst = 0.0f64;
    for (th, ph) in [([0.0, FRAC_PI_4], [0.0, FRAC_PI_2]), ([0.3, 1.2], [1.0, 2.5])] {
        for profile in [Profile::Uniform, Profile::Smoothstep] {
            let r = evolve_two_level(&TwoLevelLoop::rectangle(th, ph), 1.0, 400.0, 80_000, profile, conv()).unwrap();
            worst = worst.max((r.phi_plus + r.phi_minus).abs());
        }
    }
    c.at_most("two-level phi+ = -phi-", worst, 1e-6);
    c.done()
}

/// Reference rectangle boundary with the spec's per-segment steps.
pub fn reference_loop() -> holo_core::Loop {
    let r = Region::new((Ci::THETA24, Ci::PHI24), [[0.0, FRAC_PI_4], [0.0, PI]], Point::origin()).unwrap();
    loop_boundary(&r, 40_000).unwrap()
}

/// 6. Adiabatic convergence on the reference loop.
pub fn adiabatic() -> Outcome {
    let mut c = Collector::new();
    let l = reference_loop();
    let times = [100.0, 200.0, 400.0, 800.0];
    let opts = StudyOptions { steps_per_unit: 200.0, profile: Profile::Smoothstep };
    let rows = convergence_study(&l, 1.0, &times, conv(), opts).unwrap();
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("T={} leak={:.2e} err+={:.2e} err-={:.2e}", r.t, r.leakage, r.err_plus, r.err_minus))
        .collect();
    let ratios = |f: fn(&holo_core::StudyRow) -> f64| rows.windows(2).map(|w| f(&w[0]) / f(&w[1])).collect::<Vec<_>>();
    let leak = ratios(|r| r.leakage);
    let errp = ratios(|r| r.err_plus);
    let errm = ratios(|r| r.err_minus);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ");
    c.clause("leakage drops >= 1.4x per doubling", leak.iter().all(|&x| x >= 1.4), fmt(&leak));
    c.clause("err+ drops >= 1.4x per doubling", errp.iter().all(|&x| x >= 1.4), fmt(&errp));
    c.clause("err- drops >= 1.4x per doubling", errm.iter().all(|&x| x >= 1.4), fmt(&errm));

    // final extracted block, compared with the literal closed-form holonomy
    let last = rows.last().unwrap();
    let target = diag(one(), i(-1.0));
    let sched = holo_core::adiabatic::Schedule::new(l.clone(), 800.0, last.steps, Profile::Smoothstep).unwrap();
    let m = holo_core::adiabatic::to_eigenframe(&holo_core::adiabatic::evolve(&sched, 1.0, conv()), &l.base, conv());
    let g = holo_core::adiabatic::extract_geometric(&m, 800.0, 1.0).unwrap().geometric.gamma_plus;
    let d_literal = unitary_distance(&g, &target);
    let d_flipped = unitary_distance(&g, &diag(one(), i(1.0)));
    c.clause(
        "final G+ within 1e-2 of diag(1, -i)",
        d_literal <= 1e-2,
        format!("{d_literal:.3e} (distance to diag(1, +i): {d_flipped:.3e}; prediction error {:.3e})", last.err_plus),
    );
    c.at_most("final leakage", last.leakage, 1e-2);
    c.clause("table", true, table.join("; "));
    let out = c.done();
    let secs = out.seconds;
    let mut out = out;
    out.clauses.push(Clause { name: "runtime < 10 min".into(), pass: secs < 600.0, detail: format!("{secs:.1} s") });
    out
}

/// 7. Two-level simulation against the Stokes phase of the numeric curvature.
pub fn abelian_baseline() -> Outcome {
    let mut c = Collector::new();
    let (th, ph) = ([0.0, FRAC_PI_4], [0.0, FRAC_PI_2]);
    let sim = evolve_two_level(&TwoLevelLoop::rectangle(th, ph), 1.0, 1000.0, 200_000, Profile::Uniform, conv()).unwrap();
    let (stokes, _) = two_level_berry_numeric(th, ph, conv(), HolonomySign::Schrodinger, 1e-10);
    let (literal, _) = two_level_berry_numeric(th, ph, conv(), HolonomySign::Connection, 1e-10);
    c.clause(
        "numeric curvature is +-i sin 2theta",
        (literal.abs() - FRAC_PI_4).abs() <= 1e-6,
        format!("literal Stokes phase {literal:.9}"),
    );
    c.at_most("simulated phi+ vs Stokes phase", (sim.phi_plus - stokes).abs(), 1e-3);
    c.at_most("simulated phi+ vs pi/4", (sim.phi_plus - FRAC_PI_4).abs(), 1e-3);
    c.clause("values", true, format!("phi+ = {:.6}, Stokes = {stokes:.6}", sim.phi_plus));
    c.done()
}

/// 8. Same seed, same report bytes.
pub fn determinism() -> Outcome {
    let mut c = Collector::new();
    let run = || {
        let search = convention_search(200, SEED).unwrap();
        let r = run_conformance(search.selected, 200, SEED, verify::DEFAULT_TOL_CONNECTION, verify::DEFAULT_TOL_FIELD).unwrap();
        (r.to_json(), r.to_text())
    };
    let (a, b) = (run(), run());
    c.clause("report.json identical", a.0 == b.0, format!("{} bytes", a.0.len()));
    c.clause("report.txt identical", a.1 == b.1, format!("{} bytes", a.1.len()));
    c.done()
}

pub type Criterion = (u8, &'static str, fn() -> Outcome);

pub const CRITERIA: [Criterion; 8] = [
    (1, "structural suite", structural),
    (2, "zero-block conformance", zero_blocks),
    (3, "convention resolution and formula conformance", conformance),
    (4, "stokes triangle", stokes_triangle),
    (5, "opposite-phase property", opposite_phases),
    (6, "adiabatic oracle", adiabatic),
    (7, "abelian baseline", abelian_baseline),
    (8, "determinism", determinism),
];
