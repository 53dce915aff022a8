//! `holo`: connections, curvatures, holonomies and conformance checks for the
//! four-level degenerate model.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use holo_core::adiabatic::{convergence_study, evolve_two_level, two_level_berry_numeric, StudyOptions};
use holo_core::connection::{self, field_strength, CONNECTION_STEP, FIELD_STEP};
use holo_core::holonomy::{holonomy_ordered, max_commutator, stokes_unchecked, COMMUTING_TOL};
use holo_core::verify::{self, convention_search, run_conformance, ConventionSearch};
use holo_core::{
    AdiabaticError, ConnectionError, CoordinateIndex, HolonomyError, HolonomyPair, HolonomySign, Loop, Mat2,
    Method, OrderedOptions, Point, Profile, Region, RotationConvention, SubspaceLabel, TwoLevelLoop, VerifyError,
};

use output::{mat_csv_record, mat_text, Format, Output};

#[derive(Parser)]
#[command(name = "holo", version, about = "Wilczek-Zee connections and holonomies on the four-level degenerate model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, global = true)]
    output: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `auto` or a convention like `full:plus_i:e_plus_iphi_upper`.
    #[arg(long, default_value = "auto", global = true)]
    convention: String,
    /// Directory for the cached `auto` convention search.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, env = "HOLO_SEED", default_value_t = verify::DEFAULT_SEED, global = true)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// One connection block A_c on one or both subspaces.
    Connection {
        /// Point JSON; all coordinates zero when omitted.
        #[arg(long)]
        point: Option<PathBuf>,
        #[arg(long)]
        coord: CoordinateIndex,
        #[arg(long, value_enum, default_value_t = Sub::Both)]
        subspace: Sub,
        #[arg(long, value_enum, default_value_t = MethodArg::Numeric)]
        method: MethodArg,
        #[arg(long, default_value_t = CONNECTION_STEP)]
        h: f64,
        #[command(flatten)]
        common: Common,
    },
    /// One curvature component F_{mu nu}.
    Field {
        #[arg(long)]
        point: Option<PathBuf>,
        #[arg(long)]
        mu: CoordinateIndex,
        #[arg(long)]
        nu: CoordinateIndex,
        #[arg(long, value_enum, default_value_t = Sub::Both)]
        subspace: Sub,
        #[arg(long, value_enum, default_value_t = MethodArg::Numeric)]
        method: MethodArg,
        #[arg(long, default_value_t = FIELD_STEP)]
        h: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Holonomy of a closed loop.
    Holonomy {
        #[arg(long = "loop")]
        loop_file: PathBuf,
        #[arg(long, value_enum, default_value_t = HolonomyMethod::Ordered)]
        method: HolonomyMethod,
        #[arg(long, value_enum, default_value_t = Sub::Both)]
        subspace: Sub,
        /// Overrides the loop's steps_per_segment.
        #[arg(long)]
        steps: Option<usize>,
        /// Connection source for the ordered product.
        #[arg(long, value_enum, default_value_t = SourceArg::Numeric)]
        source: SourceArg,
        #[arg(long, default_value_t = 1e-9)]
        quad_tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Conformance report of the closed-form tables against the oracle.
    Verify {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Tolerance for connection blocks.
        #[arg(long, default_value_t = verify::DEFAULT_TOL_CONNECTION)]
        tol: f64,
        /// Tolerance for curvature components.
        #[arg(long, default_value_t = verify::DEFAULT_TOL_FIELD)]
        tol_field: f64,
        /// Where report.json and report.txt go.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Adiabatic Schrodinger evolution around a loop.
    Adiabatic {
        #[arg(long = "loop", required_unless_present = "two_level")]
        loop_file: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Total times (units of 1/omega), comma separated.
        #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
        times: Vec<f64>,
        /// Time steps per unit of omega*T.
        #[arg(long, default_value_t = 200.0)]
        steps_per_unit: f64,
        #[arg(long, value_enum, default_value_t = ProfileArg::Smoothstep)]
        profile: ProfileArg,
        /// Run the two-level baseline on a (theta, phi) rectangle instead.
        #[arg(long)]
        two_level: bool,
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, std::f64::consts::FRAC_PI_4])]
        theta: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, std::f64::consts::FRAC_PI_2])]
        phi: Vec<f64>,
        /// Total time of the two-level run.
        #[arg(long, default_value_t = 1000.0)]
        total_time: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sub {
    Plus,
    Minus,
    Both,
}

impl Sub {
    fn labels(self) -> Vec<SubspaceLabel> {
        match self {
            Sub::Plus => vec![SubspaceLabel::Plus],
            Sub::Minus => vec![SubspaceLabel::Minus],
            Sub::Both => SubspaceLabel::BOTH.to_vec(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MethodArg {
    Numeric,
    Analytic,
    Both,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Numeric => vec![Method::Numeric],
            MethodArg::Analytic => vec![Method::Analytic],
            MethodArg::Both => vec![Method::Numeric, Method::Analytic],
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum HolonomyMethod {
    Ordered,
    Stokes,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Numeric,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Uniform,
    Smoothstep,
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl From<ConnectionError> for Failure {
    fn from(e: ConnectionError) -> Self {
        let code = match e {
            ConnectionError::PoleAtPoint { .. } => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<HolonomyError> for Failure {
    fn from(e: HolonomyError) -> Self {
        let code = match &e {
            HolonomyError::LoopNotClosed { .. } | HolonomyError::InvalidLoop(_) => 4,
            HolonomyError::NonCommutingPlane { .. } => 5,
            HolonomyError::Connection(ConnectionError::PoleAtPoint { .. }) => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<AdiabaticError> for Failure {
    fn from(e: AdiabaticError) -> Self {
        match e {
            AdiabaticError::Holonomy(h) => h.into(),
            other => Failure::usage(other.to_string()),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Holonomy(h) => h.into(),
            other => Failure::usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("bad {what} {}: {e}", path.display())))
}

fn read_point(path: Option<&Path>) -> Result<Point, Failure> {
    let p: Point = match path {
        Some(p) => read_json(p, "point")?,
        None => Point::origin(),
    };
    if !p.is_finite() {
        return Err(Failure::usage("point has non-finite coordinates"));
    }
    Ok(p)
}

/// Samples used by the `auto` search outside `verify`.
const AUTO_SAMPLES: usize = 50;

fn resolve_convention(common: &Common, samples: usize, default_dir: &Path) -> Result<RotationConvention, Failure> {
    if common.convention != "auto" {
        return common.convention.parse().map_err(Failure::usage);
    }
    let dir = common.cache_dir.as_deref().unwrap_or(default_dir);
    let cache = dir.join("convention.json");
    if let Ok(text) = fs::read_to_string(&cache) {
        if let Ok(s) = serde_json::from_str::<ConventionSearch>(&text) {
            if s.samples == samples && s.seed == common.seed {
                return Ok(s.selected);
            }
        }
    }
    let search = convention_search(samples, common.seed)?;
    fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))?;
    let text = serde_json::to_string_pretty(&search).expect("search serializes") + "\n";
    fs::write(&cache, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", cache.display())))?;
    Ok(search.selected)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Connection { point, coord, subspace, method, h, common } => {
            let p = read_point(point.as_deref())?;
            let conv = resolve_convention(&common, AUTO_SAMPLES, Path::new("."))?;
            let mut out = Output::new(common.output.unwrap_or(Format::Text));
            for s in subspace.labels() {
                let mut mats = Vec::new();
                for m in method.methods() {
                    let block = match m {
                        Method::Numeric => connection::connection_numeric(&p, coord, s, conv, h),
                        Method::Analytic => connection::connection_analytic(&p, coord, s)?,
                    };
                    mats.push((m, block.matrix));
                }
                emit_blocks(&mut out, &coord.to_string(), s, &mats);
            }
            out.finish(common.out.as_deref())?;
            Ok(0)
        }
        Command::Field { point, mu, nu, subspace, method, h, common } => {
            let p = read_point(point.as_deref())?;
            let conv = resolve_convention(&common, AUTO_SAMPLES, Path::new("."))?;
            let mut out = Output::new(common.output.unwrap_or(Format::Text));
            for s in subspace.labels() {
                let mut mats = Vec::new();
                for m in method.methods() {
                    mats.push((m, field_strength(&p, mu, nu, s, conv, m, h)?.matrix));
                }
                emit_blocks(&mut out, &format!("{mu}_{nu}"), s, &mats);
            }
            out.finish(common.out.as_deref())?;
            Ok(0)
        }
        Command::Holonomy { loop_file, method, subspace, steps, source, quad_tol, common } => {
            let mut l: Loop = read_json(&loop_file, "loop")?;
            if let Some(n) = steps {
                if n < 1 {
                    return Err(Failure::usage("--steps must be >= 1"));
                }
                l.steps_per_segment = n;
                l.segment_steps = None;
            }
            l.check_closed()?;
            let conv = resolve_convention(&common, AUTO_SAMPLES, Path::new("."))?;
            holonomy_cmd(&l, method, subspace, source, quad_tol, conv, &common)
        }
        Command::Verify { samples, tol, tol_field, out_dir, common } => {
            if samples < verify::MIN_SAMPLES {
                return Err(Failure::usage(format!("samples must be ≥ {}", verify::MIN_SAMPLES)));
            }
            let conv = resolve_convention(&common, samples, &out_dir)?;
            let report = run_conformance(conv, samples, common.seed, tol, tol_field)?;
            fs::create_dir_all(&out_dir).map_err(|e| Failure::usage(format!("cannot create {}: {e}", out_dir.display())))?;
            let write = |name: &str, body: &str| {
                let path = out_dir.join(name);
                fs::write(&path, body).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
            };
            write("report.json", &report.to_json())?;
            write("report.txt", &report.to_text())?;
            let format = common.output.unwrap_or(Format::Text);
            let mut out = Output::new(format);
            match format {
                Format::Json => out.raw(&report.to_json()),
                Format::Text => out.raw(&report.to_text()),
                Format::Csv => {
                    out.header(&["id", "max_residual", "pass", "repair"]);
                    for f in &report.formulas {
                        out.record(vec![
                            f.id.clone(),
                            format!("{:e}", f.max_residual),
                            f.pass.to_string(),
                            f.repair.clone().unwrap_or_default(),
                        ]);
                    }
                }
            }
            out.finish(common.out.as_deref())?;
            Ok(if report.all_pass() { 0 } else { 1 })
        }
        Command::Adiabatic {
            loop_file,
            omega,
            times,
            steps_per_unit,
            profile,
            two_level,
            theta,
            phi,
            total_time,
            common,
        } => {
            if !(omega > 0.0) {
                return Err(Failure::usage("--omega must be > 0"));
            }
            let profile = match profile {
                ProfileArg::Uniform => Profile::Uniform,
                ProfileArg::Smoothstep => Profile::Smoothstep,
            };
            let conv = resolve_convention(&common, AUTO_SAMPLES, Path::new("."))?;
            let format = common.output.unwrap_or(Format::Csv);
            let mut out = Output::new(format);
            if two_level {
                let (th, ph) = ([theta[0], theta[1]], [phi[0], phi[1]]);
                if !(th[0] <= th[1] && ph[0] <= ph[1]) {
                    return Err(Failure::usage("--theta and --phi bounds must be ordered"));
                }
                let steps = (steps_per_unit * omega * total_time).round().max(100.0) as usize;
                let r = evolve_two_level(&TwoLevelLoop::rectangle(th, ph), omega, total_time, steps, profile, conv)?;
                let (sp, sm) = two_level_berry_numeric(th, ph, conv, HolonomySign::Schrodinger, 1e-10);
                out.header(&["T", "steps", "phi_plus", "phi_minus", "stokes_plus", "stokes_minus"]);
                out.record(vec![
                    total_time.to_string(),
                    steps.to_string(),
                    r.phi_plus.to_string(),
                    r.phi_minus.to_string(),
                    sp.to_string(),
                    sm.to_string(),
                ]);
                out.json(json!({
                    "T": total_time, "steps": steps,
                    "phi_plus": r.phi_plus, "phi_minus": r.phi_minus,
                    "stokes_plus": sp, "stokes_minus": sm,
                    "propagator": r.propagator,
                }));
            } else {
                let path = loop_file.expect("clap requires --loop without --two-level");
                let l: Loop = read_json(&path, "loop")?;
                l.check_closed()?;
                if times.is_empty() {
                    return Err(Failure::usage("--times must not be empty"));
                }
                let rows = convergence_study(&l, omega, &times, conv, StudyOptions { steps_per_unit, profile })?;
                out.header(&["T", "steps", "leakage", "err_plus", "err_minus"]);
                for r in &rows {
                    out.record(vec![
                        r.t.to_string(),
                        r.steps.to_string(),
                        format!("{:e}", r.leakage),
                        format!("{:e}", r.err_plus),
                        format!("{:e}", r.err_minus),
                    ]);
                }
                out.json(serde_json::to_value(&rows).expect("rows serialize"));
            }
            out.finish(common.out.as_deref())?;
            Ok(0)
        }
    }
}

fn emit_blocks(out: &mut Output, label: &str, s: SubspaceLabel, mats: &[(Method, Mat2)]) {
    out.header(&[
        "coord_or_pair", "subspace", "method", "re11", "im11", "re12", "im12", "re21", "im21", "re22", "im22",
    ]);
    let name = |m: Method| match m {
        Method::Numeric => "numeric",
        Method::Analytic => "analytic",
    };
    let mut entries = Vec::new();
    for (m, a) in mats {
        out.record(mat_csv_record(label, s.name(), name(*m), a));
        out.text(&format!(
            "{label} {s} {} (anti-hermitian residual {:.3e})\n{}",
            name(*m),
            a.anti_hermitian_residual(),
            mat_text(a)
        ));
        entries.push(json!({
            "coord_or_pair": label,
            "subspace": s.name(),
            "method": name(*m),
            "matrix": a,
            "anti_hermitian_residual": a.anti_hermitian_residual(),
        }));
    }
    if let [(_, a), (_, b)] = mats {
        let r = (*a - *b).max_abs();
        out.text(&format!("{label} {s} max elementwise residual {r:.3e}\n"));
        entries.push(json!({ "coord_or_pair": label, "subspace": s.name(), "residual": r }));
    }
    for e in entries {
        out.json(e);
    }
}

fn holonomy_cmd(
    l: &Loop,
    method: HolonomyMethod,
    subspace: Sub,
    source: SourceArg,
    quad_tol: f64,
    conv: RotationConvention,
    common: &Common,
) -> Result<u8, Failure> {
    let subs = subspace.labels();
    let opts = OrderedOptions {
        source: match source {
            SourceArg::Numeric => Method::Numeric,
            SourceArg::Analytic => Method::Analytic,
        },
        ..Default::default()
    };
    let ordered = match method {
        HolonomyMethod::Ordered | HolonomyMethod::Both => Some(holonomy_ordered(l, conv, opts)?),
        HolonomyMethod::Stokes => None,
    };
    let stokes = match method {
        HolonomyMethod::Stokes | HolonomyMethod::Both => {
            let (region, orientation) = Region::from_loop(l).ok_or_else(|| Failure {
                code: 4,
                msg: "the stokes method needs an axis-aligned rectangle loop (segments a, b, -a, -b)".into(),
            })?;
            let mut g = HolonomyPair::identity();
            for &s in &subs {
                let worst = max_commutator(&region, s, conv);
                if worst > COMMUTING_TOL {
                    return Err(HolonomyError::NonCommutingPlane { subspace: s, max_commutator: worst }.into());
                }
                let m = stokes_unchecked(&region, s, conv, quad_tol, orientation);
                match s {
                    SubspaceLabel::Plus => g.gamma_plus = m,
                    SubspaceLabel::Minus => g.gamma_minus = m,
                }
            }
            Some((region, g))
        }
        HolonomyMethod::Ordered => None,
    };

    let format = common.output.unwrap_or(Format::Text);
    let mut out = Output::new(format);
    out.header(&[
        "coord_or_pair", "subspace", "method", "re11", "im11", "re12", "im12", "re21", "im21", "re22", "im22",
    ]);
    let mut doc = serde_json::Map::new();
    doc.insert("convention".into(), json!(conv));
    let mut results: Vec<(&str, HolonomyPair)> = Vec::new();
    if let Some(g) = ordered {
        results.push(("ordered", g));
    }
    if let Some((region, g)) = &stokes {
        results.push(("stokes", *g));
        doc.insert("plane".into(), json!([region.plane.0, region.plane.1]));
    }
    for (name, g) in &results {
        let mut entry = serde_json::Map::new();
        for &s in &subs {
            let m = g.get(s);
            let key = match s {
                SubspaceLabel::Plus => "gamma_plus",
                SubspaceLabel::Minus => "gamma_minus",
            };
            entry.insert(key.into(), json!(m));
            out.record(mat_csv_record("loop", s.name(), name, m));
            out.text(&format!("{name} gamma_{s} (unitarity residual {:.3e})\n{}", m.unitarity_residual(), mat_text(m)));
        }
        let residual = subs.iter().map(|&s| g.get(s).unitarity_residual()).fold(0.0, f64::max);
        entry.insert("unitarity_residual".into(), json!(residual));
        doc.insert((*name).into(), serde_json::Value::Object(entry));
    }
    if let [(_, a), (_, b)] = results.as_slice() {
        let mut d = serde_json::Map::new();
        for &s in &subs {
            let dist = (*a.get(s) - *b.get(s)).frobenius_norm();
            out.text(&format!("ordered vs stokes ({s}): {dist:.3e}\n"));
            d.insert(s.name().into(), json!(dist));
        }
        doc.insert("ordered_vs_stokes".into(), serde_json::Value::Object(d));
    }
    out.json(serde_json::Value::Object(doc));
    out.finish(common.out.as_deref())?;
    Ok(0)
}
