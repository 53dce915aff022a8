//! Conformance of the closed-form tables against the finite-difference
//! oracle, convention resolution, and the ordered/Stokes cross-check.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connection::{
    commutator_norm, connection_pair_numeric, field_strength_pair_numeric, CONNECTION_STEP, FIELD_STEP,
};
use crate::formulas::{self, Formula, FormulaKind};
use crate::holonomy::{
    holonomy_ordered, holonomy_stokes, loop_boundary, HolonomyError, OrderedOptions, PlanarRegion,
};
use crate::manifold::{CoordinateIndex, GrassmannianPoint, RotationConvention};
use crate::matrix::{unitary_distance, CMat2, SubspaceLabel};

pub const MIN_SAMPLES: usize = 20;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL_CONNECTION: f64 = 1e-6;
pub const DEFAULT_TOL_FIELD: f64 = 1e-5;
/// Distance kept from every tan/cot singularity when sampling.
pub const POLE_MARGIN: f64 = 0.1;
/// Conventions whose totals agree to this relative margin tie.
pub const TIE_RELATIVE: f64 = 1e-6;

const ANTI_HERMITIAN_TOL: f64 = 1e-8;
const ZERO_BLOCK_TOL: f64 = 1e-7;
const COMMUTING_PAIR_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("samples must be >= {MIN_SAMPLES}, got {0}")]
    TooFewSamples(usize),
    #[error("tolerance must be > 0")]
    BadTolerance,
    #[error(transparent)]
    Holonomy(#[from] HolonomyError),
}

/// Seeded points with every theta at least [`POLE_MARGIN`] from a pole of
/// the tables. Same seed, same points.
pub fn sample_points(samples: usize, seed: u64) -> Vec<GrassmannianPoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    while out.len() < samples {
        let th: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..std::f64::consts::FRAC_PI_2));
        let ph: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..std::f64::consts::TAU));
        let p = GrassmannianPoint::from_array([th[0], th[1], th[2], th[3], ph[0], ph[1], ph[2], ph[3]]);
        if formulas::avoids_poles(&p, POLE_MARGIN) {
            out.push(p);
        }
    }
    out
}

fn max_entry_diff(a: &CMat2<f64>, b: &CMat2<f64>) -> f64 {
    (*a - *b).max_abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionScore {
    pub convention: RotationConvention,
    pub total_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionSearch {
    pub selected: RotationConvention,
    /// Every candidate, in tie-break order.
    pub table: Vec<ConventionScore>,
    /// Conventions tied with the selected one.
    pub tied: Vec<RotationConvention>,
    /// Runner-up total over best total.
    pub margin: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Scores every convention by the summed max-entry residual between numeric
/// and closed-form connection blocks. Ties within [`TIE_RELATIVE`] go to the
/// first candidate in [`RotationConvention::all`] order.
pub fn convention_search(samples: usize, seed: u64) -> Result<ConventionSearch, VerifyError> {
    if samples < MIN_SAMPLES {
        return Err(VerifyError::TooFewSamples(samples));
    }
    let points = sample_points(samples, seed);
    let table: Vec<ConventionScore> = RotationConvention::all()
        .into_iter()
        .map(|conv| {
            let per_point: Vec<f64> = points
                .par_iter()
                .map(|p| {
                    let mut sum = 0.0;
                    for c in CoordinateIndex::ALL {
                        let num = connection_pair_numeric(p, c, conv, CONNECTION_STEP);
                        for (s, n) in SubspaceLabel::BOTH.into_iter().zip(num) {
                            let a = formulas::connection_formula(c, s).eval(p).expect("pole-free sample");
                            sum += max_entry_diff(&n, &a);
                        }
                    }
                    sum
                })
                .collect();
            ConventionScore { convention: conv, total_residual: per_point.iter().sum() }
        })
        .collect();
    let best = table.iter().map(|s| s.total_residual).fold(f64::INFINITY, f64::min);
    let tied: Vec<RotationConvention> = table
        .iter()
        .filter(|s| s.total_residual <= best * (1.0 + TIE_RELATIVE))
        .map(|s| s.convention)
        .collect();
    let selected = tied[0];
    let mut sorted: Vec<f64> = table.iter().map(|s| s.total_residual).collect();
    sorted.sort_by(f64::total_cmp);
    let margin = if sorted[0] > 0.0 { sorted[1] / sorted[0] } else { f64::INFINITY };
    Ok(ConventionSearch { selected, table, tied, margin, samples, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaResult {
    pub id: String,
    pub max_residual: f64,
    pub pass: bool,
    /// Minimal transformation of the printed formula that matches the oracle.
    pub repair: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralCheck {
    pub name: String,
    pub max_value: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub convention: RotationConvention,
    pub seed: u64,
    pub samples: usize,
    pub tol_connection: f64,
    pub tol_field: f64,
    pub formulas: Vec<FormulaResult>,
    pub structural: Vec<StructuralCheck>,
}

impl ConformanceReport {
    pub fn structural_pass(&self) -> bool {
        self.structural.iter().all(|s| s.pass)
    }

    pub fn all_pass(&self) -> bool {
        self.structural_pass() && self.formulas.iter().all(|f| f.pass)
    }

    pub fn formula(&self, id: &str) -> Option<&FormulaResult> {
        self.formulas.iter().find(|f| f.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "convention {}  seed {}  samples {}", self.convention, self.seed, self.samples);
        let _ = writeln!(out, "tol A {:e}  tol F {:e}", self.tol_connection, self.tol_field);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<24} {:>12}  {:<5} repair", "formula", "max_residual", "pass");
        for f in &self.formulas {
            let _ = writeln!(
                out,
                "{:<24} {:>12.3e}  {:<5} {}",
                f.id,
                f.max_residual,
                if f.pass { "ok" } else { "FAIL" },
                f.repair.as_deref().unwrap_or("-")
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<24} {:>12}  {:<5} tol", "structural", "max_value", "pass");
        for s in &self.structural {
            let _ = writeln!(
                out,
                "{:<24} {:>12.3e}  {:<5} {:e}",
                s.name,
                s.max_value,
                if s.pass { "ok" } else { "FAIL" },
                s.tol
            );
        }
        let passed = self.formulas.iter().filter(|f| f.pass).count();
        let _ = writeln!(out);
        let _ = writeln!(out, "{passed}/{} formulas pass; structural {}", self.formulas.len(), if self.structural_pass() { "ok" } else { "FAIL" });
        out
    }
}

/// Candidate repairs, tried in this order.
pub const REPAIRS: [&str; 4] = ["global_sign", "complex_conjugation", "subspace_swap", "antihermitian_completion"];

fn repaired(name: &str, f: &Formula, p: &GrassmannianPoint<f64>, printed: &CMat2<f64>) -> Option<CMat2<f64>> {
    match name {
        "global_sign" => Some(-*printed),
        "complex_conjugation" => Some(printed.conj()),
        "subspace_swap" => {
            let other = match f.kind {
                FormulaKind::Connection { coord, subspace } => Some(formulas::connection_formula(coord, subspace.other())),
                FormulaKind::FieldStrength { mu, nu, subspace } => {
                    formulas::field_formula(mu, nu, subspace.other()).filter(|(_, swapped)| !swapped).map(|(g, _)| g)
                }
            }?;
            other.eval(p).ok()
        }
        "antihermitian_completion" => {
            let mut m = *printed;
            m[(1, 0)] = -printed[(0, 1)].conj();
            Some(m)
        }
        _ => None,
    }
}

/// Numeric oracle value for a formula at a point.
fn oracle(f: &Formula, p: &GrassmannianPoint<f64>, conv: RotationConvention) -> CMat2<f64> {
    match f.kind {
        FormulaKind::Connection { coord, subspace } => {
            connection_pair_numeric(p, coord, conv, CONNECTION_STEP)[subspace_index(subspace)]
        }
        FormulaKind::FieldStrength { mu, nu, subspace } => {
            field_strength_pair_numeric(p, mu, nu, conv, FIELD_STEP)[subspace_index(subspace)]
        }
    }
}

fn subspace_index(s: SubspaceLabel) -> usize {
    match s {
        SubspaceLabel::Plus => 0,
        SubspaceLabel::Minus => 1,
    }
}

/// Per sample: residual of the printed formula and of each repair.
fn formula_residuals(f: &Formula, p: &GrassmannianPoint<f64>, conv: RotationConvention) -> [f64; 1 + REPAIRS.len()] {
    let num = oracle(f, p, conv);
    let mut out = [f64::INFINITY; 1 + REPAIRS.len()];
    if let Ok(printed) = f.eval(p) {
        out[0] = max_entry_diff(&num, &printed);
        for (k, name) in REPAIRS.iter().enumerate() {
            if let Some(m) = repaired(name, f, p, &printed) {
                out[k + 1] = max_entry_diff(&num, &m);
            }
        }
    }
    out
}

fn fold_max<const N: usize>(rows: impl Iterator<Item = [f64; N]>) -> [f64; N] {
    rows.fold([0.0; N], |mut acc, r| {
        for (a, x) in acc.iter_mut().zip(r) {
            // NaN-propagating max
            *a = if x.is_nan() || x > *a { x } else { *a };
        }
        acc
    })
}

fn check(name: &str, max_value: f64, tol: f64) -> StructuralCheck {
    StructuralCheck { name: name.to_string(), max_value, tol, pass: max_value <= tol }
}

/// Compares every tabulated formula with its oracle at seeded pole-free
/// points and runs the structural suite. Failures carry the first repair that
/// brings them under tolerance, if any; nothing is patched.
pub fn run_conformance(
    conv: RotationConvention,
    samples: usize,
    seed: u64,
    tol_connection: f64,
    tol_field: f64,
) -> Result<ConformanceReport, VerifyError> {
    if samples < MIN_SAMPLES {
        return Err(VerifyError::TooFewSamples(samples));
    }
    if !(tol_connection > 0.0 && tol_field > 0.0) {
        return Err(VerifyError::BadTolerance);
    }
    let points = sample_points(samples, seed);
    let all: Vec<&Formula> = formulas::connection_table().iter().chain(formulas::field_strength_table()).collect();

    let per_point: Vec<Vec<[f64; 5]>> = points
        .par_iter()
        .map(|p| all.iter().map(|f| formula_residuals(f, p, conv)).collect())
        .collect();
    let formulas = all
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let tol = match f.kind {
                FormulaKind::Connection { .. } => tol_connection,
                FormulaKind::FieldStrength { .. } => tol_field,
            };
            let maxes = fold_max(per_point.iter().map(|row| row[k]));
            let pass = maxes[0] <= tol;
            let repair = if pass {
                None
            } else {
                REPAIRS.iter().zip(&maxes[1..]).find(|(_, &r)| r <= tol).map(|(n, _)| n.to_string())
            };
            FormulaResult { id: f.id(), max_residual: maxes[0], pass, repair }
        })
        .collect();

    let structural_rows: Vec<[f64; 4]> = points.par_iter().map(|p| structural_at(p, conv)).collect();
    let m = fold_max(structural_rows.into_iter());
    let structural = vec![
        check("anti_hermitian_connection", m[0], ANTI_HERMITIAN_TOL),
        check("anti_hermitian_field", m[1], ANTI_HERMITIAN_TOL),
        check("antisymmetry_field", m[2], 0.0),
        check("zero_blocks", m[3], ZERO_BLOCK_TOL),
        check("commuting_pairs", commuting_pairs_max(&points, conv), COMMUTING_PAIR_TOL),
    ];
    Ok(ConformanceReport { convention: conv, seed, samples, tol_connection, tol_field, formulas, structural })
}

/// `[A anti-hermiticity, F anti-hermiticity, F antisymmetry, zero-block norm]`
fn structural_at(p: &GrassmannianPoint<f64>, conv: RotationConvention) -> [f64; 4] {
    let mut out = [0.0f64; 4];
    for c in CoordinateIndex::ALL {
        for a in connection_pair_numeric(p, c, conv, CONNECTION_STEP) {
            out[0] = out[0].max(a.anti_hermitian_residual());
        }
    }
    for (i, &mu) in CoordinateIndex::ALL.iter().enumerate() {
        for &nu in &CoordinateIndex::ALL[i + 1..] {
            let f = field_strength_pair_numeric(p, mu, nu, conv, FIELD_STEP);
            let g = field_strength_pair_numeric(p, nu, mu, conv, FIELD_STEP);
            for (a, b) in f.iter().zip(&g) {
                out[1] = out[1].max(a.anti_hermitian_residual());
                out[2] = out[2].max((*a + *b).max_abs());
            }
        }
    }
    for (c, s) in ZERO_BLOCKS {
        let a = connection_pair_numeric(p, c, conv, CONNECTION_STEP)[subspace_index(s)];
        out[3] = out[3].max(a.frobenius_norm());
    }
    out
}

/// Connection blocks printed as identically zero.
pub const ZERO_BLOCKS: [(CoordinateIndex, SubspaceLabel); 4] = [
    (CoordinateIndex::THETA23, SubspaceLabel::Plus),
    (CoordinateIndex::THETA24, SubspaceLabel::Plus),
    (CoordinateIndex::THETA14, SubspaceLabel::Minus),
    (CoordinateIndex::THETA24, SubspaceLabel::Minus),
];

/// Every tabulated curvature component is claimed to come from commuting
/// connection components on its subspace.
fn commuting_pairs_max(points: &[GrassmannianPoint<f64>], conv: RotationConvention) -> f64 {
    let pairs: Vec<(CoordinateIndex, CoordinateIndex, SubspaceLabel)> = formulas::field_strength_table()
        .iter()
        .filter_map(|f| match f.kind {
            FormulaKind::FieldStrength { mu, nu, subspace } => Some((mu, nu, subspace)),
            FormulaKind::Connection { .. } => None,
        })
        .collect();
    let per_point: Vec<f64> = points
        .par_iter()
        .map(|p| pairs.iter().map(|&(mu, nu, s)| commutator_norm(p, mu, nu, s, conv)).fold(0.0, f64::max))
        .collect();
    per_point.into_iter().fold(0.0, f64::max)
}

/// Ordered-versus-Stokes distance per subspace; `None` where the plane does
/// not commute on that subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesTriangle {
    pub plus: Option<f64>,
    pub minus: Option<f64>,
}

pub fn stokes_triangle(
    region: &PlanarRegion<f64>,
    conv: RotationConvention,
    steps: usize,
    quad_tol: f64,
) -> Result<StokesTriangle, VerifyError> {
    let ordered = holonomy_ordered(&loop_boundary(region, steps)?, conv, OrderedOptions::default())?;
    let mut res = [None; 2];
    let mut last_err = None;
    for s in SubspaceLabel::BOTH {
        match holonomy_stokes(region, s, conv, quad_tol) {
            Ok(g) => res[subspace_index(s)] = Some(unitary_distance(&g, ordered.get(s))),
            Err(e @ HolonomyError::NonCommutingPlane { .. }) => last_err = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    if res.iter().all(Option::is_none) {
        return Err(last_err.expect("both subspaces rejected").into());
    }
    Ok(StokesTriangle { plus: res[0], minus: res[1] })
}
