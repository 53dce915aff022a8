//! Closed-form connection and field-strength blocks as data.
//!
//! Every published matrix is stored as `prefactor * [[e11, e12], [e21, e22]]`
//! where each entry is a sum of terms `coeff * phase(phi) * prod trig(theta)`.
//! Keeping the formulas as tables (rather than code) lets the conformance
//! report name and print the exact expression that fails. Entries are
//! transcribed literally, including relations such as `e21 = conj(e12)`.

use std::fmt;
use std::sync::OnceLock;

use crate::manifold::{CoordinateIndex, GrassmannianPoint, Pair};
use crate::matrix::{CMat2, SubspaceLabel};
use crate::scalar::{c, cis, cone, czero, Real, C};

use Pair::{P13, P14, P23, P24};

/// Below this, `cos` under a `tan` (or `sin` under a `cot`) counts as a pole.
pub const POLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
    Tan,
    Cot,
}

/// `trig(mult * theta_pair)^power`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub trig: Trig,
    pub pair: Pair,
    pub mult: u8,
    pub power: u8,
}

/// Integer combination of the four phases, ordered (phi13, phi14, phi23, phi24).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseComb(pub [i8; 4]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseFn {
    One,
    Exp(PhaseComb),
    Cos(PhaseComb),
    Sin(PhaseComb),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    /// `(re, im)` of the numeric coefficient.
    pub coeff: (f64, f64),
    pub phase: PhaseFn,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Zero,
    Sum(Vec<Term>),
    /// Printed as the complex conjugate of another entry (row, col), 0-based.
    ConjOf(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaKind {
    Connection { coord: CoordinateIndex, subspace: SubspaceLabel },
    FieldStrength { mu: CoordinateIndex, nu: CoordinateIndex, subspace: SubspaceLabel },
}

impl FormulaKind {
    pub fn subspace(&self) -> SubspaceLabel {
        match *self {
            FormulaKind::Connection { subspace, .. } | FormulaKind::FieldStrength { subspace, .. } => {
                subspace
            }
        }
    }

    pub fn id(&self) -> String {
        match *self {
            FormulaKind::Connection { coord, subspace } => {
                format!("A{}_{coord}", subspace.sign_char())
            }
            FormulaKind::FieldStrength { mu, nu, subspace } => {
                format!("F{}_{mu}_{nu}", subspace.sign_char())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub kind: FormulaKind,
    pub prefactor: Term,
    pub entries: [[Entry; 2]; 2],
}

/// Evaluation hit a tan/cot singularity of the coordinate chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pole {
    pub coord: CoordinateIndex,
}

impl Formula {
    pub fn id(&self) -> String {
        self.kind.id()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.entries.iter().flatten().all(|e| matches!(e, Entry::Zero))
    }

    /// All factors used anywhere in the formula.
    pub fn factors(&self) -> impl Iterator<Item = &Factor> {
        self.prefactor.factors.iter().chain(self.entries.iter().flatten().flat_map(|e| match e {
            Entry::Sum(terms) => terms.iter().flat_map(|t| t.factors.iter()).collect::<Vec<_>>(),
            _ => Vec::new(),
        }))
    }

    pub fn eval<T: Real>(&self, p: &GrassmannianPoint<T>) -> Result<CMat2<T>, Pole> {
        let pre = self.prefactor.eval(p)?;
        let mut m = CMat2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                if let Entry::Sum(terms) = &self.entries[i][j] {
                    let mut acc = czero();
                    for t in terms {
                        acc = acc + t.eval(p)?;
                    }
                    m[(i, j)] = acc;
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                if let Entry::ConjOf(a, b) = self.entries[i][j] {
                    m[(i, j)] = m[(a, b)].conj();
                }
            }
        }
        Ok(m.scale(pre))
    }
}

impl Term {
    fn eval<T: Real>(&self, p: &GrassmannianPoint<T>) -> Result<C<T>, Pole> {
        let mut v = c(T::lit(self.coeff.0), T::lit(self.coeff.1));
        v = v * self.phase.eval(p);
        for f in &self.factors {
            v = v * c(f.eval(p)?, T::zero());
        }
        Ok(v)
    }
}

impl Factor {
    fn eval<T: Real>(&self, p: &GrassmannianPoint<T>) -> Result<T, Pole> {
        let x = p.theta(self.pair) * T::lit(f64::from(self.mult));
        let (s, co) = x.sin_cos();
        let eps = T::lit(POLE_EPS);
        let base = match self.trig {
            Trig::Sin => s,
            Trig::Cos => co,
            Trig::Tan if co.abs() < eps => return Err(self.pole()),
            Trig::Tan => s / co,
            Trig::Cot if s.abs() < eps => return Err(self.pole()),
            Trig::Cot => co / s,
        };
        Ok(base.powi(i32::from(self.power)))
    }

    fn pole(&self) -> Pole {
        Pole { coord: CoordinateIndex::theta(self.pair) }
    }

    /// Angles where this factor is singular, modulo pi, as `mult * theta` values.
    pub fn singular_residue(&self) -> Option<f64> {
        match self.trig {
            Trig::Tan => Some(std::f64::consts::FRAC_PI_2),
            Trig::Cot => Some(0.0),
            _ => None,
        }
    }
}

impl PhaseComb {
    fn angle<T: Real>(&self, p: &GrassmannianPoint<T>) -> T {
        Pair::ALL
            .iter()
            .zip(self.0)
            .fold(T::zero(), |acc, (&pair, k)| acc + p.phi(pair) * T::lit(f64::from(k)))
    }
}

impl PhaseFn {
    fn eval<T: Real>(&self, p: &GrassmannianPoint<T>) -> C<T> {
        match self {
            PhaseFn::One => cone(),
            PhaseFn::Exp(k) => cis(k.angle(p)),
            PhaseFn::Cos(k) => c(k.angle(p).cos(), T::zero()),
            PhaseFn::Sin(k) => c(k.angle(p).sin(), T::zero()),
        }
    }
}

impl fmt::Display for PhaseComb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (pair, k) in Pair::ALL.iter().zip(self.0) {
            if k == 0 {
                continue;
            }
            let sign = if k < 0 { "-" } else if first { "" } else { "+" };
            let mag = if k.abs() == 1 { String::new() } else { k.abs().to_string() };
            write!(f, "{sign}{mag}{}", CoordinateIndex::phi(*pair))?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.coeff;
        match (re, im) {
            (r, i) if i == 0.0 => write!(f, "{r}")?,
            (r, i) if r == 0.0 => write!(f, "{i}i")?,
            (r, i) => write!(f, "({r}{i:+}i)")?,
        }
        match self.phase {
            PhaseFn::One => {}
            PhaseFn::Exp(k) => write!(f, " exp(i({k}))")?,
            PhaseFn::Cos(k) => write!(f, " cos({k})")?,
            PhaseFn::Sin(k) => write!(f, " sin({k})")?,
        }
        for x in &self.factors {
            let name = match x.trig {
                Trig::Sin => "sin",
                Trig::Cos => "cos",
                Trig::Tan => "tan",
                Trig::Cot => "cot",
            };
            let pow = if x.power == 1 { String::new() } else { format!("^{}", x.power) };
            let mult = if x.mult == 1 { String::new() } else { x.mult.to_string() };
            write!(f, " {name}{pow}({mult}{})", CoordinateIndex::theta(x.pair))?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = [{}] * [", self.id(), self.prefactor)?;
        for (i, row) in self.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                let text = match e {
                    Entry::Zero => "0".to_string(),
                    Entry::ConjOf(a, b) => format!("conj(e{}{})", a + 1, b + 1),
                    Entry::Sum(ts) => ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" + "),
                };
                write!(f, "e{}{}: {text}", i + 1, j + 1)?;
                if i + j < 2 {
                    write!(f, "; ")?;
                }
            }
        }
        write!(f, "]")
    }
}

// ---- table construction helpers ----

const ONE: (f64, f64) = (1.0, 0.0);
const NEG: (f64, f64) = (-1.0, 0.0);
const TWO: (f64, f64) = (2.0, 0.0);
const I: (f64, f64) = (0.0, 1.0);
const NEG_I: (f64, f64) = (0.0, -1.0);
const TWO_I: (f64, f64) = (0.0, 2.0);
const NEG_TWO_I: (f64, f64) = (0.0, -2.0);
const HALF_I: (f64, f64) = (0.0, 0.5);
const NEG_HALF_I: (f64, f64) = (0.0, -0.5);

fn f(trig: Trig, pair: Pair, mult: u8, power: u8) -> Factor {
    Factor { trig, pair, mult, power }
}
fn sin(p: Pair) -> Factor {
    f(Trig::Sin, p, 1, 1)
}
fn sin_sq(p: Pair) -> Factor {
    f(Trig::Sin, p, 1, 2)
}
fn sin2(p: Pair) -> Factor {
    f(Trig::Sin, p, 2, 1)
}
fn cos(p: Pair) -> Factor {
    f(Trig::Cos, p, 1, 1)
}
fn cos_sq(p: Pair) -> Factor {
    f(Trig::Cos, p, 1, 2)
}
fn cos2(p: Pair) -> Factor {
    f(Trig::Cos, p, 2, 1)
}
fn tan(p: Pair) -> Factor {
    f(Trig::Tan, p, 1, 1)
}
fn cot(p: Pair) -> Factor {
    f(Trig::Cot, p, 1, 1)
}

fn ex(k: [i8; 4]) -> PhaseFn {
    PhaseFn::Exp(PhaseComb(k))
}
fn pcos(k: [i8; 4]) -> PhaseFn {
    PhaseFn::Cos(PhaseComb(k))
}
fn psin(k: [i8; 4]) -> PhaseFn {
    PhaseFn::Sin(PhaseComb(k))
}

fn t(coeff: (f64, f64), phase: PhaseFn, factors: &[Factor]) -> Term {
    Term { coeff, phase, factors: factors.to_vec() }
}
fn tr(coeff: (f64, f64), factors: &[Factor]) -> Term {
    t(coeff, PhaseFn::One, factors)
}
fn one() -> Term {
    tr(ONE, &[])
}

fn z() -> Entry {
    Entry::Zero
}
fn e(terms: Vec<Term>) -> Entry {
    Entry::Sum(terms)
}
fn e1(term: Term) -> Entry {
    Entry::Sum(vec![term])
}
fn conj12() -> Entry {
    Entry::ConjOf(0, 1)
}

fn conn(coord: CoordinateIndex, s: SubspaceLabel, prefactor: Term, entries: [[Entry; 2]; 2]) -> Formula {
    Formula { kind: FormulaKind::Connection { coord, subspace: s }, prefactor, entries }
}
fn field(
    mu: CoordinateIndex,
    nu: CoordinateIndex,
    s: SubspaceLabel,
    prefactor: Term,
    entries: [[Entry; 2]; 2],
) -> Formula {
    Formula { kind: FormulaKind::FieldStrength { mu, nu, subspace: s }, prefactor, entries }
}
fn zero_conn(coord: CoordinateIndex, s: SubspaceLabel) -> Formula {
    conn(coord, s, one(), [[z(), z()], [z(), z()]])
}
fn zero_field(mu: CoordinateIndex, nu: CoordinateIndex, s: SubspaceLabel) -> Formula {
    field(mu, nu, s, one(), [[z(), z()], [z(), z()]])
}
/// `prefactor * diag(0, 1)`
fn lower_diag(mu: CoordinateIndex, nu: CoordinateIndex, s: SubspaceLabel, prefactor: Term) -> Formula {
    field(mu, nu, s, prefactor, [[z(), z()], [z(), e1(one())]])
}

use CoordinateIndex as Ci;
use SubspaceLabel::{Minus, Plus};

/// The sixteen connection blocks, in coordinate order, plus before minus.
pub fn connection_table() -> &'static [Formula] {
    static TABLE: OnceLock<Vec<Formula>> = OnceLock::new();
    TABLE.get_or_init(build_connection_table)
}

/// Every printed field-strength component, including the stated zeros.
pub fn field_strength_table() -> &'static [Formula] {
    static TABLE: OnceLock<Vec<Formula>> = OnceLock::new();
    TABLE.get_or_init(build_field_table)
}

pub fn connection_formula(coord: CoordinateIndex, s: SubspaceLabel) -> &'static Formula {
    connection_table()
        .iter()
        .find(|f| f.kind == FormulaKind::Connection { coord, subspace: s })
        .expect("connection table covers every coordinate and subspace")
}

/// Looks up `F_{mu nu}` on `s`. Returns the formula and `true` when it is
/// tabulated with the indices swapped (the caller negates it).
pub fn field_formula(
    mu: CoordinateIndex,
    nu: CoordinateIndex,
    s: SubspaceLabel,
) -> Option<(&'static Formula, bool)> {
    let table = field_strength_table();
    let direct = table
        .iter()
        .find(|f| f.kind == FormulaKind::FieldStrength { mu, nu, subspace: s });
    if let Some(f) = direct {
        return Some((f, false));
    }
    table
        .iter()
        .find(|f| f.kind == FormulaKind::FieldStrength { mu: nu, nu: mu, subspace: s })
        .map(|f| (f, true))
}

fn build_connection_table() -> Vec<Formula> {
    vec![
        // theta13
        conn(
            Ci::THETA13,
            Plus,
            tr(ONE, &[sin(P23), cos(P14), cos(P24)]),
            [
                [z(), e1(t(NEG, ex([1, 0, -1, 0]), &[]))],
                [
                    e1(t(ONE, ex([-1, 0, 1, 0]), &[])),
                    e1(t(TWO_I, psin([1, -1, -1, 1]), &[tan(P14), sin(P24)])),
                ],
            ],
        ),
        conn(
            Ci::THETA13,
            Minus,
            tr(ONE, &[sin(P14), cos(P23), cos(P24)]),
            [
                [z(), e1(t(NEG, ex([-1, 1, 0, 0]), &[]))],
                [
                    e1(t(ONE, ex([1, -1, 0, 0]), &[])),
                    e1(t(TWO_I, psin([-1, 1, 1, -1]), &[tan(P23), sin(P24)])),
                ],
            ],
        ),
        // theta14
        conn(
            Ci::THETA14,
            Plus,
            tr(ONE, &[sin(P24)]),
            [
                [z(), e1(t(NEG, ex([0, 1, 0, -1]), &[]))],
                [e1(t(ONE, ex([0, -1, 0, 1]), &[])), z()],
            ],
        ),
        zero_conn(Ci::THETA14, Minus),
        // theta23
        zero_conn(Ci::THETA23, Plus),
        conn(
            Ci::THETA23,
            Minus,
            tr(ONE, &[sin(P24)]),
            [
                [z(), e1(t(NEG, ex([0, 0, -1, 1]), &[]))],
                [e1(t(ONE, ex([0, 0, 1, -1]), &[])), z()],
            ],
        ),
        // theta24
        zero_conn(Ci::THETA24, Plus),
        zero_conn(Ci::THETA24, Minus),
        // phi13
        conn(
            Ci::PHI13,
            Plus,
            one(),
            [
                [
                    e1(tr(NEG_I, &[sin_sq(P13), cos_sq(P14)])),
                    e(vec![
                        t(NEG_HALF_I, ex([1, 0, -1, 0]), &[sin2(P13), sin(P23), cos(P14), cos(P24)]),
                        t(HALF_I, ex([0, -1, 0, 1]), &[sin_sq(P13), sin2(P14), sin(P24)]),
                    ]),
                ],
                [
                    conj12(),
                    e(vec![
                        tr(I, &[sin_sq(P13), sin_sq(P23), cos_sq(P24)]),
                        tr(NEG_I, &[sin_sq(P13), sin_sq(P24), sin_sq(P14)]),
                        t(HALF_I, pcos([-1, 1, 1, -1]), &[sin2(P13), sin(P14), sin(P23), sin2(P24)]),
                    ]),
                ],
            ],
        ),
        conn(
            Ci::PHI13,
            Minus,
            one(),
            [
                [
                    e1(tr(I, &[sin_sq(P13), cos_sq(P23)])),
                    e(vec![
                        t(NEG_HALF_I, ex([0, 0, -1, 1]), &[sin_sq(P13), sin2(P23), sin(P24)]),
                        t(HALF_I, ex([-1, 1, 0, 0]), &[sin2(P13), sin(P14), cos(P23), cos(P24)]),
                    ]),
                ],
                [
                    conj12(),
                    e(vec![
                        tr(I, &[sin_sq(P13), sin_sq(P23), sin_sq(P24)]),
                        tr(NEG_I, &[sin_sq(P13), sin_sq(P14), cos_sq(P24)]),
                        t(NEG_HALF_I, pcos([1, -1, -1, 1]), &[sin2(P13), sin(P14), sin(P23), sin2(P24)]),
                    ]),
                ],
            ],
        ),
        // phi14
        conn(
            Ci::PHI14,
            Plus,
            tr(I, &[sin_sq(P14)]),
            [
                [e1(tr(NEG, &[])), e1(t(NEG, ex([0, 1, 0, -1]), &[cot(P14), sin(P24)]))],
                [e1(t(NEG, ex([0, -1, 0, 1]), &[cot(P14), sin(P24)])), e1(tr(ONE, &[sin_sq(P24)]))],
            ],
        ),
        conn(
            Ci::PHI14,
            Minus,
            tr(I, &[sin_sq(P14), cos_sq(P24)]),
            [[z(), z()], [z(), e1(one())]],
        ),
        // phi23
        conn(
            Ci::PHI23,
            Plus,
            tr(I, &[sin_sq(P23), cos_sq(P24)]),
            [[z(), z()], [z(), e1(tr(NEG, &[]))]],
        ),
        conn(
            Ci::PHI23,
            Minus,
            tr(I, &[sin_sq(P23)]),
            [
                [e1(one()), e1(t(ONE, ex([0, 0, -1, 1]), &[cot(P23), sin(P24)]))],
                [e1(t(ONE, ex([0, 0, 1, -1]), &[cot(P23), sin(P24)])), e1(tr(NEG, &[sin_sq(P24)]))],
            ],
        ),
        // phi24
        conn(Ci::PHI24, Plus, tr(I, &[sin_sq(P24)]), [[z(), z()], [z(), e1(tr(NEG, &[]))]]),
        conn(Ci::PHI24, Minus, tr(I, &[sin_sq(P24)]), [[z(), z()], [z(), e1(one())]]),
    ]
}

fn build_field_table() -> Vec<Formula> {
    vec![
        // (theta24, phi) family, commuting on both subspaces
        field(
            Ci::THETA24,
            Ci::PHI13,
            Plus,
            one(),
            [
                [
                    z(),
                    e(vec![
                        t(HALF_I, ex([1, 0, -1, 0]), &[sin2(P13), sin(P23), cos(P14), sin(P24)]),
                        t(HALF_I, ex([0, -1, 0, 1]), &[sin2(P14), sin_sq(P13), cos(P24)]),
                    ]),
                ],
                [
                    conj12(),
                    e(vec![
                        tr(NEG_I, &[sin(P13), sin2(P24), sin_sq(P14)]),
                        tr(NEG_I, &[sin(P13), sin2(P24), sin_sq(P23)]),
                        t(I, pcos([-1, 1, 1, -1]), &[sin2(P13), sin(P14), sin(P23), cos2(P24)]),
                    ]),
                ],
            ],
        ),
        field(
            Ci::THETA24,
            Ci::PHI13,
            Minus,
            one(),
            [
                [
                    z(),
                    e(vec![
                        t(NEG_HALF_I, ex([0, 0, 1, -1]), &[sin_sq(P13), sin2(P23), cos(P24)]),
                        t(NEG_HALF_I, ex([1, -1, 0, 0]), &[sin2(P13), sin(P14), cos(P23), sin(P24)]),
                    ]),
                ],
                [
                    conj12(),
                    e(vec![
                        tr(I, &[sin_sq(P13), sin2(P24), sin_sq(P23)]),
                        tr(I, &[sin_sq(P13), sin2(P24), sin_sq(P14)]),
                        t(NEG_I, pcos([1, -1, -1, 1]), &[sin2(P13), sin(P14), sin(P23), cos2(P24)]),
                    ]),
                ],
            ],
        ),
        field(
            Ci::THETA24,
            Ci::PHI14,
            Plus,
            one(),
            [
                [z(), e1(t(NEG_HALF_I, ex([0, 1, 0, -1]), &[sin2(P14), cos(P24)]))],
                [
                    e1(t(NEG_HALF_I, ex([0, -1, 0, 1]), &[sin2(P14), cos(P24)])),
                    e1(tr(I, &[sin_sq(P14), sin2(P24)])),
                ],
            ],
        ),
        lower_diag(Ci::THETA24, Ci::PHI14, Minus, tr(NEG_I, &[sin_sq(P14), sin2(P24)])),
        lower_diag(Ci::THETA24, Ci::PHI23, Plus, tr(I, &[sin_sq(P23), sin2(P24)])),
        field(
            Ci::THETA24,
            Ci::PHI23,
            Minus,
            one(),
            [
                [z(), e1(t(HALF_I, ex([0, 0, -1, 1]), &[sin2(P23), cos(P24)]))],
                [
                    e1(t(HALF_I, ex([0, 0, 1, -1]), &[sin2(P23), cos(P24)])),
                    e1(tr(NEG_I, &[sin_sq(P23), sin2(P24)])),
                ],
            ],
        ),
        lower_diag(Ci::THETA24, Ci::PHI24, Plus, tr(NEG_I, &[sin2(P24)])),
        lower_diag(Ci::THETA24, Ci::PHI24, Minus, tr(I, &[sin2(P24)])),
        // commuting on S+ only
        field(
            Ci::THETA23,
            Ci::PHI13,
            Plus,
            tr(HALF_I, &[cos(P24), cos(P23), sin2(P13)]),
            [
                [z(), e1(t(NEG, ex([1, 0, -1, 0]), &[cos(P14)]))],
                [
                    e1(t(NEG, ex([-1, 0, 1, 0]), &[cos(P14)])),
                    e(vec![
                        tr(TWO, &[tan(P13), sin(P23)]),
                        t(TWO, pcos([-1, 1, 1, -1]), &[sin(P14), sin(P24)]),
                    ]),
                ],
            ],
        ),
        lower_diag(Ci::THETA23, Ci::PHI23, Plus, tr(NEG_I, &[cos_sq(P24), sin2(P23)])),
        zero_field(Ci::THETA23, Ci::PHI14, Plus),
        zero_field(Ci::THETA23, Ci::PHI24, Plus),
        // commuting on S- only
        field(
            Ci::THETA14,
            Ci::PHI13,
            Minus,
            tr(NEG_HALF_I, &[sin2(P13), cos(P14), cos(P24)]),
            [
                [z(), e1(t(NEG, ex([-1, 1, 0, 0]), &[cos(P23)]))],
                [
                    e1(t(NEG, ex([1, -1, 0, 0]), &[cos(P23)])),
                    e(vec![
                        tr(TWO, &[tan(P13), sin(P14), cos(P24)]),
                        t(TWO, pcos([1, -1, -1, 1]), &[sin(P23), sin(P24)]),
                    ]),
                ],
            ],
        ),
        lower_diag(Ci::THETA14, Ci::PHI14, Minus, tr(I, &[cos_sq(P24), sin2(P14)])),
        zero_field(Ci::THETA14, Ci::PHI23, Minus),
        zero_field(Ci::THETA14, Ci::PHI24, Minus),
        // (theta, theta) family
        field(
            Ci::THETA13,
            Ci::THETA24,
            Plus,
            tr(ONE, &[sin(P23), cos(P14)]),
            [
                [z(), e1(t(NEG, ex([1, 0, -1, 0]), &[sin(P24)]))],
                [
                    e1(t(ONE, ex([-1, 0, 1, 0]), &[sin(P24)])),
                    e1(t(NEG_TWO_I, psin([1, -1, -1, 1]), &[tan(P14), cos2(P24)])),
                ],
            ],
        ),
        field(
            Ci::THETA13,
            Ci::THETA24,
            Minus,
            tr(ONE, &[sin(P14), cos(P23)]),
            [
                [z(), e1(t(NEG, ex([-1, 1, 0, 0]), &[sin(P24)]))],
                [
                    e1(t(ONE, ex([1, -1, 0, 0]), &[sin(P24)])),
                    e1(t(NEG_TWO_I, psin([-1, 1, 1, -1]), &[tan(P23), cos2(P24)])),
                ],
            ],
        ),
        zero_field(Ci::THETA14, Ci::THETA23, Plus),
        zero_field(Ci::THETA14, Ci::THETA23, Minus),
        field(
            Ci::THETA14,
            Ci::THETA24,
            Plus,
            tr(NEG, &[cos(P24)]),
            [
                [z(), e1(t(NEG, ex([0, 1, 0, -1]), &[]))],
                [e1(t(ONE, ex([0, -1, 0, 1]), &[])), z()],
            ],
        ),
        zero_field(Ci::THETA14, Ci::THETA13, Minus),
        zero_field(Ci::THETA23, Ci::THETA24, Plus),
        field(
            Ci::THETA23,
            Ci::THETA24,
            Minus,
            tr(NEG, &[cos(P24)]),
            [
                [z(), e1(t(NEG, ex([0, 0, -1, 1]), &[]))],
                [e1(t(ONE, ex([0, 0, 1, -1]), &[])), z()],
            ],
        ),
        field(
            Ci::THETA13,
            Ci::THETA23,
            Plus,
            tr(NEG, &[cos(P23), cos(P14), cos(P24)]),
            [
                [z(), e1(t(NEG, ex([1, 0, -1, 0]), &[]))],
                [
                    e1(t(ONE, ex([-1, 0, 1, 0]), &[])),
                    e1(t(TWO_I, psin([1, -1, -1, 1]), &[tan(P14), sin(P24)])),
                ],
            ],
        ),
        field(
            Ci::THETA13,
            Ci::THETA14,
            Minus,
            tr(NEG, &[cos(P14), cos(P23), cos(P24)]),
            [
                [z(), e1(t(NEG, ex([-1, 1, 0, 0]), &[]))],
                [
                    e1(t(ONE, ex([1, -1, 0, 0]), &[])),
                    e1(t(TWO_I, psin([-1, 1, 1, -1]), &[tan(P23), sin(P24)])),
                ],
            ],
        ),
    ]
}

/// True if `p` keeps every tan/cot argument of every tabulated formula at
/// least `margin` radians from its singularities.
pub fn avoids_poles(p: &GrassmannianPoint<f64>, margin: f64) -> bool {
    singular_thetas().iter().all(|&(pair, mult, residue)| {
        let x = p.theta(pair) * f64::from(mult);
        let pi = std::f64::consts::PI;
        let d = (x - residue).rem_euclid(pi);
        d.min(pi - d) >= margin
    })
}

/// `(pair, mult, residue)` for every distinct singular factor in the tables.
fn singular_thetas() -> &'static [(Pair, u8, f64)] {
    static SET: OnceLock<Vec<(Pair, u8, f64)>> = OnceLock::new();
    SET.get_or_init(|| {
        let mut out: Vec<(Pair, u8, f64)> = Vec::new();
        for formula in connection_table().iter().chain(field_strength_table()) {
            for fac in formula.factors() {
                if let Some(r) = fac.singular_residue() {
                    let key = (fac.pair, fac.mult, r);
                    if !out.contains(&key) {
                        out.push(key);
                    }
                }
            }
        }
        out
    })
}
