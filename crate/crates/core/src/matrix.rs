//! Dense complex matrices of dimension 2 and 4.
//!
//! Only the two sizes that occur in the model are supported; the dimension is a
//! const parameter and any other value fails to compile on first use.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{c, ci, cis, cone, czero, Real, C};

/// Absolute tolerance for structural identities (unitarity, hermiticity).
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Tolerance for analytic-vs-numeric conformance of well-conditioned quantities.
pub const CONFORMANCE_TOL: f64 = 1e-8;
/// Tolerance for comparisons against finite-difference oracles.
pub const FINITE_DIFF_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix is not anti-hermitian (max |m + m^dagger| = {residual:e}, tol {tol:e})")]
    NotAntiHermitian { residual: f64, tol: f64 },
    #[error("matrix is not hermitian (max |m - m^dagger| = {residual:e}, tol {tol:e})")]
    NotHermitian { residual: f64, tol: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// Which degenerate eigenspace of `H0` a 2x2 block refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubspaceLabel {
    /// span{|1>, |2>}, eigenvalue +omega/2
    Plus,
    /// span{|3>, |4>}, eigenvalue -omega/2
    Minus,
}

impl SubspaceLabel {
    pub const BOTH: [SubspaceLabel; 2] = [SubspaceLabel::Plus, SubspaceLabel::Minus];

    /// Zero-based offset of the block inside a 4x4 matrix.
    pub fn offset(self) -> usize {
        match self {
            SubspaceLabel::Plus => 0,
            SubspaceLabel::Minus => 2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            SubspaceLabel::Plus => SubspaceLabel::Minus,
            SubspaceLabel::Minus => SubspaceLabel::Plus,
        }
    }

    pub fn sign_char(self) -> char {
        match self {
            SubspaceLabel::Plus => '+',
            SubspaceLabel::Minus => '-',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SubspaceLabel::Plus => "plus",
            SubspaceLabel::Minus => "minus",
        }
    }
}

impl std::fmt::Display for SubspaceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SubspaceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus" | "+" => Ok(SubspaceLabel::Plus),
            "minus" | "-" => Ok(SubspaceLabel::Minus),
            _ => Err(format!("unknown subspace `{s}` (expected plus or minus)")),
        }
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct CMat<T, const N: usize> {
    data: [[C<T>; N]; N],
}

impl<T: Real, const N: usize> CMat<T, N> {
    const DIM_OK: () = assert!(N == 2 || N == 4, "CMat supports only dimensions 2 and 4");

    pub fn zeros() -> Self {
        #[allow(clippy::let_unit_value)]
        let () = Self::DIM_OK;
        CMat { data: [[czero(); N]; N] }
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = cone();
        }
        m
    }

    pub fn from_rows(rows: [[C<T>; N]; N]) -> Self {
        #[allow(clippy::let_unit_value)]
        let () = Self::DIM_OK;
        CMat { data: rows }
    }

    pub fn from_diag(diag: [C<T>; N]) -> Self {
        let mut m = Self::zeros();
        for (i, d) in diag.into_iter().enumerate() {
            m.data[i][i] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        N
    }

    pub fn rows(&self) -> &[[C<T>; N]; N] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                out.data[i][j] = self.data[j][i].conj();
            }
        }
        out
    }

    pub fn scale(&self, k: C<T>) -> Self {
        let mut out = *self;
        out.data.iter_mut().flatten().for_each(|z| *z = *z * k);
        out
    }

    pub fn scale_re(&self, k: T) -> Self {
        self.scale(c(k, T::zero()))
    }

    /// Elementwise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        let mut out = *self;
        out.data.iter_mut().flatten().for_each(|z| *z = z.conj());
        out
    }

    pub fn trace(&self) -> C<T> {
        (0..N).fold(czero(), |acc, i| acc + self.data[i][i])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `A B - B A`
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Projection onto the anti-hermitian part, `(M - M^dagger) / 2`.
    pub fn anti_hermitian_part(&self) -> Self {
        (*self - self.dagger()).scale_re(T::lit(0.5))
    }

    /// Projection onto the hermitian part, `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.dagger()).scale_re(T::lit(0.5))
    }

    /// `max_ij |m_ij + conj(m_ji)|`
    pub fn anti_hermitian_residual(&self) -> T {
        (*self + self.dagger()).max_abs()
    }

    /// `max_ij |m_ij - conj(m_ji)|`
    pub fn hermitian_residual(&self) -> T {
        (*self - self.dagger()).max_abs()
    }

    /// `|| U^dagger U - I ||_F`
    pub fn unitarity_residual(&self) -> T {
        (self.dagger() * *self - Self::identity()).frobenius_norm()
    }

    /// Eigendecomposition of a hermitian matrix by cyclic complex Jacobi
    /// rotations. Returns eigenvalues in ascending order and the unitary whose
    /// columns are the matching eigenvectors.
    pub fn hermitian_eigen(&self, tol: T) -> Result<(Eigen<T, N>, Self), MatrixError> {
        if !self.is_finite() {
            return Err(MatrixError::NonFinite);
        }
        let residual = self.hermitian_residual();
        if residual > tol {
            return Err(MatrixError::NotHermitian {
                residual: residual.to_f64_lossy(),
                tol: tol.to_f64_lossy(),
            });
        }
        let (vals, vecs) = jacobi_eigen(&self.hermitian_part());
        Ok((Eigen(vals), vecs))
    }

    /// `exp(m)` for anti-hermitian `m`, through the spectral decomposition of
    /// the hermitian matrix `-i m`. The result is unitary up to rounding.
    pub fn expm_antihermitian(&self, tol: T) -> Result<Self, MatrixError> {
        if !self.is_finite() {
            return Err(MatrixError::NonFinite);
        }
        let residual = self.anti_hermitian_residual();
        if residual > tol {
            return Err(MatrixError::NotAntiHermitian {
                residual: residual.to_f64_lossy(),
                tol: tol.to_f64_lossy(),
            });
        }
        // -i m is hermitian; symmetrize away the admitted rounding first.
        let h = self.anti_hermitian_part().scale(-ci::<T>());
        let (vals, v) = jacobi_eigen(&h.hermitian_part());
        let phases = vals.map(cis);
        Ok(v * Self::from_diag(phases) * v.dagger())
    }

    /// Closest unitary in Frobenius norm, `M (M^dagger M)^{-1/2}`.
    /// `None` if `M` is numerically singular.
    pub fn polar_unitary(&self) -> Option<Self> {
        let gram = self.dagger() * *self;
        let (vals, v) = jacobi_eigen(&gram.hermitian_part());
        if vals.iter().any(|&x| x <= T::epsilon()) {
            return None;
        }
        let inv_sqrt = Self::from_diag(vals.map(|x| c(x.sqrt().recip(), T::zero())));
        Some(*self * v * inv_sqrt * v.dagger())
    }
}

/// Ascending eigenvalues of a hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen<T, const N: usize>(pub [T; N]);

/// Frobenius distance `|| u - v ||_F`. Symmetric, zero iff equal.
pub fn unitary_distance<T: Real, const N: usize>(u: &CMat<T, N>, v: &CMat<T, N>) -> T {
    (*u - *v).frobenius_norm()
}

pub type CMat2<T> = CMat<T, 2>;
pub type CMat4<T> = CMat<T, 4>;

impl<T: Real> CMat<T, 4> {
    /// The 2x2 diagonal block acting on one degenerate subspace: rows and
    /// columns {1,2} for `Plus`, {3,4} for `Minus`.
    pub fn subspace_block(&self, s: SubspaceLabel) -> CMat2<T> {
        let o = s.offset();
        CMat::from_rows([
            [self.data[o][o], self.data[o][o + 1]],
            [self.data[o + 1][o], self.data[o + 1][o + 1]],
        ])
    }

    /// Off-diagonal 2x2 block coupling `from` into `to` (rows of `to`, columns of `from`).
    pub fn cross_block(&self, to: SubspaceLabel, from: SubspaceLabel) -> CMat2<T> {
        let (r, k) = (to.offset(), from.offset());
        CMat::from_rows([
            [self.data[r][k], self.data[r][k + 1]],
            [self.data[r + 1][k], self.data[r + 1][k + 1]],
        ])
    }

    /// Block-diagonal 4x4 matrix from the two subspace blocks.
    pub fn block_diag(plus: &CMat2<T>, minus: &CMat2<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m.data[i][j] = plus[(i, j)];
                m.data[i + 2][j + 2] = minus[(i, j)];
            }
        }
        m
    }
}

fn jacobi_eigen<T: Real, const N: usize>(h: &CMat<T, N>) -> ([T; N], CMat<T, N>) {
    let mut a = *h;
    let mut v = CMat::<T, N>::identity();
    let scale = a.frobenius_norm().max(T::min_positive_value());
    let stop = T::epsilon() * T::epsilon() * scale * scale;

    for _sweep in 0..64 {
        let off: T = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + a.data[i][j].norm_sqr());
        if off <= stop {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let b = a.data[p][q];
                let beta = b.norm();
                if beta.is_zero() {
                    continue;
                }
                // Phase-rotate q so that the (p,q) entry becomes real, then
                // apply the real symmetric Jacobi rotation.
                let phase = b / c(beta, T::zero());
                let app = a.data[p][p].re;
                let aqq = a.data[q][q].re;
                let zeta = (aqq - app) / (T::lit(2.0) * beta);
                let t = if zeta >= T::zero() {
                    T::one() / (zeta + (T::one() + zeta * zeta).sqrt())
                } else {
                    -T::one() / (-zeta + (T::one() + zeta * zeta).sqrt())
                };
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = t * cs;
                // G = D R with D = diag(1, conj(phase)) on (p,q) and
                // R = [[c, s], [-s, c]].
                let mut g = CMat::<T, N>::identity();
                g.data[p][p] = c(cs, T::zero());
                g.data[p][q] = c(sn, T::zero());
                g.data[q][p] = phase.conj() * c(-sn, T::zero());
                g.data[q][q] = phase.conj() * c(cs, T::zero());
                a = g.dagger() * a * g;
                v = v * g;
                a.data[p][q] = czero();
                a.data[q][p] = czero();
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| {
        a.data[i][i]
            .re
            .partial_cmp(&a.data[j][j].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.map(|k| a.data[k][k].re);
    let mut vecs = CMat::<T, N>::zeros();
    for (col, &k) in order.iter().enumerate() {
        for row in 0..N {
            vecs.data[row][col] = v.data[row][k];
        }
    }
    (vals, vecs)
}

impl<T, const N: usize> Index<(usize, usize)> for CMat<T, N> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i][j]
    }
}

impl<T, const N: usize> IndexMut<(usize, usize)> for CMat<T, N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i][j]
    }
}

impl<T: Real, const N: usize> Mul for CMat<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.data[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..N {
                    out.data[i][j] = out.data[i][j] + a * rhs.data[k][j];
                }
            }
        }
        out
    }
}

impl<T: Real, const N: usize> Add for CMat<T, N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Real, const N: usize> AddAssign for CMat<T, N> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..N {
            for j in 0..N {
                self.data[i][j] = self.data[i][j] + rhs.data[i][j];
            }
        }
    }
}

impl<T: Real, const N: usize> Sub for CMat<T, N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.data[i][j] = self.data[i][j] - rhs.data[i][j];
            }
        }
        self
    }
}

impl<T: Real, const N: usize> Neg for CMat<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-T::one())
    }
}

impl<T: Real, const N: usize> std::fmt::Debug for CMat<T, N> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMat{N}[")?;
        for row in &self.data {
            write!(f, "  ")?;
            for z in row {
                write!(f, "({:+.6e} {:+.6e}i) ", z.re.to_f64_lossy(), z.im.to_f64_lossy())?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Entries serialize as nested `[[ [re, im], ... ], ...]` arrays.
impl<T: Real + Serialize, const N: usize> Serialize for CMat<T, N> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[T; 2]>> = self
            .data
            .iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de, T: Real + Deserialize<'de>, const N: usize> Deserialize<'de> for CMat<T, N> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let rows: Vec<Vec<[T; 2]>> = Vec::deserialize(deserializer)?;
        if rows.len() != N || rows.iter().any(|r| r.len() != N) {
            return Err(D::Error::custom(format!("expected a {N}x{N} matrix")));
        }
        let mut m = Self::zeros();
        for (i, row) in rows.iter().enumerate() {
            for (j, [re, im]) in row.iter().enumerate() {
                m.data[i][j] = c(*re, *im);
            }
        }
        if !m.is_finite() {
            return Err(D::Error::custom("non-finite matrix entry"));
        }
        Ok(m)
    }
}
