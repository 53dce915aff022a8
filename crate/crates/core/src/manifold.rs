//! Coordinates on G(4,2), the two-level rotations that generate it, and the
//! Hamiltonian family `H(sigma) = U(sigma) H0 U(sigma)^dagger`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{CMat2, CMat4};
use crate::scalar::{c, ci, cis, Real};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifoldError {
    #[error("no rotation between levels {0} and {1}: allowed arrows are i in {{1,2}}, j in {{3,4}}")]
    InvalidPair(usize, usize),
}

/// One of the four allowed arrows `i -> j`, `i in {1,2}`, `j in {3,4}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pair {
    P13,
    P14,
    P23,
    P24,
}

impl Pair {
    /// Factor order of `U(sigma) = U(z13) U(z14) U(z23) U(z24)`.
    pub const ALL: [Pair; 4] = [Pair::P13, Pair::P14, Pair::P23, Pair::P24];

    /// 1-based level indices.
    pub fn levels(self) -> (usize, usize) {
        match self {
            Pair::P13 => (1, 3),
            Pair::P14 => (1, 4),
            Pair::P23 => (2, 3),
            Pair::P24 => (2, 4),
        }
    }

    pub fn from_levels(i: usize, j: usize) -> Result<Self, ManifoldError> {
        match (i, j) {
            (1, 3) => Ok(Pair::P13),
            (1, 4) => Ok(Pair::P14),
            (2, 3) => Ok(Pair::P23),
            (2, 4) => Ok(Pair::P24),
            _ => Err(ManifoldError::InvalidPair(i, j)),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn digits(self) -> &'static str {
        match self {
            Pair::P13 => "13",
            Pair::P14 => "14",
            Pair::P23 => "23",
            Pair::P24 => "24",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoordKind {
    Theta,
    Phi,
}

/// One of the eight real coordinates `theta_ij`, `phi_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordinateIndex {
    pub kind: CoordKind,
    pub pair: Pair,
}

impl CoordinateIndex {
    pub const fn theta(pair: Pair) -> Self {
        CoordinateIndex { kind: CoordKind::Theta, pair }
    }

    pub const fn phi(pair: Pair) -> Self {
        CoordinateIndex { kind: CoordKind::Phi, pair }
    }

    pub const THETA13: Self = Self::theta(Pair::P13);
    pub const THETA14: Self = Self::theta(Pair::P14);
    pub const THETA23: Self = Self::theta(Pair::P23);
    pub const THETA24: Self = Self::theta(Pair::P24);
    pub const PHI13: Self = Self::phi(Pair::P13);
    pub const PHI14: Self = Self::phi(Pair::P14);
    pub const PHI23: Self = Self::phi(Pair::P23);
    pub const PHI24: Self = Self::phi(Pair::P24);

    /// All eight coordinates: thetas first, then phis, each in pair order.
    pub const ALL: [CoordinateIndex; 8] = [
        Self::THETA13,
        Self::THETA14,
        Self::THETA23,
        Self::THETA24,
        Self::PHI13,
        Self::PHI14,
        Self::PHI23,
        Self::PHI24,
    ];

    /// Position in [`CoordinateIndex::ALL`] and in the flat coordinate vector.
    pub fn slot(self) -> usize {
        match self.kind {
            CoordKind::Theta => self.pair.index(),
            CoordKind::Phi => 4 + self.pair.index(),
        }
    }

    pub fn from_slot(slot: usize) -> Option<Self> {
        Self::ALL.get(slot).copied()
    }

    /// JSON / CLI key, e.g. `theta13`.
    pub fn key(self) -> &'static str {
        Self::KEYS[self.slot()]
    }

    const KEYS: [&'static str; 8] = [
        "theta13", "theta14", "theta23", "theta24", "phi13", "phi14", "phi23", "phi24",
    ];
}

impl fmt::Display for CoordinateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            CoordKind::Theta => "theta",
            CoordKind::Phi => "phi",
        };
        write!(f, "{k}{}", self.pair.digits())
    }
}

impl FromStr for CoordinateIndex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::KEYS
            .iter()
            .position(|k| *k == s)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| {
                format!(
                    "unknown coordinate `{s}`; valid coordinates: {}",
                    Self::KEYS.join(", ")
                )
            })
    }
}

impl Serialize for CoordinateIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.key())
    }
}

impl<'de> Deserialize<'de> for CoordinateIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A point `sigma` of the control manifold. Angles in radians; raw points need
/// not be canonical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Real"))]
pub struct GrassmannianPoint<T> {
    pub theta13: T,
    pub theta14: T,
    pub theta23: T,
    pub theta24: T,
    pub phi13: T,
    pub phi14: T,
    pub phi23: T,
    pub phi24: T,
}

impl<T: Real> Default for GrassmannianPoint<T> {
    fn default() -> Self {
        Self::origin()
    }
}

impl<T: Real> GrassmannianPoint<T> {
    pub fn origin() -> Self {
        Self::from_array([T::zero(); 8])
    }

    /// From the flat vector ordered like [`CoordinateIndex::ALL`].
    pub fn from_array(v: [T; 8]) -> Self {
        GrassmannianPoint {
            theta13: v[0],
            theta14: v[1],
            theta23: v[2],
            theta24: v[3],
            phi13: v[4],
            phi14: v[5],
            phi23: v[6],
            phi24: v[7],
        }
    }

    pub fn to_array(&self) -> [T; 8] {
        [
            self.theta13,
            self.theta14,
            self.theta23,
            self.theta24,
            self.phi13,
            self.phi14,
            self.phi23,
            self.phi24,
        ]
    }

    pub fn get(&self, c: CoordinateIndex) -> T {
        self.to_array()[c.slot()]
    }

    pub fn set(&mut self, c: CoordinateIndex, value: T) {
        let mut v = self.to_array();
        v[c.slot()] = value;
        *self = Self::from_array(v);
    }

    pub fn with(mut self, c: CoordinateIndex, value: T) -> Self {
        self.set(c, value);
        self
    }

    /// `self + step * e_c`
    pub fn shifted(&self, c: CoordinateIndex, step: T) -> Self {
        self.with(c, self.get(c) + step)
    }

    pub fn theta(&self, p: Pair) -> T {
        self.get(CoordinateIndex::theta(p))
    }

    pub fn phi(&self, p: Pair) -> T {
        self.get(CoordinateIndex::phi(p))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// Map every theta into `[0, pi)` and every phi into `[0, 2 pi)`.
    ///
    /// This is a coordinate relabeling, not an isometry of the unitary: a
    /// theta shift by pi flips the sign of the rotation block.
    pub fn canonicalize(&self) -> Self {
        let v = self.to_array();
        let pi = T::PI();
        let wrap = |x: T, period: T| {
            let r = x % period;
            if r < T::zero() {
                r + period
            } else {
                r
            }
        };
        Self::from_array(std::array::from_fn(|i| {
            if i < 4 {
                wrap(v[i], pi)
            } else {
                wrap(v[i], pi + pi)
            }
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleScale {
    /// rotation angle theta
    Full,
    /// rotation angle theta / 2
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffDiagPhase {
    PlusI,
    MinusI,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseOrientation {
    /// `e^{+i phi}` in the upper-right entry
    EPlusIphiUpper,
    /// `e^{-i phi}` in the upper-right entry
    EMinusIphiUpper,
}

/// Which 2x2 kernel builds each elementary rotation.
///
/// The derived ordering (field order, then variant order) is the tie-break
/// order of the convention search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RotationConvention {
    pub angle_scale: AngleScale,
    pub offdiag_phase: OffDiagPhase,
    pub phase_orientation: PhaseOrientation,
}

impl Default for RotationConvention {
    /// Full angle, `+i` prefactor, `e^{+i phi}` upper.
    fn default() -> Self {
        RotationConvention {
            angle_scale: AngleScale::Full,
            offdiag_phase: OffDiagPhase::PlusI,
            phase_orientation: PhaseOrientation::EPlusIphiUpper,
        }
    }
}

impl RotationConvention {
    /// The eight candidates in tie-break order.
    pub fn all() -> [RotationConvention; 8] {
        let mut out = [RotationConvention::default(); 8];
        let mut k = 0;
        for angle_scale in [AngleScale::Full, AngleScale::Half] {
            for offdiag_phase in [OffDiagPhase::PlusI, OffDiagPhase::MinusI] {
                for phase_orientation in
                    [PhaseOrientation::EPlusIphiUpper, PhaseOrientation::EMinusIphiUpper]
                {
                    out[k] = RotationConvention { angle_scale, offdiag_phase, phase_orientation };
                    k += 1;
                }
            }
        }
        out
    }

    /// The 2x2 rotation `[[cos a, p e sin a], [p conj(e) sin a, cos a]]`.
    pub fn kernel<T: Real>(&self, theta: T, phi: T) -> CMat2<T> {
        let a = match self.angle_scale {
            AngleScale::Full => theta,
            AngleScale::Half => theta * T::lit(0.5),
        };
        let p = match self.offdiag_phase {
            OffDiagPhase::PlusI => ci::<T>(),
            OffDiagPhase::MinusI => -ci::<T>(),
        };
        let e = match self.phase_orientation {
            PhaseOrientation::EPlusIphiUpper => cis(phi),
            PhaseOrientation::EMinusIphiUpper => cis(-phi),
        };
        let (s, co) = a.sin_cos();
        let cc = c(co, T::zero());
        CMat2::from_rows([[cc, p * e * s], [p * e.conj() * s, cc]])
    }
}

impl fmt::Display for RotationConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.angle_scale {
            AngleScale::Full => "full",
            AngleScale::Half => "half",
        };
        let p = match self.offdiag_phase {
            OffDiagPhase::PlusI => "plus_i",
            OffDiagPhase::MinusI => "minus_i",
        };
        let o = match self.phase_orientation {
            PhaseOrientation::EPlusIphiUpper => "e_plus_iphi_upper",
            PhaseOrientation::EMinusIphiUpper => "e_minus_iphi_upper",
        };
        write!(f, "{a}:{p}:{o}")
    }
}

impl FromStr for RotationConvention {
    type Err = String;

    /// Parses `angle:offdiag:orientation`, e.g. `full:plus_i:e_plus_iphi_upper`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RotationConvention::all()
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| {
                format!(
                    "unknown convention `{s}`; expected one of: {}",
                    RotationConvention::all().map(|c| c.to_string()).join(", ")
                )
            })
    }
}

/// The 4x4 rotation acting on levels `i` and `j` (1-based), identity elsewhere.
pub fn elementary_rotation<T: Real>(
    i: usize,
    j: usize,
    theta: T,
    phi: T,
    conv: RotationConvention,
) -> Result<CMat4<T>, ManifoldError> {
    let pair = Pair::from_levels(i, j)?;
    Ok(embed_rotation(pair, theta, phi, conv))
}

pub(crate) fn embed_rotation<T: Real>(
    pair: Pair,
    theta: T,
    phi: T,
    conv: RotationConvention,
) -> CMat4<T> {
    let (i, j) = pair.levels();
    let (i, j) = (i - 1, j - 1);
    let k = conv.kernel(theta, phi);
    let mut m = CMat4::identity();
    m[(i, i)] = k[(0, 0)];
    m[(i, j)] = k[(0, 1)];
    m[(j, i)] = k[(1, 0)];
    m[(j, j)] = k[(1, 1)];
    m
}

/// `U(sigma) = U(z13) U(z14) U(z23) U(z24)`.
pub fn build_unitary<T: Real>(p: &GrassmannianPoint<T>, conv: RotationConvention) -> CMat4<T> {
    Pair::ALL.iter().fold(CMat4::identity(), |acc, &pair| {
        acc * embed_rotation(pair, p.theta(pair), p.phi(pair), conv)
    })
}

/// The half-angle two-level matrix
/// `[[cos(theta/2), i e^{i phi} sin(theta/2)], [i e^{-i phi} sin(theta/2), cos(theta/2)]]`.
pub fn build_two_level<T: Real>(theta: T, phi: T) -> CMat2<T> {
    RotationConvention {
        angle_scale: AngleScale::Half,
        offdiag_phase: OffDiagPhase::PlusI,
        phase_orientation: PhaseOrientation::EPlusIphiUpper,
    }
    .kernel(theta, phi)
}

/// `H0 = omega/2 diag(1, 1, -1, -1)`
pub fn free_hamiltonian<T: Real>(omega: T) -> CMat4<T> {
    let h = omega * T::lit(0.5);
    CMat4::from_diag([c(h, T::zero()), c(h, T::zero()), c(-h, T::zero()), c(-h, T::zero())])
}

/// `H(sigma) = U(sigma) H0 U(sigma)^dagger`.
pub fn hamiltonian<T: Real>(
    p: &GrassmannianPoint<T>,
    omega: T,
    conv: RotationConvention,
) -> CMat4<T> {
    let u = build_unitary(p, conv);
    u * free_hamiltonian(omega) * u.dagger()
}
