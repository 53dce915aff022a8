//! Closed loops in coordinate space and their holonomies `P exp \oint A`,
//! by path-ordered products and, on commuting planes, by surface integrals of
//! the curvature.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::connection::{
    self, commutator_norm, field_strength_pair_numeric, ConnectionError, Method,
    CONNECTION_STEP, FIELD_STEP,
};
use crate::manifold::{CoordinateIndex, GrassmannianPoint, RotationConvention};
use crate::matrix::{CMat2, SubspaceLabel, CONFORMANCE_TOL};
use crate::quadrature;
use crate::scalar::Real;

/// Per-coordinate tolerance on the net offset of a closed loop.
pub const CLOSURE_TOL: f64 = 1e-12;
/// Largest commutator norm on a plane still treated as commuting.
pub const COMMUTING_TOL: f64 = 1e-6;
/// Grid size per axis when sampling the commutator over a region.
const COMMUTATOR_GRID: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HolonomyError {
    #[error("loop is not closed: net offset {residual:.3e} in {coord}")]
    LoopNotClosed { coord: CoordinateIndex, residual: f64 },
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("connection components do not commute on the {subspace} subspace of this plane (max commutator norm {max_commutator:.3e})")]
    NonCommutingPlane { subspace: SubspaceLabel, max_commutator: f64 },
    #[error(transparent)]
    Connection(#[from] ConnectionError),
}

/// Closed piecewise-linear path starting at `base`. Each segment is an offset
/// added to the current point.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop<T: Real> {
    pub base: GrassmannianPoint<T>,
    pub segments: Vec<[T; 8]>,
    pub steps_per_segment: usize,
    /// Overrides `steps_per_segment` segment by segment when set.
    pub segment_steps: Option<Vec<usize>>,
}

impl<T: Real> Loop<T> {
    pub fn new(
        base: GrassmannianPoint<T>,
        segments: Vec<[T; 8]>,
        steps_per_segment: usize,
    ) -> Result<Self, HolonomyError> {
        let l = Loop { base, segments, steps_per_segment, segment_steps: None };
        l.validate()?;
        Ok(l)
    }

    /// Same geometry, different step count for each segment.
    pub fn with_segment_steps(mut self, steps: Vec<usize>) -> Result<Self, HolonomyError> {
        if steps.len() != self.segments.len() {
            return Err(HolonomyError::InvalidLoop(format!(
                "{} step counts for {} segments",
                steps.len(),
                self.segments.len()
            )));
        }
        self.segment_steps = Some(steps);
        self.validate()?;
        Ok(self)
    }

    /// Structural checks short of closedness.
    pub fn validate(&self) -> Result<(), HolonomyError> {
        if self.steps_per_segment < 1 {
            return Err(HolonomyError::InvalidLoop("steps_per_segment must be >= 1".into()));
        }
        if let Some(s) = &self.segment_steps {
            if s.iter().any(|&n| n < 1) {
                return Err(HolonomyError::InvalidLoop("every segment needs >= 1 step".into()));
            }
        }
        if !self.base.is_finite() || self.segments.iter().flatten().any(|x| !x.is_finite()) {
            return Err(HolonomyError::InvalidLoop("non-finite coordinate".into()));
        }
        Ok(())
    }

    pub fn steps_for(&self, segment: usize) -> usize {
        match &self.segment_steps {
            Some(s) => s[segment],
            None => self.steps_per_segment,
        }
    }

    pub fn total_steps(&self) -> usize {
        (0..self.segments.len()).map(|k| self.steps_for(k)).sum()
    }

    /// Net offset per coordinate.
    pub fn net_offset(&self) -> [T; 8] {
        let mut net = [T::zero(); 8];
        for seg in &self.segments {
            for (n, d) in net.iter_mut().zip(seg) {
                *n = *n + *d;
            }
        }
        net
    }

    pub fn check_closed(&self) -> Result<(), HolonomyError> {
        for (slot, r) in self.net_offset().iter().enumerate() {
            let r = r.to_f64_lossy();
            if !(r.abs() <= CLOSURE_TOL) {
                let coord = CoordinateIndex::from_slot(slot).expect("slot < 8");
                return Err(HolonomyError::LoopNotClosed { coord, residual: r });
            }
        }
        Ok(())
    }

    /// Start point of every segment followed by the end point.
    pub fn vertices(&self) -> Vec<GrassmannianPoint<T>> {
        let mut v = Vec::with_capacity(self.segments.len() + 1);
        let mut x = self.base.to_array();
        v.push(self.base);
        for seg in &self.segments {
            for (a, d) in x.iter_mut().zip(seg) {
                *a = *a + *d;
            }
            v.push(GrassmannianPoint::from_array(x));
        }
        v
    }

    /// The same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let end = *self.vertices().last().expect("at least the base");
        Loop {
            base: end,
            segments: self.segments.iter().rev().map(|s| s.map(|d| -d)).collect(),
            steps_per_segment: self.steps_per_segment,
            segment_steps: self.segment_steps.as_ref().map(|s| s.iter().rev().copied().collect()),
        }
    }

    /// Point at fraction `tau` in [0, 1] along segment `k`.
    pub fn point_on_segment(&self, start: &GrassmannianPoint<T>, k: usize, tau: T) -> GrassmannianPoint<T> {
        let x = start.to_array();
        let d = self.segments[k];
        GrassmannianPoint::from_array(std::array::from_fn(|i| x[i] + tau * d[i]))
    }
}

// JSON form: segments list only their nonzero offsets, keyed by coordinate.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopRepr {
    #[serde(default)]
    base: GrassmannianPoint<f64>,
    segments: Vec<SegmentRepr>,
    steps_per_segment: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    segment_steps: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SegmentRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta13: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta14: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta23: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta24: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi13: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi14: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi23: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi24: Option<f64>,
}

impl SegmentRepr {
    fn from_offsets(d: [f64; 8]) -> Self {
        let nz = |x: f64| (x != 0.0).then_some(x);
        SegmentRepr {
            theta13: nz(d[0]),
            theta14: nz(d[1]),
            theta23: nz(d[2]),
            theta24: nz(d[3]),
            phi13: nz(d[4]),
            phi14: nz(d[5]),
            phi23: nz(d[6]),
            phi24: nz(d[7]),
        }
    }

    fn offsets(&self) -> [f64; 8] {
        [
            self.theta13, self.theta14, self.theta23, self.theta24,
            self.phi13, self.phi14, self.phi23, self.phi24,
        ]
        .map(|x| x.unwrap_or(0.0))
    }
}

impl<T: Real> Serialize for Loop<T> {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        LoopRepr {
            base: GrassmannianPoint::from_array(self.base.to_array().map(|x| x.to_f64_lossy())),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentRepr::from_offsets(s.map(|x| x.to_f64_lossy())))
                .collect(),
            steps_per_segment: self.steps_per_segment,
            segment_steps: self.segment_steps.clone(),
        }
        .serialize(ser)
    }
}

impl<'de, T: Real> Deserialize<'de> for Loop<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let r = LoopRepr::deserialize(de)?;
        let l = Loop {
            base: GrassmannianPoint::from_array(r.base.to_array().map(T::lit)),
            segments: r.segments.iter().map(|s| s.offsets().map(T::lit)).collect(),
            steps_per_segment: r.steps_per_segment,
            segment_steps: r.segment_steps,
        };
        l.validate().map_err(serde::de::Error::custom)?;
        Ok(l)
    }
}

/// Axis-aligned rectangle in the coordinate plane `(sigma, sigma')`, with the
/// remaining six coordinates taken from `fixed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarRegion<T: Real> {
    pub plane: (CoordinateIndex, CoordinateIndex),
    /// `[[sigma_min, sigma_max], [sigma'_min, sigma'_max]]`
    pub rect: [[T; 2]; 2],
    pub fixed: GrassmannianPoint<T>,
}

impl<T: Real> PlanarRegion<T> {
    pub fn new(
        plane: (CoordinateIndex, CoordinateIndex),
        rect: [[T; 2]; 2],
        fixed: GrassmannianPoint<T>,
    ) -> Result<Self, HolonomyError> {
        if plane.0 == plane.1 {
            return Err(HolonomyError::InvalidRegion(format!("repeated coordinate {}", plane.0)));
        }
        for [lo, hi] in rect {
            if !(lo <= hi) {
                return Err(HolonomyError::InvalidRegion("bounds must be ordered".into()));
            }
        }
        Ok(PlanarRegion { plane, rect, fixed })
    }

    pub fn area(&self) -> T {
        (self.rect[0][1] - self.rect[0][0]) * (self.rect[1][1] - self.rect[1][0])
    }

    pub fn point(&self, a: T, b: T) -> GrassmannianPoint<T> {
        self.fixed.with(self.plane.0, a).with(self.plane.1, b)
    }

    /// Recognizes a four-segment axis-aligned rectangle `a, b, -a, -b`.
    /// Returns the region in the plane `(first axis, second axis)` and the
    /// orientation: `+1` when counterclockwise in that plane, `-1` otherwise.
    pub fn from_loop(l: &Loop<T>) -> Option<(Self, T)> {
        if l.segments.len() != 4 {
            return None;
        }
        let axis = |seg: &[T; 8]| {
            let nz: Vec<usize> = (0..8).filter(|&i| seg[i] != T::zero()).collect();
            (nz.len() == 1).then(|| (nz[0], seg[nz[0]]))
        };
        let (i, da) = axis(&l.segments[0])?;
        let (j, db) = axis(&l.segments[1])?;
        if i == j || axis(&l.segments[2])? != (i, -da) || axis(&l.segments[3])? != (j, -db) {
            return None;
        }
        let (a, b) = (CoordinateIndex::from_slot(i)?, CoordinateIndex::from_slot(j)?);
        let (a0, b0) = (l.base.get(a), l.base.get(b));
        let span = |x0: T, d: T| if d > T::zero() { [x0, x0 + d] } else { [x0 + d, x0] };
        let region = PlanarRegion::new((a, b), [span(a0, da), span(b0, db)], l.base).ok()?;
        let orientation = if (da > T::zero()) == (db > T::zero()) { T::one() } else { -T::one() };
        Some((region, orientation))
    }
}

/// Holonomies on both degenerate subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Real"))]
pub struct HolonomyPair<T: Real> {
    pub gamma_plus: CMat2<T>,
    pub gamma_minus: CMat2<T>,
}

impl<T: Real> HolonomyPair<T> {
    pub fn identity() -> Self {
        HolonomyPair { gamma_plus: CMat2::identity(), gamma_minus: CMat2::identity() }
    }

    pub fn get(&self, s: SubspaceLabel) -> &CMat2<T> {
        match s {
            SubspaceLabel::Plus => &self.gamma_plus,
            SubspaceLabel::Minus => &self.gamma_minus,
        }
    }

    pub fn unitarity_residual(&self) -> T {
        self.gamma_plus.unitarity_residual().max(self.gamma_minus.unitarity_residual())
    }

    pub fn dagger(&self) -> Self {
        HolonomyPair { gamma_plus: self.gamma_plus.dagger(), gamma_minus: self.gamma_minus.dagger() }
    }
}

/// Sign of the connection in the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HolonomySign {
    /// `P exp(+\oint A)` with `A = U^dagger dU`, as defined.
    #[default]
    Connection,
    /// `P exp(-\oint A)`: what the time-ordered Schrodinger propagator
    /// produces in the moving frame.
    Schrodinger,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedOptions {
    pub source: Method,
    pub sign: HolonomySign,
    /// Finite-difference step for numeric connections.
    pub h: f64,
}

impl Default for OrderedOptions {
    fn default() -> Self {
        OrderedOptions { source: Method::Numeric, sign: HolonomySign::Connection, h: CONNECTION_STEP }
    }
}

/// Path-ordered holonomy on both subspaces. Each step contributes
/// `exp(sum_c A_c(p_mid) d sigma^c)`, multiplied on the left of the running
/// product.
pub fn holonomy_ordered<T: Real>(
    l: &Loop<T>,
    conv: RotationConvention,
    opts: OrderedOptions,
) -> Result<HolonomyPair<T>, HolonomyError> {
    l.validate()?;
    l.check_closed()?;
    let h = T::lit(opts.h);
    let sign = match opts.sign {
        HolonomySign::Connection => T::one(),
        HolonomySign::Schrodinger => -T::one(),
    };
    let tol = T::lit(CONFORMANCE_TOL);
    let half = T::lit(0.5);
    let mut gamma = [CMat2::<T>::identity(); 2];
    let mut start = l.base;
    for (k, seg) in l.segments.iter().enumerate() {
        let n = l.steps_for(k);
        let active: Vec<CoordinateIndex> =
            CoordinateIndex::ALL.into_iter().filter(|c| seg[c.slot()] != T::zero()).collect();
        let inv_n = T::from_usize(n).expect("step count").recip();
        for step in 0..n {
            let tau = (T::from_usize(step).expect("step index") + half) * inv_n;
            let mid = l.point_on_segment(&start, k, tau);
            let mut gen = [CMat2::<T>::zeros(); 2];
            for &c in &active {
                let d = seg[c.slot()] * inv_n * sign;
                let blocks = match opts.source {
                    Method::Numeric => connection::connection_pair_numeric(&mid, c, conv, h),
                    Method::Analytic => [
                        connection::connection_analytic(&mid, c, SubspaceLabel::Plus)?.matrix,
                        connection::connection_analytic(&mid, c, SubspaceLabel::Minus)?.matrix,
                    ],
                };
                for (g, a) in gen.iter_mut().zip(blocks) {
                    *g += a.scale_re(d);
                }
            }
            for (acc, g) in gamma.iter_mut().zip(gen) {
                if g != CMat2::zeros() {
                    let step = g.anti_hermitian_part().expm_antihermitian(tol).expect("anti-hermitian generator");
                    *acc = step * *acc;
                }
            }
        }
        start = l.point_on_segment(&start, k, T::one());
    }
    Ok(HolonomyPair { gamma_plus: gamma[0], gamma_minus: gamma[1] })
}

/// Largest `|| [A_sigma, A_sigma'] ||_F` over a grid covering the region.
pub fn max_commutator<T: Real>(region: &PlanarRegion<T>, s: SubspaceLabel, conv: RotationConvention) -> T {
    let (a, b) = region.plane;
    let last = T::from_usize(COMMUTATOR_GRID - 1).expect("grid size");
    let mut worst = T::zero();
    for i in 0..COMMUTATOR_GRID {
        for j in 0..COMMUTATOR_GRID {
            let fi = T::from_usize(i).expect("grid index") / last;
            let fj = T::from_usize(j).expect("grid index") / last;
            let x = region.rect[0][0] + fi * (region.rect[0][1] - region.rect[0][0]);
            let y = region.rect[1][0] + fj * (region.rect[1][1] - region.rect[1][0]);
            worst = worst.max(commutator_norm(&region.point(x, y), a, b, s, conv));
        }
    }
    worst
}

/// Abelian Stokes evaluation `exp(\int\int F_{sigma sigma'})` over the region,
/// for the counterclockwise boundary. Requires the two connection components
/// to commute across the region.
pub fn holonomy_stokes<T: Real>(
    region: &PlanarRegion<T>,
    s: SubspaceLabel,
    conv: RotationConvention,
    quad_tol: T,
) -> Result<CMat2<T>, HolonomyError> {
    let worst = max_commutator(region, s, conv);
    if worst > T::lit(COMMUTING_TOL) {
        return Err(HolonomyError::NonCommutingPlane { subspace: s, max_commutator: worst.to_f64_lossy() });
    }
    Ok(stokes_unchecked(region, s, conv, quad_tol, T::one()))
}

/// `exp(orientation * \int\int F)` without the commutator precondition.
pub fn stokes_unchecked<T: Real>(
    region: &PlanarRegion<T>,
    s: SubspaceLabel,
    conv: RotationConvention,
    quad_tol: T,
    orientation: T,
) -> CMat2<T> {
    if region.area() == T::zero() {
        return CMat2::identity();
    }
    let (mu, nu) = region.plane;
    let h = T::lit(FIELD_STEP);
    let idx = match s {
        SubspaceLabel::Plus => 0,
        SubspaceLabel::Minus => 1,
    };
    let integrand = |x: T, y: T| -> [T; 8] {
        let f = field_strength_pair_numeric(&region.point(x, y), mu, nu, conv, h)[idx];
        let r = f.rows();
        [
            r[0][0].re, r[0][0].im, r[0][1].re, r[0][1].im,
            r[1][0].re, r[1][0].im, r[1][1].re, r[1][1].im,
        ]
    };
    let v = quadrature::integrate_2d(integrand, region.rect[0], region.rect[1], quad_tol);
    let z = |k: usize| crate::scalar::c(v[k] * orientation, v[k + 1] * orientation);
    let m = CMat2::from_rows([[z(0), z(2)], [z(4), z(6)]]).anti_hermitian_part();
    m.expm_antihermitian(T::lit(CONFORMANCE_TOL)).expect("anti-hermitian flux")
}

/// Closed-form two-level Berry phases `(phi+, phi-)` with
/// `phi+ = \int\int sin(2 theta) d theta d phi` over the rectangle.
pub fn berry_phase_stokes<T: Real>(theta: [T; 2], phi: [T; 2]) -> (T, T) {
    let two = T::lit(2.0);
    let p = (((two * theta[0]).cos() - (two * theta[1]).cos()) / two) * (phi[1] - phi[0]);
    (p, -p)
}

/// Counterclockwise boundary of the region: `sigma` forward, `sigma'`
/// forward, `sigma` back, `sigma'` back. `steps` is the total step count.
pub fn loop_boundary<T: Real>(region: &PlanarRegion<T>, steps: usize) -> Result<Loop<T>, HolonomyError> {
    if steps < 4 {
        return Err(HolonomyError::InvalidLoop("boundary needs at least 4 steps".into()));
    }
    let (a, b) = region.plane;
    let da = region.rect[0][1] - region.rect[0][0];
    let db = region.rect[1][1] - region.rect[1][0];
    let offset = |c: CoordinateIndex, d: T| {
        let mut o = [T::zero(); 8];
        o[c.slot()] = d;
        o
    };
    let base = region.point(region.rect[0][0], region.rect[1][0]);
    Loop::new(
        base,
        vec![offset(a, da), offset(b, db), offset(a, -da), offset(b, -db)],
        steps.div_ceil(4),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::unitary_distance;
    use crate::scalar::c;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    use CoordinateIndex as Ci;
    use SubspaceLabel::{Minus, Plus};
    type P = GrassmannianPoint<f64>;

    fn conv() -> RotationConvention {
        RotationConvention::default()
    }

    fn reference_region() -> PlanarRegion<f64> {
        PlanarRegion::new((Ci::THETA24, Ci::PHI24), [[0.0, FRAC_PI_4], [0.0, PI]], P::origin()).unwrap()
    }

    fn diag(a: (f64, f64), b: (f64, f64)) -> CMat2<f64> {
        CMat2::from_diag([c(a.0, a.1), c(b.0, b.1)])
    }

    #[test]
    fn loop_json_round_trip_and_format() {
        let json = r#"{ "base": {}, "segments": [ {"theta24": 0.7853981633974483}, {"phi24": 3.141592653589793}, {"theta24": -0.7853981633974483}, {"phi24": -3.141592653589793} ], "steps_per_segment": 10000 }"#;
        let l: Loop<f64> = serde_json::from_str(json).unwrap();
        assert_eq!(l.segments.len(), 4);
        assert_eq!(l.segments[1][7], PI);
        assert!(l.check_closed().is_ok());
        let back: Loop<f64> = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        assert_eq!(back, l);
        let s = serde_json::to_string(&l).unwrap();
        assert!(s.contains(r#"{"theta24":0.7853981633974483}"#), "{s}");
    }

    #[test]
    fn loop_json_rejects_bad_input() {
        assert!(serde_json::from_str::<Loop<f64>>(r#"{"segments": [{"psi": 1}], "steps_per_segment": 1}"#).is_err());
        assert!(serde_json::from_str::<Loop<f64>>(r#"{"segments": [], "steps_per_segment": 0}"#).is_err());
    }

    #[test]
    fn open_loop_is_rejected() {
        let mut o = [0.0; 8];
        o[Ci::PHI24.slot()] = 1.0;
        let l = Loop::new(P::origin(), vec![o], 10).unwrap();
        let err = holonomy_ordered(&l, conv(), OrderedOptions::default()).unwrap_err();
        assert!(matches!(err, HolonomyError::LoopNotClosed { coord: Ci::PHI24, .. }));
    }

    #[test]
    fn out_and_back_is_identity() {
        let mut o = [0.0; 8];
        o[Ci::THETA13.slot()] = 0.8;
        o[Ci::PHI23.slot()] = 1.3;
        let base = P::from_array([0.3, 0.2, 0.5, 0.7, 1.0, 2.0, 3.0, 4.0]);
        let l = Loop::new(base, vec![o, o.map(|x| -x)], 200).unwrap();
        let g = holonomy_ordered(&l, conv(), OrderedOptions::default()).unwrap();
        assert!(unitary_distance(&g.gamma_plus, &CMat2::identity()) <= 1e-9);
        assert!(unitary_distance(&g.gamma_minus, &CMat2::identity()) <= 1e-9);
    }

    #[test]
    fn reference_rectangle_ordered() {
        let l = loop_boundary(&reference_region(), 40_000).unwrap();
        let g = holonomy_ordered(&l, conv(), OrderedOptions::default()).unwrap();
        assert!(unitary_distance(&g.gamma_plus, &diag((1.0, 0.0), (0.0, -1.0))) <= 1e-6);
        assert!(unitary_distance(&g.gamma_minus, &diag((1.0, 0.0), (0.0, 1.0))) <= 1e-6);
        assert!(g.unitarity_residual() <= 1e-9);

        let opts = OrderedOptions { sign: HolonomySign::Schrodinger, ..Default::default() };
        let s = holonomy_ordered(&l, conv(), opts).unwrap();
        assert!(unitary_distance(&s.gamma_plus, &diag((1.0, 0.0), (0.0, 1.0))) <= 1e-6);
        assert!(unitary_distance(&s.gamma_minus, &g.gamma_minus.dagger()) <= 1e-9);
    }

    #[test]
    fn reference_rectangle_stokes() {
        let r = reference_region();
        let gp = holonomy_stokes(&r, Plus, conv(), 1e-9).unwrap();
        assert!(unitary_distance(&gp, &diag((1.0, 0.0), (0.0, -1.0))) <= 1e-7);
        let gm = holonomy_stokes(&r, Minus, conv(), 1e-9).unwrap();
        assert!(unitary_distance(&gm, &diag((1.0, 0.0), (0.0, 1.0))) <= 1e-7);
    }

    #[test]
    fn degenerate_region_is_identity() {
        let r = PlanarRegion::new((Ci::THETA24, Ci::PHI24), [[0.3, 0.3], [0.0, 1.0]], P::origin()).unwrap();
        assert_eq!(holonomy_stokes(&r, Plus, conv(), 1e-9).unwrap(), CMat2::identity());
        let l = loop_boundary(&r, 400).unwrap();
        let g = holonomy_ordered(&l, conv(), OrderedOptions::default()).unwrap();
        assert!(unitary_distance(&g.gamma_plus, &CMat2::identity()) <= 1e-12);
    }

    #[test]
    fn non_commuting_plane_is_refused() {
        let fixed = P::from_array([0.7, 0.4, 0.5, 0.9, 0.3, 1.7, 2.9, 5.1]);
        let r = PlanarRegion::new((Ci::THETA23, Ci::PHI13), [[0.4, 0.8], [0.3, 1.0]], fixed).unwrap();
        let err = holonomy_stokes(&r, Minus, conv(), 1e-8).unwrap_err();
        assert!(matches!(err, HolonomyError::NonCommutingPlane { subspace: Minus, .. }));
        assert!(holonomy_stokes(&r, Plus, conv(), 1e-8).is_ok());
    }

    #[test]
    fn invalid_regions() {
        assert!(PlanarRegion::new((Ci::PHI13, Ci::PHI13), [[0.0, 1.0], [0.0, 1.0]], P::origin()).is_err());
        assert!(PlanarRegion::new((Ci::PHI13, Ci::PHI14), [[1.0, 0.0], [0.0, 1.0]], P::origin()).is_err());
        assert!(loop_boundary(&reference_region(), 3).is_err());
    }

    #[test]
    fn boundary_round_trips_through_from_loop() {
        let r = reference_region();
        let l = loop_boundary(&r, 8).unwrap();
        assert_eq!(l.net_offset(), [0.0; 8]);
        let (back, o) = PlanarRegion::from_loop(&l).unwrap();
        assert_eq!(back, r);
        assert_eq!(o, 1.0);
        // reversed: counterclockwise in the swapped plane
        let (rev, o) = PlanarRegion::from_loop(&l.reversed()).unwrap();
        assert_eq!(o, 1.0);
        assert_eq!(rev.plane, (r.plane.1, r.plane.0));
        let mut cw = l.clone();
        cw.segments.swap(0, 2);
        cw.base = cw.base.with(Ci::THETA24, FRAC_PI_4);
        let (back, o) = PlanarRegion::from_loop(&cw).unwrap();
        assert_eq!((back.plane, back.rect, o), (r.plane, r.rect, -1.0));
    }

    #[test]
    fn berry_phase_examples() {
        assert_eq!(berry_phase_stokes([0.2, 0.2], [0.0, 1.0]), (0.0, -0.0));
        let (p, m) = berry_phase_stokes([0.0, FRAC_PI_4], [0.0, PI / 2.0]);
        assert!((p - FRAC_PI_4).abs() < 1e-15 && p == -m);
        let (p, _) = berry_phase_stokes([0.0, PI / 2.0], [0.0, 2.0 * PI]);
        assert!((p - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn midpoint_scheme_converges_quadratically() {
        let fixed = P::from_array([0.7, 0.4, 0.5, 0.9, 0.3, 1.7, 2.9, 5.1]);
        let d1 = [0.5, -0.3, 0.4, 0.2, 1.0, -0.7, 0.6, 0.9];
        let d2 = [-0.2, 0.6, 0.1, -0.5, 0.4, 0.8, -1.1, 0.3];
        let d3: [f64; 8] = std::array::from_fn(|i| -d1[i] - d2[i]);
        let run = |n| holonomy_ordered(&Loop::new(fixed, vec![d1, d2, d3], n).unwrap(), conv(), OrderedOptions::default()).unwrap();
        let (a, b, c) = (run(200), run(400), run(800));
        for s in SubspaceLabel::BOTH {
            let d1 = unitary_distance(a.get(s), b.get(s));
            let d2 = unitary_distance(b.get(s), c.get(s));
            assert!(d1 / d2 >= 3.0, "{s:?}: {d1} / {d2}");
        }
    }

    #[test]
    fn analytic_source_matches_numeric_on_clean_plane() {
        let r = PlanarRegion::new((Ci::THETA24, Ci::PHI24), [[0.2, 0.9], [0.5, 2.0]], P::origin()).unwrap();
        let l = loop_boundary(&r, 2000).unwrap();
        let n = holonomy_ordered(&l, conv(), OrderedOptions::default()).unwrap();
        let a = holonomy_ordered(&l, conv(), OrderedOptions { source: Method::Analytic, ..Default::default() }).unwrap();
        assert!(unitary_distance(&n.gamma_plus, &a.gamma_plus) <= 1e-8);
    }

    fn arb_fixed() -> impl Strategy<Value = P> {
        (proptest::array::uniform4(0.2f64..1.3), proptest::array::uniform4(0.0f64..(2.0 * PI)))
            .prop_map(|(t, f)| P::from_array([t[0], t[1], t[2], t[3], f[0], f[1], f[2], f[3]]))
    }

    fn arb_loop() -> impl Strategy<Value = Loop<f64>> {
        (arb_fixed(), proptest::collection::vec(proptest::array::uniform8(-0.4f64..0.4), 2..5)).prop_map(
            |(base, mut segs)| {
                let mut close = [0.0; 8];
                for s in &segs {
                    for i in 0..8 {
                        close[i] -= s[i];
                    }
                }
                segs.push(close);
                Loop::new(base, segs, 300).unwrap()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn reversal_gives_the_inverse(l in arb_loop()) {
            let g = holonomy_ordered(&l, conv(), OrderedOptions::default()).unwrap();
            let r = holonomy_ordered(&l.reversed(), conv(), OrderedOptions::default()).unwrap();
            for s in SubspaceLabel::BOTH {
                prop_assert!(unitary_distance(r.get(s), &g.get(s).dagger()) <= 1e-8);
                prop_assert!(g.get(s).unitarity_residual() <= 1e-9);
            }
        }

        #[test]
        fn reparameterization_invariance(l in arb_loop(), w in proptest::collection::vec(1usize..4, 5)) {
            let a = Loop { steps_per_segment: 3000, ..l.clone() };
            let steps: Vec<usize> = (0..a.segments.len()).map(|k| 2000 * w[k]).collect();
            let b = a.clone().with_segment_steps(steps).unwrap();
            let ga = holonomy_ordered(&a, conv(), OrderedOptions::default()).unwrap();
            let gb = holonomy_ordered(&b, conv(), OrderedOptions::default()).unwrap();
            for s in SubspaceLabel::BOTH {
                prop_assert!(unitary_distance(ga.get(s), gb.get(s)) <= 1e-6);
            }
        }

        #[test]
        fn stokes_matches_ordered_on_theta24_phi24(
            fixed in arb_fixed(), a0 in 0.1f64..1.0, w in 0.05f64..0.5, b0 in 0.0f64..5.0, hgt in 0.1f64..1.0,
        ) {
            let r = PlanarRegion::new((Ci::THETA24, Ci::PHI24), [[a0, a0 + w], [b0, b0 + hgt]], fixed).unwrap();
            let g = holonomy_ordered(&loop_boundary(&r, 4000).unwrap(), conv(), OrderedOptions::default()).unwrap();
            for s in SubspaceLabel::BOTH {
                let st = holonomy_stokes(&r, s, conv(), 1e-9).unwrap();
                prop_assert!(unitary_distance(&st, g.get(s)) <= 1e-5);
            }
        }
    }
}
