//! Schrodinger evolution under `H(t) = U(sigma(t)) H0 U(sigma(t))^dagger`
//! around a loop, and extraction of the geometric part of the propagator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::holonomy::{holonomy_ordered, HolonomyError, HolonomyPair, HolonomySign, Loop, OrderedOptions};
use crate::manifold::{build_unitary, GrassmannianPoint, RotationConvention};
use crate::matrix::{unitary_distance, CMat2, CMat4, SubspaceLabel};
use crate::quadrature;
use crate::scalar::{cis, Real};

pub const MIN_TIME_STEPS: usize = 100;
/// Blocks farther than this from unitary are reported without projection.
pub const REUNITARIZE_LIMIT: f64 = 0.05;
/// Unitarity tolerance on propagators handed to [`extract_geometric`].
pub const PROPAGATOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdiabaticError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("propagator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error(transparent)]
    Holonomy(#[from] HolonomyError),
}

/// Speed profile along each segment of the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Uniform,
    /// `3 tau^2 - 2 tau^3` within each segment: the control starts and stops
    /// at rest at every corner.
    Smoothstep,
}

impl Profile {
    pub fn warp<T: Real>(self, tau: T) -> T {
        match self {
            Profile::Uniform => tau,
            Profile::Smoothstep => tau * tau * (T::lit(3.0) - T::lit(2.0) * tau),
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Profile::Uniform),
            "smoothstep" => Ok(Profile::Smoothstep),
            _ => Err(format!("unknown profile `{s}` (expected uniform or smoothstep)")),
        }
    }
}

/// Every segment of the loop takes the same share of `total_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T: Real> {
    pub path: Loop<T>,
    pub total_time: T,
    pub time_steps: usize,
    pub profile: Profile,
}

impl<T: Real> Schedule<T> {
    pub fn new(path: Loop<T>, total_time: T, time_steps: usize, profile: Profile) -> Result<Self, AdiabaticError> {
        if !(total_time > T::zero()) || !total_time.is_finite() {
            return Err(AdiabaticError::InvalidSchedule("total_time must be > 0".into()));
        }
        if time_steps < MIN_TIME_STEPS {
            return Err(AdiabaticError::InvalidSchedule(format!("time_steps must be >= {MIN_TIME_STEPS}")));
        }
        if path.segments.is_empty() {
            return Err(AdiabaticError::InvalidSchedule("loop has no segments".into()));
        }
        path.check_closed()?;
        Ok(Schedule { path, total_time, time_steps, profile })
    }

    /// Control point at loop fraction `s` in [0, 1].
    pub fn point_at(&self, s: T) -> GrassmannianPoint<T> {
        let n = self.path.segments.len();
        let q = s * T::from_usize(n).expect("segment count");
        let k = q.floor().to_usize().unwrap_or(0).min(n - 1);
        let tau = self.profile.warp(q - T::from_usize(k).expect("segment index"));
        let mut x = self.path.base.to_array();
        for seg in &self.path.segments[..k] {
            for (a, d) in x.iter_mut().zip(seg) {
                *a = *a + *d;
            }
        }
        let start = GrassmannianPoint::from_array(x);
        self.path.point_on_segment(&start, k, tau)
    }
}

fn phase_diag<T: Real>(omega: T, dt: T) -> CMat4<T> {
    let half = omega * dt * T::lit(0.5);
    CMat4::from_diag([cis(-half), cis(-half), cis(half), cis(half)])
}

/// Lab-frame propagator over `[0, T]`: product of `exp(-i H(t_mid) dt)`,
/// later steps on the left. Each factor is exact because the spectrum of `H`
/// is the fixed `+-omega/2`.
pub fn evolve<T: Real>(sched: &Schedule<T>, omega: T, conv: RotationConvention) -> CMat4<T> {
    let n = T::from_usize(sched.time_steps).expect("step count");
    let dt = sched.total_time / n;
    let d = phase_diag(omega, dt);
    let mut m = CMat4::identity();
    for k in 0..sched.time_steps {
        let s = (T::from_usize(k).expect("step index") + T::lit(0.5)) / n;
        let u = build_unitary(&sched.point_at(s), conv);
        m = u * d * u.dagger() * m;
    }
    m
}

/// Propagator in the eigenframe at the loop base, `U(base)^dagger M U(base)`.
pub fn to_eigenframe<T: Real>(m: &CMat4<T>, base: &GrassmannianPoint<T>, conv: RotationConvention) -> CMat4<T> {
    let u = build_unitary(base, conv);
    u.dagger() * *m * u
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Serialize"))]
pub struct AdiabaticResult<T: Real> {
    pub total_unitary: CMat4<T>,
    pub geometric: HolonomyPair<T>,
    /// Frobenius norm of the two off-diagonal 2x2 blocks.
    pub leakage: T,
    pub holonomy_error_plus: Option<T>,
    pub holonomy_error_minus: Option<T>,
    /// Set when a block was too far from unitary to be projected.
    pub not_reunitarized: bool,
}

impl<T: Real> AdiabaticResult<T> {
    pub fn compare(&mut self, prediction: &HolonomyPair<T>) {
        self.holonomy_error_plus = Some(unitary_distance(&self.geometric.gamma_plus, &prediction.gamma_plus));
        self.holonomy_error_minus = Some(unitary_distance(&self.geometric.gamma_minus, &prediction.gamma_minus));
    }
}

/// Strips the dynamical phases `e^{-+i omega T/2}` from the subspace blocks of
/// an eigenframe propagator.
pub fn extract_geometric<T: Real>(u_total: &CMat4<T>, total_time: T, omega: T) -> Result<AdiabaticResult<T>, AdiabaticError> {
    let residual = u_total.unitarity_residual();
    if !(residual <= T::lit(PROPAGATOR_TOL)) {
        return Err(AdiabaticError::NotUnitary { residual: residual.to_f64_lossy() });
    }
    let phase = omega * total_time * T::lit(0.5);
    let limit = T::lit(REUNITARIZE_LIMIT);
    let mut flagged = false;
    let mut block = |s: SubspaceLabel, ph: T| {
        let b = u_total.subspace_block(s).scale(cis(ph));
        if b.unitarity_residual() <= limit {
            if let Some(p) = b.polar_unitary() {
                return p;
            }
        }
        flagged = true;
        b
    };
    let geometric = HolonomyPair {
        gamma_plus: block(SubspaceLabel::Plus, phase),
        gamma_minus: block(SubspaceLabel::Minus, -phase),
    };
    let a = u_total.cross_block(SubspaceLabel::Plus, SubspaceLabel::Minus).frobenius_norm();
    let b = u_total.cross_block(SubspaceLabel::Minus, SubspaceLabel::Plus).frobenius_norm();
    Ok(AdiabaticResult {
        total_unitary: *u_total,
        geometric,
        leakage: a.hypot(b),
        holonomy_error_plus: None,
        holonomy_error_minus: None,
        not_reunitarized: flagged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    /// Time steps per unit of `omega * T`.
    pub steps_per_unit: f64,
    pub profile: Profile,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions { steps_per_unit: 200.0, profile: Profile::Smoothstep }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub steps: usize,
    pub leakage: f64,
    pub err_plus: f64,
    pub err_minus: f64,
}

/// Runs the loop at every total time and compares the extracted holonomies
/// with the path-ordered prediction (Schrodinger sign, see [`HolonomySign`]).
/// Rows come back in the order of `times`.
pub fn convergence_study<T: Real>(
    path: &Loop<T>,
    omega: T,
    times: &[T],
    conv: RotationConvention,
    opts: StudyOptions,
) -> Result<Vec<StudyRow>, AdiabaticError> {
    if times.len() < 3 {
        return Err(AdiabaticError::InvalidSchedule("need at least 3 total times".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(AdiabaticError::InvalidSchedule("times must be strictly increasing".into()));
    }
    let prediction = holonomy_ordered(
        path,
        conv,
        OrderedOptions { sign: HolonomySign::Schrodinger, ..Default::default() },
    )?;
    let schedules = times
        .iter()
        .map(|&t| {
            let steps = (opts.steps_per_unit * (omega * t).to_f64_lossy()).round().max(MIN_TIME_STEPS as f64) as usize;
            Schedule::new(path.clone(), t, steps, opts.profile)
        })
        .collect::<Result<Vec<_>, _>>()?;
    schedules
        .par_iter()
        .map(|sched| {
            let m = to_eigenframe(&evolve(sched, omega, conv), &path.base, conv);
            let mut r = extract_geometric(&m, sched.total_time, omega)?;
            r.compare(&prediction);
            Ok(StudyRow {
                t: sched.total_time.to_f64_lossy(),
                steps: sched.time_steps,
                leakage: r.leakage.to_f64_lossy(),
                err_plus: r.holonomy_error_plus.unwrap_or(T::nan()).to_f64_lossy(),
                err_minus: r.holonomy_error_minus.unwrap_or(T::nan()).to_f64_lossy(),
            })
        })
        .collect()
}

/// Closed piecewise-linear loop in the `(theta, phi)` plane of a two-level
/// system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelLoop<T> {
    pub base: [T; 2],
    pub segments: Vec<[T; 2]>,
}

impl<T: Real> TwoLevelLoop<T> {
    /// Counterclockwise rectangle boundary starting at `(theta_lo, phi_lo)`.
    pub fn rectangle(theta: [T; 2], phi: [T; 2]) -> Self {
        let (dt, dp) = (theta[1] - theta[0], phi[1] - phi[0]);
        let z = T::zero();
        TwoLevelLoop {
            base: [theta[0], phi[0]],
            segments: vec![[dt, z], [z, dp], [-dt, z], [z, -dp]],
        }
    }

    fn point_at(&self, s: T, profile: Profile) -> [T; 2] {
        let n = self.segments.len();
        let q = s * T::from_usize(n).expect("segment count");
        let k = q.floor().to_usize().unwrap_or(0).min(n - 1);
        let tau = profile.warp(q - T::from_usize(k).expect("segment index"));
        let mut x = self.base;
        for seg in &self.segments[..k] {
            x = [x[0] + seg[0], x[1] + seg[1]];
        }
        [x[0] + tau * self.segments[k][0], x[1] + tau * self.segments[k][1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Serialize"))]
pub struct TwoLevelResult<T: Real> {
    pub propagator: CMat2<T>,
    pub phi_plus: T,
    pub phi_minus: T,
}

/// Two-level baseline `H = omega/2 K sigma_z K^dagger` with `K` the 2x2
/// kernel of `conv`. The phases are the arguments of the diagonal of the
/// eigenframe propagator after stripping `e^{-+i omega T/2}`.
pub fn evolve_two_level<T: Real>(
    path: &TwoLevelLoop<T>,
    omega: T,
    total_time: T,
    time_steps: usize,
    profile: Profile,
    conv: RotationConvention,
) -> Result<TwoLevelResult<T>, AdiabaticError> {
    if !(total_time > T::zero()) || time_steps < MIN_TIME_STEPS || path.segments.is_empty() {
        return Err(AdiabaticError::InvalidSchedule("need total_time > 0, >= 100 steps, and a segment".into()));
    }
    let tol = T::lit(crate::holonomy::CLOSURE_TOL);
    let net = path.segments.iter().fold([T::zero(); 2], |a, s| [a[0] + s[0], a[1] + s[1]]);
    if net[0].abs() > tol || net[1].abs() > tol {
        return Err(AdiabaticError::InvalidSchedule("two-level loop is not closed".into()));
    }
    let n = T::from_usize(time_steps).expect("step count");
    let dt = total_time / n;
    let half = omega * dt * T::lit(0.5);
    let d = CMat2::from_diag([cis(-half), cis(half)]);
    let mut m = CMat2::identity();
    for k in 0..time_steps {
        let s = (T::from_usize(k).expect("step index") + T::lit(0.5)) / n;
        let [th, ph] = path.point_at(s, profile);
        let u = conv.kernel(th, ph);
        m = u * d * u.dagger() * m;
    }
    let k0 = conv.kernel(path.base[0], path.base[1]);
    let v = k0.dagger() * m * k0;
    let strip = omega * total_time * T::lit(0.5);
    let phi_plus = (v[(0, 0)] * cis(strip)).arg();
    let phi_minus = (v[(1, 1)] * cis(-strip)).arg();
    Ok(TwoLevelResult { propagator: m, phi_plus, phi_minus })
}

/// Berry phases `(phi+, phi-)` of the two-level kernel from the numerically
/// differentiated curvature, `phi = Im \int\int F_{theta phi}` per eigenstate.
/// With `HolonomySign::Schrodinger` the signs are those a simulation sees.
pub fn two_level_berry_numeric<T: Real>(
    theta: [T; 2],
    phi: [T; 2],
    conv: RotationConvention,
    sign: HolonomySign,
    quad_tol: T,
) -> (T, T) {
    let h = T::lit(crate::connection::FIELD_STEP);
    let two_h = h + h;
    let conn = |th: T, ph: T, dth: bool| {
        let k = conv.kernel(th, ph);
        let (kp, km) = if dth {
            (conv.kernel(th + h, ph), conv.kernel(th - h, ph))
        } else {
            (conv.kernel(th, ph + h), conv.kernel(th, ph - h))
        };
        (k.dagger() * (kp - km).scale_re(two_h.recip())).anti_hermitian_part()
    };
    let curvature = |th: T, ph: T| {
        let d_th_aphi = (conn(th + h, ph, false) - conn(th - h, ph, false)).scale_re(two_h.recip());
        let d_ph_ath = (conn(th, ph + h, true) - conn(th, ph - h, true)).scale_re(two_h.recip());
        // each eigenstate is its own one-dimensional subspace: abelian curvature
        let f = d_th_aphi - d_ph_ath;
        [f[(0, 0)].im, f[(1, 1)].im]
    };
    let v = quadrature::integrate_2d(curvature, theta, phi, quad_tol);
    let s = match sign {
        HolonomySign::Connection => T::one(),
        HolonomySign::Schrodinger => -T::one(),
    };
    (s * v[0], s * v[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::{loop_boundary, PlanarRegion};
    use crate::manifold::{free_hamiltonian, hamiltonian, CoordinateIndex as Ci};
    use crate::scalar::c;
    use std::f64::consts::{FRAC_PI_4, PI};

    type P = GrassmannianPoint<f64>;

    fn conv() -> RotationConvention {
        RotationConvention::default()
    }

    fn reference_loop(steps: usize) -> Loop<f64> {
        let r = PlanarRegion::new((Ci::THETA24, Ci::PHI24), [[0.0, FRAC_PI_4], [0.0, PI]], P::origin()).unwrap();
        loop_boundary(&r, steps).unwrap()
    }

    fn constant_loop(base: P) -> Loop<f64> {
        Loop::new(base, vec![[0.0; 8]], 10).unwrap()
    }

    /// `exp(-i H t)` through the hermitian eigendecomposition of `H`.
    fn exp_hermitian(h: &CMat4<f64>, t: f64) -> CMat4<f64> {
        h.scale(c(0.0, -t)).expm_antihermitian(1e-9).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(reference_loop(8), 0.0, 1000, Profile::Uniform).is_err());
        assert!(Schedule::new(reference_loop(8), 1.0, 99, Profile::Uniform).is_err());
        let mut open = reference_loop(8);
        open.segments.pop();
        assert!(matches!(
            Schedule::new(open, 1.0, 100, Profile::Uniform),
            Err(AdiabaticError::Holonomy(HolonomyError::LoopNotClosed { .. }))
        ));
    }

    #[test]
    fn schedule_visits_vertices() {
        let s = Schedule::new(reference_loop(8), 1.0, 100, Profile::Smoothstep).unwrap();
        assert_eq!(s.point_at(0.25).theta24, FRAC_PI_4);
        assert_eq!(s.point_at(0.5).phi24, PI);
        assert!((s.point_at(0.125).theta24 - FRAC_PI_4 / 2.0).abs() < 1e-15);
        assert!(s.point_at(1.0).theta24.abs() < 1e-15);
    }

    #[test]
    fn constant_control_is_static_evolution() {
        let p = P::from_array([0.3, 0.7, 0.2, 1.1, 0.4, 2.0, 5.0, 1.0]);
        let t = 17.3;
        let sched = Schedule::new(constant_loop(p), t, 500, Profile::Uniform).unwrap();
        let m = evolve(&sched, 1.0, conv());
        let exact = exp_hermitian(&hamiltonian(&p, 1.0, conv()), t);
        assert!(unitary_distance(&m, &exact) <= 1e-9);
        assert!(m.unitarity_residual() <= 1e-9);
    }

    #[test]
    fn tiny_time_is_identity() {
        let sched = Schedule::new(reference_loop(8), 1e-12, 100, Profile::Uniform).unwrap();
        assert!(unitary_distance(&evolve(&sched, 1.0, conv()), &CMat4::identity()) <= 1e-11);
    }

    #[test]
    fn second_order_in_time_step() {
        let run = |n| evolve(&Schedule::new(reference_loop(8), 20.0, n, Profile::Uniform).unwrap(), 1.0, conv());
        let (a, b, c) = (run(400), run(800), run(1600));
        let ratio = unitary_distance(&a, &b) / unitary_distance(&b, &c);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn extract_examples() {
        let t = 12.5;
        let free = exp_hermitian(&free_hamiltonian(1.0), t);
        let r = extract_geometric(&free, t, 1.0).unwrap();
        assert!(unitary_distance(&r.geometric.gamma_plus, &CMat2::identity()) <= 1e-12);
        assert!(unitary_distance(&r.geometric.gamma_minus, &CMat2::identity()) <= 1e-12);
        assert_eq!(r.leakage, 0.0);

        let vp = conv().kernel(0.4, 1.3);
        let vm = conv().kernel(1.1, -0.2);
        let u = CMat4::block_diag(&vp.scale(cis(-t / 2.0)), &vm.scale(cis(t / 2.0)));
        let r = extract_geometric(&u, t, 1.0).unwrap();
        assert!(unitary_distance(&r.geometric.gamma_plus, &vp) <= 1e-12);
        assert!(unitary_distance(&r.geometric.gamma_minus, &vm) <= 1e-12);
        assert!(!r.not_reunitarized);

        let bad = CMat4::identity().scale_re(1.1);
        assert!(matches!(extract_geometric(&bad, t, 1.0), Err(AdiabaticError::NotUnitary { .. })));
    }

    #[test]
    fn strongly_leaking_blocks_are_flagged() {
        // swap of the two subspaces: blocks vanish
        let mut u = CMat4::<f64>::zeros();
        for (i, j) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
            u[(i, j)] = c(1.0, 0.0);
        }
        let r = extract_geometric(&u, 1.0, 1.0).unwrap();
        assert!(r.not_reunitarized);
        assert!((r.leakage - 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_loop_study_has_no_error() {
        let base = P::from_array([0.3, 0.7, 0.2, 1.1, 0.4, 2.0, 5.0, 1.0]);
        let l = constant_loop(base);
        let rows = convergence_study(&l, 1.0, &[10.0, 20.0, 40.0], conv(), StudyOptions { steps_per_unit: 20.0, ..Default::default() }).unwrap();
        assert_eq!(rows.iter().map(|r| r.t).collect::<Vec<_>>(), vec![10.0, 20.0, 40.0]);
        for r in rows {
            assert!(r.err_plus <= 1e-6 && r.err_minus <= 1e-6 && r.leakage <= 1e-6, "{r:?}");
        }
    }

    #[test]
    fn study_validates_times() {
        let l = reference_loop(8);
        assert!(convergence_study(&l, 1.0, &[1.0, 2.0], conv(), StudyOptions::default()).is_err());
        assert!(convergence_study(&l, 1.0, &[1.0, 3.0, 2.0], conv(), StudyOptions::default()).is_err());
    }

    #[test]
    fn two_level_constant_and_antisymmetry() {
        let still = TwoLevelLoop::<f64> { base: [0.4, 1.0], segments: vec![[0.0, 0.0]] };
        let r = evolve_two_level(&still, 1.0, 50.0, 1000, Profile::Uniform, conv()).unwrap();
        assert!(r.phi_plus.abs() < 1e-12 && r.phi_minus.abs() < 1e-12);

        let rect = TwoLevelLoop::<f64>::rectangle([0.2, 0.9], [0.5, 2.0]);
        let r = evolve_two_level(&rect, 1.0, 300.0, 20_000, Profile::Smoothstep, conv()).unwrap();
        assert!((r.phi_plus + r.phi_minus).abs() <= 1e-6);
        assert!(r.propagator.unitarity_residual() <= 1e-9);
    }

    #[test]
    fn two_level_numeric_curvature_matches_closed_form() {
        let (p, m) = two_level_berry_numeric([0.0, FRAC_PI_4], [0.0, PI / 2.0], conv(), HolonomySign::Connection, 1e-10);
        assert!((p + FRAC_PI_4).abs() <= 1e-7, "{p}");
        assert!((m - FRAC_PI_4).abs() <= 1e-7, "{m}");
        let (p, _) = two_level_berry_numeric([0.0, FRAC_PI_4], [0.0, PI / 2.0], conv(), HolonomySign::Schrodinger, 1e-10);
        assert!((p - FRAC_PI_4).abs() <= 1e-7);
    }
}
