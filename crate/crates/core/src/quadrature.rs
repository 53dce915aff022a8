//! Adaptive Gauss-Kronrod (7/15) quadrature for small vector-valued
//! integrands, and its iterated 2-D form. Subdivision is recursive bisection
//! with a fixed summation order, so results are bit-reproducible.

use crate::scalar::Real;

const MAX_DEPTH: u32 = 12;

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the odd Kronrod nodes (XK[1], XK[3], XK[5], XK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Kronrod panel: (integral, error estimate as max-norm of K15 - G7).
fn panel<T: Real, const D: usize>(f: &mut impl FnMut(T) -> [T; D], a: T, b: T) -> ([T; D], T) {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let r = (b - a) * half;
    let mut k = [T::zero(); D];
    let mut g = [T::zero(); D];
    let mut add = |v: [T; D], wk: f64, wg: Option<f64>| {
        for i in 0..D {
            k[i] = k[i] + T::lit(wk) * v[i];
            if let Some(w) = wg {
                g[i] = g[i] + T::lit(w) * v[i];
            }
        }
    };
    for j in 0..7 {
        let x = T::lit(XK[j]) * r;
        let wg = (j % 2 == 1).then(|| WG[j / 2]);
        add(f(c - x), WK[j], wg);
        add(f(c + x), WK[j], wg);
    }
    add(f(c), WK[7], Some(WG[3]));
    let mut err = T::zero();
    for i in 0..D {
        k[i] = k[i] * r;
        err = err.max(((k[i] - g[i] * r)).abs());
    }
    (k, err)
}

fn adapt<T: Real, const D: usize>(
    f: &mut impl FnMut(T) -> [T; D],
    a: T,
    b: T,
    tol: T,
    depth: u32,
) -> [T; D] {
    let (v, err) = panel(f, a, b);
    if err <= tol || depth >= MAX_DEPTH {
        return v;
    }
    let m = (a + b) * T::lit(0.5);
    let half_tol = tol * T::lit(0.5);
    let l = adapt(f, a, m, half_tol, depth + 1);
    let r = adapt(f, m, b, half_tol, depth + 1);
    std::array::from_fn(|i| l[i] + r[i])
}

/// `\int_a^b f` componentwise, to absolute tolerance `tol` (max-norm).
pub fn integrate<T: Real, const D: usize>(mut f: impl FnMut(T) -> [T; D], a: T, b: T, tol: T) -> [T; D] {
    if a == b {
        return [T::zero(); D];
    }
    adapt(&mut f, a, b, tol, 0)
}

/// `\int_{x0}^{x1} \int_{y0}^{y1} f(x, y) dy dx` by iterated adaptive
/// quadrature.
pub fn integrate_2d<T: Real, const D: usize>(f: impl Fn(T, T) -> [T; D], x: [T; 2], y: [T; 2], tol: T) -> [T; D] {
    let wy = (y[1] - y[0]).abs();
    let wx = (x[1] - x[0]).abs();
    if wx == T::zero() || wy == T::zero() {
        return [T::zero(); D];
    }
    // split the budget between the inner and outer rules
    let half = T::lit(0.5);
    let inner_tol = tol * half / wx;
    integrate(|xv| integrate(|yv| f(xv, yv), y[0], y[1], inner_tol), x[0], x[1], tol * half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x: f64| [x.powi(20), 1.0], -1.0, 2.0, 1e-14);
        let exact = (2f64.powi(21) + 1.0) / 21.0;
        assert!((v[0] - exact).abs() / exact < 1e-13);
        assert!((v[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let v = integrate(|x: f64| [(50.0 * x).sin().powi(2), 1.0 / (1e-3 + x * x)], -1.0, 1.0, 1e-11);
        let s = 1.0 - (100f64).sin() / 100.0;
        assert!((v[0] - s).abs() < 1e-10);
        let p = 2.0 * (1.0 / 1e-3f64.sqrt()).atan() / 1e-3f64.sqrt();
        assert!((v[1] - p).abs() / p < 1e-10);
    }

    #[test]
    fn two_dimensional() {
        let v = integrate_2d(|x: f64, y: f64| [(2.0 * x).sin(), x * y], [0.0, PI / 4.0], [0.0, PI], 1e-12);
        assert!((v[0] - PI / 2.0).abs() < 1e-12);
        assert!((v[1] - (PI * PI / 32.0) * (PI * PI / 2.0)).abs() < 1e-11);
        assert_eq!(integrate_2d(|_: f64, _: f64| [1.0], [1.0, 1.0], [0.0, 1.0], 1e-9), [0.0]);
    }

    #[test]
    fn f32_works() {
        let v = integrate(|x: f32| [x.cos()], 0.0, 1.0, 1e-6);
        assert!((v[0] - 1f32.sin()).abs() < 1e-6);
    }
}
