//! Modified Bessel function of the second kind for complex order and real
//! argument, from `K_ν(x) = ∫₀^∞ e^{-x cosh t} cosh(νt) dt`.
//!
//! The integrand is even and entire in `t` and decays double-exponentially,
//! so the trapezoid rule on `[0, t_max]` converges geometrically in `1/h`.
//! Each evaluation is done at step `h` and `h/2` and the difference serves as
//! the error estimate. The tail is cut where the log-integrand has dropped 45
//! below its maximum.
//!
//! Accuracy is measured against `∫|integrand|`, which equals `|K_ν|` for real
//! order. For large `|Im ν|` the integral itself is exponentially small
//! compared with its integrand and only this absolute scale is attainable.

use num_complex::Complex64;

use crate::error::{Error, Result};

const TAIL_DROP: f64 = 45.0;
pub(crate) const TARGET: f64 = 1e-9;
const MAX_HALVINGS: u32 = 6;

/// Step and cutoff for orders with `|Re ν| <= re_max`, `|Im ν| <= im_max`.
fn layout(x: f64, re_max: f64, im_max: f64) -> (f64, f64) {
    // log-integrand (scaled by e^x): -x (cosh t - 1) + re_max t
    let phi = |t: f64| -x * (t.cosh() - 1.0) + re_max * t;
    let t_peak = (re_max / x).asinh();
    let peak = phi(t_peak);
    let mut hi = t_peak + 1.0;
    while peak - phi(hi) < TAIL_DROP {
        hi *= 2.0;
    }
    let mut lo = t_peak;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if peak - phi(mid) < TAIL_DROP {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = (1.0f64 / 16.0)
        .min(0.5 / x.sqrt())
        .min(std::f64::consts::PI.powi(2) / (TAIL_DROP + 0.5 * std::f64::consts::PI * im_max));
    (h, hi)
}

/// Trapezoid sums at `h` and `h/2` of an integrand producing several values
/// per node. `eval(t, out)` adds nothing; it overwrites `out` with the
/// integrand values at `t` (already scaled by `e^x`).
struct Sums {
    coarse: Vec<Complex64>,
    fine: Vec<Complex64>,
    l1: Vec<f64>,
}

fn trapezoid<F: FnMut(f64, &mut [Complex64])>(count: usize, h: f64, t_max: f64, mut eval: F) -> Sums {
    let mut buf = vec![Complex64::new(0.0, 0.0); count];
    let mut coarse = vec![Complex64::new(0.0, 0.0); count];
    let mut mid = vec![Complex64::new(0.0, 0.0); count];
    let mut l1 = vec![0.0; count];
    let steps = (t_max / h).ceil() as usize;
    for i in 0..=steps {
        let w = if i == 0 { 0.5 } else { 1.0 };
        eval(i as f64 * h, &mut buf);
        for (c, (s, v)) in coarse.iter_mut().zip(l1.iter_mut().zip(&buf)) {
            *c += v * w;
            *s += v.norm() * w;
        }
        if i < steps {
            eval((i as f64 + 0.5) * h, &mut buf);
            for (c, (s, v)) in mid.iter_mut().zip(l1.iter_mut().zip(&buf)) {
                *c += v;
                *s += v.norm();
            }
        }
    }
    let fine = coarse.iter().zip(&mid).map(|(c, m)| (c + m) * (0.5 * h)).collect();
    Sums {
        coarse: coarse.iter().map(|c| c * h).collect(),
        fine,
        l1: l1.iter().map(|s| s * 0.5 * h).collect(),
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("K_nu(x) needs finite x > 0, got {x}")));
    }
    Ok(())
}

/// `K_ν(x)` for complex `ν` and `x > 0`.
pub fn bessel_k_complex_order(nu: Complex64, x: f64) -> Result<Complex64> {
    check_x(x)?;
    let (mut h, t_max) = layout(x, nu.re.abs(), nu.im.abs());
    let mut estimate = f64::INFINITY;
    for _ in 0..=MAX_HALVINGS {
        let s = trapezoid(1, h, t_max, |t, out| {
            let damp = -x * (t.cosh() - 1.0);
            out[0] = ((nu * t + damp).exp() + (-nu * t + damp).exp()) * 0.5;
        });
        let err = (s.fine[0] - s.coarse[0]).norm();
        estimate = if s.l1[0] > 0.0 { err / s.l1[0] } else { 0.0 };
        if estimate <= TARGET {
            return Ok(s.fine[0] * (-x).exp());
        }
        h *= 0.5;
    }
    Err(Error::Bessel { nu, x, estimate })
}

/// `K_{a + i·imag}(x)` for `a = 0, 1, ..., max_order`, sharing one set of nodes.
///
/// Negative integer parts follow from evenness and conjugation:
/// `K_{-a + ib}(x) = K_{a - ib}(x) = conj K_{a + ib}(x)`.
pub fn bessel_k_integer_family(max_order: usize, imag: f64, x: f64) -> Result<Vec<Complex64>> {
    Ok(bessel_k_integer_family_scaled(max_order, imag, x)?.0)
}

/// As [`bessel_k_integer_family`], also returning `∫|integrand|` per order,
/// the scale the values are accurate to.
pub fn bessel_k_integer_family_scaled(max_order: usize, imag: f64, x: f64) -> Result<(Vec<Complex64>, Vec<f64>)> {
    check_x(x)?;
    let count = max_order + 1;
    let (mut h, t_max) = layout(x, max_order as f64, imag.abs());
    let mut worst = 0.0;
    let mut worst_order = 0;
    for _ in 0..=MAX_HALVINGS {
        let s = trapezoid(count, h, t_max, |t, out| {
            let damp = (-x * (t.cosh() - 1.0)).exp();
            let up = t.exp();
            let down = 1.0 / up;
            let (sin, cos) = (imag * t).sin_cos();
            let phase = Complex64::new(cos, sin);
            let mut plus = phase * (0.5 * damp);
            let mut minus = phase.conj() * (0.5 * damp);
            for v in out.iter_mut() {
                *v = plus + minus;
                plus *= up;
                minus *= down;
            }
        });
        worst = 0.0;
        for a in 0..count {
            let err = (s.fine[a] - s.coarse[a]).norm();
            let rel = if s.l1[a] > 0.0 { err / s.l1[a] } else { 0.0 };
            if rel > worst {
                worst = rel;
                worst_order = a;
            }
        }
        if worst <= TARGET {
            let scale = (-x).exp();
            let values = s.fine.iter().map(|v| v * scale).collect();
            return Ok((values, s.l1.iter().map(|v| v * scale).collect()));
        }
        h *= 0.5;
    }
    Err(Error::Bessel {
        nu: Complex64::new(worst_order as f64, imag),
        x,
        estimate: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(nu_re: f64, nu_im: f64, x: f64) -> Complex64 {
        bessel_k_complex_order(Complex64::new(nu_re, nu_im), x).unwrap()
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[0.01, 0.3, 1.0, 7.5, 40.0, 200.0] {
            let exact = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
            let v = k(0.5, 0.0, x);
            assert!((v.re - exact).abs() < 1e-13 * exact, "x = {x}: {v} vs {exact}");
            assert_eq!(v.im, 0.0);
        }
        assert!((k(0.5, 0.0, 1.0).re - 0.4610685).abs() < 1e-7);
    }

    #[test]
    fn reference_values() {
        // K_0(1), K_1(1), K_5(2), K_0(0.01): tabulated values
        assert!((k(0.0, 0.0, 1.0).re - 0.421_024_438_240_708_3).abs() < 1e-14);
        assert!((k(1.0, 0.0, 1.0).re - 0.601_907_230_197_234_6).abs() < 1e-14);
        assert!((k(5.0, 0.0, 2.0).re / 9.431_049_100_596_467 - 1.0).abs() < 1e-13);
        assert!((k(0.0, 0.0, 0.01).re / 4.721_244_730_161_08 - 1.0).abs() < 1e-13);
        // K_{3/2}(x) = √(π/2x) e^{-x} (1 + 1/x)
        let x = 2.5f64;
        let exact = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() * (1.0 + 1.0 / x);
        assert!((k(1.5, 0.0, x).re / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn complex_order_reference_values() {
        let cases = [
            (2.0, 5.0, 1.5, Complex64::new(0.008_674_474_807_920_259, 0.004_229_062_271_911_654)),
            (0.5, -3.0, 0.2, Complex64::new(0.021_895_661_097_202_08, -0.029_557_836_798_101_44)),
            (3.0, -8.0, 20.0, Complex64::new(5.471_563_862_693_411e-11, -1.392_282_816_329_679_3e-10)),
        ];
        for (re, im, x, expect) in cases {
            let v = k(re, im, x);
            assert!((v - expect).norm() < 1e-12 * expect.norm(), "{v} vs {expect}");
        }
    }

    #[test]
    fn imaginary_order_is_real() {
        // K_{ib}(x) is real for real x
        let v = k(0.0, 3.0, 2.0);
        assert!(v.im.abs() < 1e-16);
        assert!((v.re - 0.014_238_040_755_583_18).abs() < 1e-14);
    }

    #[test]
    fn large_order_small_argument() {
        // K_ν(x) ~ Γ(ν)/2 (2/x)^ν for x → 0
        let nu = 14.0f64;
        let x = 1e-3f64;
        let approx = 0.5 * statrs::function::gamma::gamma(nu) * (2.0 / x).powf(nu);
        let v = k(nu, 0.0, x).re;
        assert!((v / approx - 1.0).abs() < 1e-4);
    }

    #[test]
    fn family_matches_single_evaluation() {
        for &(imag, x) in &[(0.0, 1.0), (-6.0, 0.05), (12.0, 30.0), (-40.0, 3.0)] {
            let fam = bessel_k_integer_family(14, imag, x).unwrap();
            for (a, v) in fam.iter().enumerate() {
                let single = k(a as f64, imag, x);
                let scale = k(a as f64, 0.0, x).norm();
                assert!((v - single).norm() <= 1e-13 * scale, "a={a} imag={imag} x={x}");
            }
        }
    }

    #[test]
    fn family_scale() {
        let (real, l1) = bessel_k_integer_family_scaled(6, 0.0, 2.0).unwrap();
        for (v, s) in real.iter().zip(&l1) {
            assert!((s / v.re - 1.0).abs() < 1e-13);
        }
        let (osc, l1) = bessel_k_integer_family_scaled(6, 25.0, 2.0).unwrap();
        for (v, s) in osc.iter().zip(&l1) {
            assert!(*s > 1e3 * v.norm());
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_k_complex_order(Complex64::new(1.0, 0.0), 0.0).is_err());
        assert!(bessel_k_complex_order(Complex64::new(1.0, 0.0), -1.0).is_err());
        assert!(bessel_k_integer_family(3, 0.0, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn even_in_order(re in -20.0f64..20.0, im in -10.0f64..10.0, x in 0.01f64..50.0) {
            let nu = Complex64::new(re, im);
            let a = bessel_k_complex_order(nu, x).unwrap();
            let b = bessel_k_complex_order(-nu, x).unwrap();
            prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-300));
        }

        #[test]
        fn conjugate_order(re in -20.0f64..20.0, im in -10.0f64..10.0, x in 0.01f64..50.0) {
            let nu = Complex64::new(re, im);
            let a = bessel_k_complex_order(nu, x).unwrap();
            let b = bessel_k_complex_order(nu.conj(), x).unwrap();
            prop_assert!((a.conj() - b).norm() <= 1e-10 * a.norm().max(1e-300));
        }

        #[test]
        fn recurrence(re in 0.0f64..10.0, im in -4.0f64..4.0, x in 0.2f64..20.0) {
            // K_{ν+1} - K_{ν-1} = (2ν/x) K_ν
            let nu = Complex64::new(re, im);
            let kp = bessel_k_complex_order(nu + 1.0, x).unwrap();
            let km = bessel_k_complex_order(nu - 1.0, x).unwrap();
            let k0 = bessel_k_complex_order(nu, x).unwrap();
            let lhs = kp - km;
            let rhs = k0 * (nu * 2.0 / x);
            prop_assert!((lhs - rhs).norm() <= 1e-10 * kp.norm().max(km.norm()));
        }
    }
}
