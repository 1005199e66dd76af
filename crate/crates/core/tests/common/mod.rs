//! Reference computations shared by integration tests.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

/// Tanh-sinh quadrature of `f` over `[a, b]`. `f` receives `(x, x - a, b - x)`
/// so that integrands can avoid cancellation near the endpoints.
pub fn tanh_sinh(a: f64, b: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let half = (b - a) / 2.0;
    let eval = |h: f64, odd_only: bool| -> f64 {
        let mut acc = 0.0;
        let mut k: i64 = if odd_only { 1 } else { 0 };
        loop {
            let u = k as f64 * h;
            if u > 4.0 {
                break;
            }
            let s = FRAC_PI_2 * u.sinh();
            let w = FRAC_PI_2 * u.cosh() / s.cosh().powi(2);
            // distances from each endpoint for the node at +u
            let near_b = (b - a) / (1.0 + (2.0 * s).exp());
            let near_a = (b - a) - near_b;
            let mut term = w * f(a + near_a, near_a, near_b);
            if k != 0 {
                term += w * f(b - near_a, near_b, near_a);
            }
            if term.is_finite() {
                acc += term;
            }
            k += if odd_only { 2 } else { 1 };
        }
        acc
    };
    let mut h = 0.5;
    let mut sum = eval(h, false);
    let mut est = half * h * sum;
    for _ in 0..10 {
        h /= 2.0;
        sum += eval(h, true);
        let next = half * h * sum;
        if (next - est).abs() <= 1e-15 * next.abs().max(1e-300) {
            return next;
        }
        est = next;
    }
    est
}

/// Two-sided Student t tail `P(|T| >= |t|)` with `df` degrees of freedom,
/// from the density under `t = sqrt(df) tan(theta)`, which is proportional
/// to `cos(theta)^(df - 1)` on `(-pi/2, pi/2)`.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let k = df - 1.0;
    let theta0 = (t.abs() / df.sqrt()).atan();
    let pow = |c: f64| if k == 0.0 { 1.0 } else { (k * c.ln()).exp() };
    // cos(x) = sin(pi/2 - x); use whichever form is exact near the endpoint
    let density = |x: f64, _from_a: f64, to_b: f64| {
        let c = if to_b < 0.5 { to_b.sin() } else { x.cos() };
        pow(c)
    };
    let tail = tanh_sinh(theta0, FRAC_PI_2, density);
    let full = tanh_sinh(0.0, FRAC_PI_2, density);
    (tail / full).clamp(0.0, 1.0)
}

/// Welch statistic and Satterthwaite degrees of freedom, written out
/// longhand.
pub fn welch_reference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let v = |xs: &[f64]| {
        let mu = m(xs);
        xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() as f64 - 1.0)
    };
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (v(a) / na, v(b) / nb);
    let t = (m(a) - m(b)) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    (t, df)
}
