//! Oracles written independently of the library's quadrature and special
//! functions.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

/// Double-exponential (exp-sinh) rule for `int_0^inf f(x) dx`, refined by
/// halving the step until two levels agree to `rel`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, rel: f64) -> f64 {
    let term = |t: f64| -> f64 {
        let x = (FRAC_PI_2 * t.sinh()).exp();
        let w = FRAC_PI_2 * t.cosh() * x;
        if !x.is_finite() || !w.is_finite() || x == 0.0 {
            return 0.0;
        }
        let v = f(x) * w;
        if v.is_finite() { v } else { 0.0 }
    };
    let (lo, hi) = (-5.0, 4.5);
    let mut h = 0.5;
    let mut sum: f64 = {
        let n = ((hi - lo) / h) as i64;
        (0..=n).map(|i| term(lo + i as f64 * h)).sum()
    };
    let mut estimate = sum * h;
    for _ in 0..12 {
        h /= 2.0;
        let n = ((hi - lo) / h) as i64;
        // new nodes sit at odd multiples of the halved step
        sum += (1..=n).step_by(2).map(|i| term(lo + i as f64 * h)).sum::<f64>();
        let next = sum * h;
        if (next - estimate).abs() <= rel * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `erf(x)` by its Maclaurin series, accurate for moderate `|x|`.
pub fn erf_taylor(x: f64) -> f64 {
    let mut term = x;
    let mut total = x;
    for n in 1..200 {
        term *= -x * x / n as f64;
        let add = term / (2 * n + 1) as f64;
        total += add;
        if add.abs() < 1e-18 * total.abs() {
            break;
        }
    }
    total * 2.0 / std::f64::consts::PI.sqrt()
}
