//! Gamma function via the Lanczos approximation (g = 10.900511, 11 terms,
//! coefficients from Pugh 2004) with reflection below 1/2.

use crate::{Error, Result};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 10.900511;

const LANCZOS_COEF: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];

// 2 * sqrt(e / pi)
const TWO_SQRT_E_OVER_PI: f64 = 1.860_382_734_205_265_7;

/// `sin(pi x)` with the argument reduced to [-1/2, 1/2] first.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if n.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

fn lanczos(x: f64) -> f64 {
    let sum = LANCZOS_COEF
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_COEF[0], |s, (i, &c)| s + c / (x + i as f64 - 1.0));
    sum * TWO_SQRT_E_OVER_PI * ((x - 0.5 + LANCZOS_G) / std::f64::consts::E).powf(x - 0.5)
}

/// Gamma function. Errors at the poles `0, -1, -2, ...`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("gamma of NaN".into()));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        Ok(PI / (sin_pi(x) * lanczos(1.0 - x)))
    } else {
        Ok(lanczos(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert!((gamma_fn(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma_fn(5.0).unwrap() - 24.0).abs() < 24.0 * 1e-14);
        assert!((gamma_fn(10.0).unwrap() - 362_880.0).abs() < 362_880.0 * 1e-13);
    }

    #[test]
    fn half_integer_via_duplication() {
        // Legendre duplication at z = 1/2: Gamma(1/2) Gamma(1) = 2^0 sqrt(pi) Gamma(1)
        let oracle = PI.sqrt();
        assert!((gamma_fn(0.5).unwrap() - oracle).abs() < 1e-9);
        assert!((gamma_fn(0.5).unwrap() / oracle - 1.0).abs() < 1e-14);
        // Gamma(-1/2) = -2 sqrt(pi)
        assert!((gamma_fn(-0.5).unwrap() / (-2.0 * oracle) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn poles_are_errors() {
        for x in [0.0, -1.0, -2.0, -3.0] {
            assert!(matches!(gamma_fn(x), Err(Error::Pole(_))));
        }
    }

    #[test]
    fn recurrence_on_half_integer_grid() {
        let mut x = -3.5;
        while x <= 9.5 {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!(((lhs - rhs) / rhs).abs() < 1e-10, "x = {x}");
            x += 1.0;
        }
    }

    #[test]
    fn negative_arguments_match_upward_recurrence() {
        // Gamma(x) = Gamma(x + n) / (x (x+1) ... (x+n-1)) with x + n > 1/2
        for &x in &[-3.999, -2.5, -1.001, -0.0005, 0.0005, 0.3] {
            let mut denom = 1.0;
            let mut y = x;
            while y < 1.5 {
                denom *= y;
                y += 1.0;
            }
            let expected = gamma_fn(y).unwrap() / denom;
            let got = gamma_fn(x).unwrap();
            assert!((got / expected - 1.0).abs() < 1e-12, "x = {x}: {got} vs {expected}");
        }
    }
}
