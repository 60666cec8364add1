//! Special functions and quadrature used by the analytical evaluators.

// coefficient tables are kept as published
#![allow(clippy::excessive_precision)]

mod erf;
mod gamma;
mod quadrature;

pub use erf::{erf, erfc, erfcx, ln_erfc};
pub use gamma::gamma_fn;
pub use quadrature::{integrate, integrate_from, integrate_semi_infinite, QuadratureSpec};

use crate::{Error, Result};

/// Tricomi confluent hypergeometric function with `a = 1`:
/// `U(1, b, z) = int_0^inf exp(-z t) (1 + t)^(b - 2) dt`.
///
/// Evaluated after the substitution `s = z t`, so the integrand always decays
/// like `exp(-s)` and the `(1 + s/z)^(b-2)` factor carries the scale `z`.
pub fn hyper_u_a1(b: f64, z: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("U(1, b, z) requires z > 0, got z = {z}")));
    }
    if !b.is_finite() {
        return Err(Error::Domain(format!("U(1, b, z) requires finite b, got b = {b}")));
    }
    let exponent = b - 2.0;
    let integral = integrate_semi_infinite(|s| (-s + exponent * (s / z).ln_1p()).exp(), q)?;
    Ok(integral / z)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// e * E1(1) from the convergent series E1(x) = -gamma - ln x - sum (-x)^k / (k k!).
    fn e_times_e1_at_one() -> f64 {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..40 {
            term *= -1.0 / k as f64;
            sum += term / k as f64;
        }
        std::f64::consts::E * (-EULER_GAMMA - sum)
    }

    #[test]
    fn b_two_reduces_to_reciprocal() {
        let q = QuadratureSpec::default();
        for z in [0.5, 2.0, 10.0] {
            let u = hyper_u_a1(2.0, z, &q).unwrap();
            assert!((u * z - 1.0).abs() < 1e-10, "z = {z}: {u}");
        }
    }

    #[test]
    fn b_one_is_scaled_exponential_integral() {
        let oracle = e_times_e1_at_one();
        assert!((oracle - 0.596_347_362).abs() < 1e-8);
        let u = hyper_u_a1(1.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((u - oracle).abs() < 1e-8, "{u} vs {oracle}");
    }

    #[test]
    fn large_z_leading_term() {
        let z = 1e4;
        let u = hyper_u_a1(3.0, z, &QuadratureSpec::default()).unwrap();
        assert!((z * u - 1.0).abs() < 1e-3);
    }

    #[test]
    fn decreasing_in_z() {
        let q = QuadratureSpec::default();
        for b in [-2.0, 0.0, 1.0, 1.5, 3.0] {
            let mut prev = f64::INFINITY;
            for i in -6..=8 {
                let z = 10f64.powf(i as f64 * 0.5);
                let u = hyper_u_a1(b, z, &q).unwrap();
                assert!(u > 0.0 && u < prev, "b = {b}, z = {z}");
                prev = u;
            }
        }
    }

    #[test]
    fn rejects_nonpositive_z() {
        let q = QuadratureSpec::default();
        assert!(matches!(hyper_u_a1(1.0, 0.0, &q), Err(Error::Domain(_))));
        assert!(matches!(hyper_u_a1(1.0, -1.0, &q), Err(Error::Domain(_))));
    }
}
