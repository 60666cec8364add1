//! Ordered Rayleigh power gains.
//!
//! With unit-variance Rayleigh fading, each power gain `|h_k|^2` is a
//! unit-mean exponential variate; users are identified by their rank in the
//! ascending order of gains (index 0 is the weakest user).

use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Master seed of a reproducible sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Independent stream number `index` under this seed. Streams with the
    /// same `(seed, index)` are bit-identical across runs and platforms.
    pub fn stream(self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }
}

/// One realization of the K channel power gains, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSample {
    gains: Vec<f64>,
}

impl GainSample {
    /// Wraps already-ordered gains, rejecting negative or unsorted input.
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::Domain("a gain sample needs at least one user".into()));
        }
        if gains.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::Domain(format!("gains must be finite and non-negative: {gains:?}")));
        }
        if gains.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain(format!("gains must be sorted ascending: {gains:?}")));
        }
        Ok(Self { gains })
    }

    /// Sorts raw (unordered) gains into a sample.
    pub fn from_unordered(mut gains: Vec<f64>) -> Result<Self> {
        gains.sort_unstable_by(f64::total_cmp);
        Self::new(gains)
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn k(&self) -> usize {
        self.gains.len()
    }
}

/// Unit-mean exponential variate by inversion, `-ln(u)` with `u` in (0, 1].
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    -u.ln()
}

/// Fills `out` with ordered i.i.d. unit-mean exponential gains.
#[inline]
pub fn fill_ordered_gains<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for g in out.iter_mut() {
        *g = exponential(rng);
    }
    if out.len() == 2 {
        if out[0] > out[1] {
            out.swap(0, 1);
        }
    } else {
        out.sort_unstable_by(f64::total_cmp);
    }
}

/// Draws one ordered realization of `k` gains.
pub fn sample_ordered_gains<R: Rng + ?Sized>(k: usize, rng: &mut R) -> GainSample {
    assert!(k >= 1, "user count must be at least 1");
    let mut gains = vec![0.0; k];
    fill_ordered_gains(rng, &mut gains);
    GainSample { gains }
}

/// Which two-user order-statistic density to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderDensity {
    /// Minimum of two unit exponentials: `2 e^{-2x}`.
    Weak,
    /// Maximum of two unit exponentials: `2 e^{-x} (1 - e^{-x})`.
    Strong,
    /// Joint density of (min, max): `2 e^{-x1} e^{-x2}` on `x1 <= x2`.
    Joint,
}

/// Two-user order-statistic densities. `x2` is only read for [`OrderDensity::Joint`].
pub fn pdf_k2(which: OrderDensity, x1: f64, x2: Option<f64>) -> Result<f64> {
    if !(x1 >= 0.0) {
        return Err(Error::Domain(format!("density argument must be non-negative, got {x1}")));
    }
    match which {
        OrderDensity::Weak => Ok(2.0 * (-2.0 * x1).exp()),
        OrderDensity::Strong => Ok(-2.0 * (-x1).exp() * (-x1).exp_m1()),
        OrderDensity::Joint => {
            let x2 = x2.ok_or_else(|| Error::Domain("joint density needs x2".into()))?;
            if !(x2 >= 0.0) {
                return Err(Error::Domain(format!("density argument must be non-negative, got {x2}")));
            }
            if x2 < x1 {
                Ok(0.0)
            } else {
                Ok(2.0 * (-x1 - x2).exp())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{integrate_from, integrate_semi_infinite, QuadratureSpec};

    const N: usize = 1_000_000;

    #[test]
    fn single_user_mean_is_one() {
        let mut rng = RngSeed(7).stream(0);
        let mean = (0..N).map(|_| sample_ordered_gains(1, &mut rng).gains()[0]).sum::<f64>() / N as f64;
        assert!((mean - 1.0).abs() < 0.003, "{mean}");
    }

    #[test]
    fn two_user_order_statistic_means() {
        let mut rng = RngSeed(11).stream(0);
        let mut min_sum = 0.0;
        let mut max_sum = 0.0;
        for _ in 0..N {
            let s = sample_ordered_gains(2, &mut rng);
            min_sum += s.gains()[0];
            max_sum += s.gains()[1];
        }
        assert!((min_sum / N as f64 - 0.5).abs() < 0.002);
        assert!((max_sum / N as f64 - 1.5).abs() < 0.004);
    }

    #[test]
    fn ordering_matches_brute_force_min_max() {
        // same stream, raw pairs sorted by hand
        let mut a = RngSeed(3).stream(5);
        let mut b = RngSeed(3).stream(5);
        for _ in 0..10_000 {
            let s = sample_ordered_gains(2, &mut a);
            let (u, v) = (exponential(&mut b), exponential(&mut b));
            assert_eq!(s.gains(), &[u.min(v), u.max(v)]);
        }
    }

    #[test]
    fn weak_gain_passes_kolmogorov_smirnov() {
        let mut rng = RngSeed(2024).stream(0);
        let mut xs: Vec<f64> = (0..N).map(|_| sample_ordered_gains(2, &mut rng).gains()[0]).collect();
        xs.sort_unstable_by(f64::total_cmp);
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = -(-2.0 * x).exp_m1();
                (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
            })
            .fold(0.0, f64::max);
        // asymptotic 1% critical value
        assert!(d < 1.628 / n.sqrt(), "KS distance {d}");
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<f64> = {
            let mut r = RngSeed(99).stream(3);
            (0..100).map(|_| exponential(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = RngSeed(99).stream(3);
            (0..100).map(|_| exponential(&mut r)).collect()
        };
        let c: Vec<f64> = {
            let mut r = RngSeed(99).stream(4);
            (0..100).map(|_| exponential(&mut r)).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn density_point_values() {
        assert_eq!(pdf_k2(OrderDensity::Weak, 0.0, None).unwrap(), 2.0);
        assert_eq!(pdf_k2(OrderDensity::Strong, 0.0, None).unwrap(), 0.0);
        assert_eq!(pdf_k2(OrderDensity::Joint, 1.0, Some(0.5)).unwrap(), 0.0);
        assert!(pdf_k2(OrderDensity::Weak, -0.1, None).is_err());
        assert!(pdf_k2(OrderDensity::Joint, 0.1, Some(-1.0)).is_err());
    }

    #[test]
    fn marginals_integrate_to_one() {
        let q = QuadratureSpec::default();
        for which in [OrderDensity::Weak, OrderDensity::Strong] {
            let total = integrate_semi_infinite(|x| pdf_k2(which, x, None).unwrap(), &q).unwrap();
            assert!((total - 1.0).abs() < 1e-9, "{which:?}: {total}");
        }
    }

    #[test]
    fn weak_marginal_is_joint_integrated_over_strong() {
        let q = QuadratureSpec::default();
        for i in 0..20 {
            let x = i as f64 * 0.25;
            let m = integrate_from(|y| pdf_k2(OrderDensity::Joint, x, Some(y)).unwrap(), x, &q).unwrap();
            let w = pdf_k2(OrderDensity::Weak, x, None).unwrap();
            assert!((m - w).abs() < 1e-8, "x = {x}: {m} vs {w}");
        }
    }

    #[test]
    fn gain_sample_validation() {
        assert!(GainSample::new(vec![1.0, 0.5]).is_err());
        assert!(GainSample::new(vec![-1.0, 0.5]).is_err());
        assert!(GainSample::new(vec![]).is_err());
        assert_eq!(GainSample::from_unordered(vec![2.0, 1.0]).unwrap().gains(), &[1.0, 2.0]);
    }
}
