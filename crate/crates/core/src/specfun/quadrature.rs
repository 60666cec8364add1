//! Globally adaptive Gauss-Kronrod (7/15 point) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! error drops below `max(abs_tol, rel_tol * |I|)`. Semi-infinite ranges are
//! mapped onto `[0, 1)` with `t = a + u / (1 - u)`; the Kronrod nodes never
//! touch the endpoints, so integrable endpoint singularities are tolerated.

use crate::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Tolerances and work limit for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2_000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain(format!(
                "quadrature tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Domain("max_subdivisions must be positive".into()));
        }
        Ok(())
    }

    /// Same limits with both tolerances scaled by `factor`; used for the inner
    /// integral of nested quadrature.
    pub fn tightened(self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..self
        }
    }
}

// Kronrod abscissae (descending, last is the centre); odd indices are the
// 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    at_roundoff: bool,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn eval<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Domain(format!("integrand is not finite at {x:e} ({y})")))
    }
}

fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, centre)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(f, centre - dx)?;
        let f2 = eval(f, centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    let at_roundoff = floor >= error;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(floor);
    }
    Ok(Segment {
        a,
        b,
        value,
        error,
        at_roundoff,
    })
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, q: &QuadratureSpec) -> Result<f64> {
    q.validate()?;
    if a == b {
        return Ok(0.0);
    }
    let first = gauss_kronrod_15(&mut f, a, b)?;
    let mut heap = BinaryHeap::with_capacity(q.max_subdivisions + 1);
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);
    let mut subdivisions = 1;
    loop {
        let tol = q.abs_tol.max(q.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        let worst = *heap.peek().expect("heap is never empty");
        if worst.at_roundoff {
            // every remaining error is dominated by floating-point noise
            break;
        }
        if subdivisions >= q.max_subdivisions {
            return Err(Error::Convergence {
                subdivisions,
                estimate: total,
                error: total_err,
            });
        }
        heap.pop();
        let mid = 0.5 * (worst.a + worst.b);
        let left = gauss_kronrod_15(&mut f, worst.a, mid)?;
        let right = gauss_kronrod_15(&mut f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        if subdivisions % 64 == 0 {
            // resum to keep the running totals from drifting
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    Ok(heap.iter().map(|s| s.value).sum())
}

/// Integrates `f` over `[a, inf)`.
pub fn integrate_from<F: FnMut(f64) -> f64>(mut f: F, a: f64, q: &QuadratureSpec) -> Result<f64> {
    integrate(
        |u| {
            let w = 1.0 - u;
            let t = a + u / w;
            let y = f(t);
            // exponentially decaying integrands are exactly 0 far out
            if y == 0.0 {
                0.0
            } else {
                y / (w * w)
            }
        },
        0.0,
        1.0,
        q,
    )
}

/// Integrates `f` over `[0, inf)`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(f: F, q: &QuadratureSpec) -> Result<f64> {
    integrate_from(f, 0.0, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_degree_22() {
        // a single GK15 panel on [-1, 1] must integrate x^d exactly for d <= 22
        for d in 0..=22 {
            let seg = gauss_kronrod_15(&mut |x: f64| x.powi(d), -1.0, 1.0).unwrap();
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d + 1) as f64 };
            assert!((seg.value - exact).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn gauss_subrule_is_exact_for_degree_13() {
        // the Gauss estimate agrees with Kronrod where both are exact
        for d in 0..=13 {
            let seg = gauss_kronrod_15(&mut |x: f64| x.powi(d), -1.0, 1.0).unwrap();
            assert!(seg.error < 1e-13, "degree {d}: error {}", seg.error);
        }
    }

    #[test]
    fn semi_infinite_basics() {
        let q = QuadratureSpec::default();
        type Case = (fn(f64) -> f64, f64);
        let cases: [Case; 3] = [
            (|t| (-t).exp(), 1.0),
            (|t| 2.0 * (-t).exp() * (1.0 - (-t).exp()), 1.0),
            (|t| t * (-t).exp(), 1.0),
        ];
        for (f, exact) in cases {
            let v = integrate_semi_infinite(f, &q).unwrap();
            assert!((v - exact).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn endpoint_singularity() {
        // int_0^inf t^(-1/2) e^(-t) dt = sqrt(pi)
        let q = QuadratureSpec::default();
        let v = integrate_semi_infinite(|t| t.powf(-0.5) * (-t).exp(), &q).unwrap();
        assert!((v / std::f64::consts::PI.sqrt() - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn refuses_to_return_unconverged_values() {
        let q = QuadratureSpec::new(1e-12, 1e-300, 5).unwrap();
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &q);
        assert!(matches!(r, Err(Error::Convergence { .. })));
    }

    #[test]
    fn rejects_non_finite_integrand() {
        let q = QuadratureSpec::default();
        assert!(integrate(|_| f64::NAN, 0.0, 1.0, &q).is_err());
    }

    #[test]
    fn insensitive_to_subdivision_budget() {
        let f = |t: f64| (1.0 + 50.0 * t).powf(-1.5) * 2.0 * (-2.0 * t).exp();
        let q = QuadratureSpec::default();
        let a = integrate_semi_infinite(f, &q).unwrap();
        let b = integrate_semi_infinite(f, &QuadratureSpec { max_subdivisions: 4_000, ..q }.tightened(0.5)).unwrap();
        assert!((a - b).abs() <= 10.0 * q.rel_tol * a.abs());
    }
}
