//! Invariant suite behind the `validate` command.

use crate::channel::{pdf_k2, OrderDensity, RngSeed};
use crate::closed_form::{
    ec_nomar_event_k2, ec_nomar_strong_highsnr, ec_nomar_strong_timeshare, ec_nomar_weak_closed, ec_numeric_k2,
    highsnr_moment_factor, tau_closed_form, StrategyModel, TwoUser, TwoUserParams,
};
use crate::monte_carlo::{combined_se, MonteCarlo};
use crate::rate_model::NetworkConfig;
use crate::specfun::{erf, gamma_fn, hyper_u_a1, integrate_semi_infinite, QuadratureSpec};
use crate::{db_to_linear, Result};
use std::fmt;

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &'static str, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(Check { name, passed, detail });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

fn params(db: f64, beta1: f64, beta2: f64) -> Result<TwoUserParams> {
    TwoUserParams::new(0.2, 0.8, db_to_linear(db), beta1, beta2)
}

const SNR_GRID: [f64; 6] = [-10.0, 0.0, 10.0, 20.0, 30.0, 40.0];
const BETA_GRID: [f64; 4] = [-0.5, -1.0, -2.0, -4.0];

/// Runs the invariant suite with `n` Monte-Carlo samples per point.
pub fn run_validation(n: u64, seed: RngSeed, workers: usize) -> ValidationReport {
    let q = QuadratureSpec::default();
    let mut report = ValidationReport::default();

    report.record("special functions", (|| {
        let e = (erf(1.0) - 0.842700792949715).abs();
        let g = (-7..=19)
            .map(|i| {
                let x = i as f64 * 0.5;
                Ok(((gamma_fn(x + 1.0)? - x * gamma_fn(x)?) / gamma_fn(x + 1.0)?).abs())
            })
            .filter(|r: &Result<f64>| !matches!(r, Err(crate::Error::Pole(_))))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let mut u = 0.0f64;
        for z in [0.5, 2.0, 10.0] {
            u = u.max((hyper_u_a1(2.0, z, &q)? * z - 1.0).abs());
        }
        let weak = integrate_semi_infinite(|x| pdf_k2(OrderDensity::Weak, x, None).unwrap_or(f64::NAN), &q)?;
        let strong = integrate_semi_infinite(|x| pdf_k2(OrderDensity::Strong, x, None).unwrap_or(f64::NAN), &q)?;
        let m = (weak - 1.0).abs().max((strong - 1.0).abs());
        Ok((
            e <= 1e-12 && g <= 1e-10 && u <= 1e-10 && m <= 1e-9,
            format!("erf {e:.1e}, gamma {g:.1e}, U {u:.1e}, marginals {m:.1e}"),
        ))
    })());

    report.record("tau limits and monotonicity", (|| {
        let lo = tau_closed_form(&TwoUserParams::new(0.2, 0.8, 1e-6, -2.0, -2.0)?);
        let hi = tau_closed_form(&TwoUserParams::new(0.2, 0.8, 1e8, -2.0, -2.0)?);
        let mut mono = true;
        let mut prev = f64::INFINITY;
        for i in 0..=16 {
            let t = tau_closed_form(&params(-40.0 + 5.0 * i as f64, -2.0, -2.0)?);
            mono &= t <= prev;
            prev = t;
        }
        Ok((lo >= 1.0 - 1e-6 && hi <= 1e-3 && mono, format!("tau(1e-6) = {lo}, tau(1e8) = {hi:.3e}")))
    })());

    report.record("tau closed form vs MC", (|| {
        let mc = MonteCarlo::new(n, seed)?.with_workers(workers);
        let mut worst = 0.0f64;
        let mut ok = true;
        for db in [-20.0, 0.0, 10.0, 20.0, 40.0] {
            let cf = tau_closed_form(&params(db, -2.0, -2.0)?);
            let est = mc.tau(&NetworkConfig::reference(2, db_to_linear(db))?)?;
            let gap = (cf - est.value).abs();
            ok &= gap <= (3.0 * est.std_err).max(0.005);
            worst = worst.max(gap);
        }
        Ok((ok, format!("max gap {worst:.2e}")))
    })());

    report.record("weak user ordering", (|| {
        let mut ok = true;
        for beta in BETA_GRID {
            let mut prev = f64::NEG_INFINITY;
            for db in SNR_GRID {
                let p = params(db, beta, beta)?;
                let r = ec_nomar_weak_closed(&p, &q)?;
                let n_ = ec_numeric_k2(StrategyModel::NOMA, TwoUser::Weak, &p, &q)?;
                let o = ec_numeric_k2(StrategyModel::OMA, TwoUser::Weak, &p, &q)?;
                ok &= n_ >= r - 1e-6 && r >= o - 1e-6 && r >= prev - 1e-9;
                prev = r;
            }
        }
        Ok((ok, "NOMA >= NOMA-R >= OMA, NOMA-R nondecreasing in SNR".into()))
    })());

    report.record("strong user ordering", (|| {
        let mut ok = true;
        let mut violations = 0;
        for beta in BETA_GRID {
            for db in SNR_GRID {
                let p = params(db, beta, beta)?;
                let r = ec_nomar_event_k2(TwoUser::Strong, &p, &q)?;
                ok &= r >= ec_numeric_k2(StrategyModel::NOMA, TwoUser::Strong, &p, &q)? - 1e-9;
                ok &= r >= ec_numeric_k2(StrategyModel::OMA, TwoUser::Strong, &p, &q)? - 1e-9;
                let cfg = NetworkConfig::new(vec![0.2, 0.8], p.rho, vec![beta, beta])?;
                let est = MonteCarlo::new(n, seed)?.with_workers(workers).point(
                    &cfg,
                    &[StrategyModel::OMA, StrategyModel::NOMA, StrategyModel::NOMA_R_EVENT],
                )?;
                let user2 = |m| est.get(m).map(|s| s.users[1]).expect("model was requested");
                let rr = user2(StrategyModel::NOMA_R_EVENT);
                for other in [user2(StrategyModel::NOMA), user2(StrategyModel::OMA)] {
                    if rr.value < other.value - 3.0 * combined_se(rr.std_err, other.std_err) {
                        violations += 1;
                    }
                }
            }
        }
        Ok((ok && violations == 0, format!("{violations} MC violations beyond 3 SE")))
    })());

    report.record("low-SNR time-share limit", (|| {
        let p = params(-40.0, -2.0, -2.0)?;
        let gap = (ec_nomar_strong_timeshare(&p, &q)? - ec_numeric_k2(StrategyModel::NOMA, TwoUser::Strong, &p, &q)?).abs();
        Ok((gap <= 1e-3, format!("gap {gap:.2e}")))
    })());

    report.record("high-SNR asymptote", (|| {
        let mut ok = (highsnr_moment_factor(-2.0)? - 2.0 * std::f64::consts::LN_2).abs() <= 1e-6;
        let mut last = 0.0;
        for beta in [-1.0, -2.0, -3.0] {
            let mut prev = f64::INFINITY;
            for db in [40.0, 50.0, 60.0] {
                let p = params(db, beta, beta)?;
                let exact = ec_nomar_strong_timeshare(&p, &q)?;
                let gap = ((exact - ec_nomar_strong_highsnr(&p)?) / exact).abs();
                ok &= gap < prev;
                prev = gap;
            }
            ok &= prev <= 0.02;
            last = prev;
        }
        Ok((ok, format!("relative gap at 60 dB (beta = -3) {last:.2e}")))
    })());

    report.record("determinism across workers", (|| {
        let cfg = NetworkConfig::reference(3, 100.0)?;
        let m = [StrategyModel::NOMA_R_EVENT];
        let small = n.min(100_000);
        let a = MonteCarlo::new(small, seed)?.with_workers(1).point(&cfg, &m)?;
        let b = MonteCarlo::new(small, seed)?.with_workers(4).point(&cfg, &m)?;
        Ok((a == b, "1 vs 4 workers".into()))
    })());

    report
}
