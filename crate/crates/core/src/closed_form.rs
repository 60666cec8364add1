//! Two-user analytical evaluators.
//!
//! `tau_closed_form` gives the probability that NOMA-R picks NOMA. The NOMA-R
//! EC of the weak user has a closed form in `U(1, b, z)`; the strong user's
//! time-share EC, the plain OMA/NOMA ECs and the event-selection ECs are
//! expectations over the two-user order-statistic densities, evaluated by
//! (nested) adaptive quadrature. The joint density `2 e^{-x1} e^{-x2}` on
//! `x1 <= x2` is integrated in the coordinates `(x1, u = x2 - x1)`, where it
//! factorises as `2 e^{-2 x1} * e^{-u}` on a rectangle.

use crate::rate_model::NetworkConfig;
use crate::specfun::{gamma_fn, hyper_u_a1, integrate, integrate_semi_infinite, ln_erfc, QuadratureSpec};
use crate::{Error, Result};
use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::RwLock;

/// |beta| below this makes `(1/beta) log2 E[2^(beta r)]` a 0/0 form.
pub const DEGENERATE_BETA: f64 = 1e-6;

/// `exp(-2 * 40)` is below double precision relative to the bulk of any
/// expectation against `2 e^{-2x}`, so finite ranges are cut there.
const NEGLIGIBLE_RANGE: f64 = 40.0;

/// Multiple-access strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Oma,
    Noma,
    NomaR,
}

/// How NOMA-R turns the NOMA-selection probability into an EC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Exponent mixing `beta (tau R + (1 - tau) R_oma)` with the closed-form tau.
    TimeShare,
    /// Per-realization selection: NOMA rates when the realization passes the
    /// criterion, OMA rates otherwise.
    EventSelection,
}

/// A strategy, with the NOMA-R variant when the strategy is NOMA-R.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrategyModel {
    strategy: Strategy,
    variant: Option<Variant>,
}

impl StrategyModel {
    pub const OMA: Self = Self {
        strategy: Strategy::Oma,
        variant: None,
    };
    pub const NOMA: Self = Self {
        strategy: Strategy::Noma,
        variant: None,
    };
    pub const NOMA_R_EVENT: Self = Self {
        strategy: Strategy::NomaR,
        variant: Some(Variant::EventSelection),
    };
    pub const NOMA_R_TIMESHARE: Self = Self {
        strategy: Strategy::NomaR,
        variant: Some(Variant::TimeShare),
    };

    pub fn new(strategy: Strategy, variant: Option<Variant>) -> Result<Self> {
        match (strategy, variant) {
            (Strategy::NomaR, Some(_)) | (Strategy::Oma | Strategy::Noma, None) => Ok(Self { strategy, variant }),
            (Strategy::NomaR, None) => Err(Error::Config("NOMA-R needs a variant (event or timeshare)".into())),
            (s, Some(_)) => Err(Error::Config(format!("{} takes no NOMA-R variant", s.label()))),
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn variant(&self) -> Option<Variant> {
        self.variant
    }
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Oma => "OMA",
            Strategy::Noma => "NOMA",
            Strategy::NomaR => "NOMA-R",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OMA" => Ok(Strategy::Oma),
            "NOMA" => Ok(Strategy::Noma),
            "NOMA-R" | "NOMAR" | "NOMA_R" => Ok(Strategy::NomaR),
            _ => Err(Error::Config(format!("unknown strategy {s:?} (expected OMA, NOMA or NOMA-R)"))),
        }
    }
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::TimeShare => "timeshare",
            Variant::EventSelection => "event",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "timeshare" | "time_share" | "time-share" => Ok(Variant::TimeShare),
            "event" | "eventselection" | "event_selection" | "event-selection" => Ok(Variant::EventSelection),
            _ => Err(Error::Config(format!("unknown NOMA-R variant {s:?} (expected event or timeshare)"))),
        }
    }
}

impl fmt::Display for StrategyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            Some(v) => write!(f, "{}/{}", self.strategy.label(), v.label()),
            None => f.write_str(self.strategy.label()),
        }
    }
}

/// User of a two-user network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwoUser {
    /// User 1, smaller gain.
    Weak,
    /// User 2, larger gain.
    Strong,
}

impl TwoUser {
    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            0 => Ok(TwoUser::Weak),
            1 => Ok(TwoUser::Strong),
            _ => Err(Error::Domain(format!("two-user index must be 0 or 1, got {index}"))),
        }
    }
}

/// Parameters of the two-user formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoUserParams {
    pub p1: f64,
    pub p2: f64,
    pub rho: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl TwoUserParams {
    pub fn new(p1: f64, p2: f64, rho: f64, beta1: f64, beta2: f64) -> Result<Self> {
        for (name, v) in [("p1", p1), ("p2", p2), ("rho", rho)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("beta1", beta1), ("beta2", beta2)] {
            if !(v < 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be negative, got {v}")));
            }
        }
        Ok(Self { p1, p2, rho, beta1, beta2 })
    }

    pub fn from_config(cfg: &NetworkConfig) -> Result<Self> {
        if cfg.k() != 2 {
            return Err(Error::Unsupported(format!(
                "closed-form evaluators exist only for K = 2 (got K = {})",
                cfg.k()
            )));
        }
        Self::new(cfg.powers()[0], cfg.powers()[1], cfg.rho(), cfg.betas()[0], cfg.betas()[1])
    }

    pub fn beta(&self, user: TwoUser) -> f64 {
        match user {
            TwoUser::Weak => self.beta1,
            TwoUser::Strong => self.beta2,
        }
    }

    /// Weak-user gain above which the criterion threshold exceeds the gain itself.
    fn crossover(&self) -> f64 {
        (self.p2 + (self.p2 * self.p2 + 4.0 * self.p1 * self.p1).sqrt()) / (2.0 * self.rho * self.p1 * self.p1)
    }

    /// Strong-user gain needed for NOMA to benefit both users, given `x1`.
    fn strong_threshold(&self, x1: f64) -> f64 {
        let weak = self.rho * self.p1 * x1;
        (weak * weak - 1.0) / (self.rho * self.p2)
    }
}

/// `f(rho) = 1 - exp(-(P2 + sqrt(P2^2 + 4 P1^2)) / (rho P1^2))`: probability
/// that the weak gain stays below the crossover.
pub fn tau_f(p: &TwoUserParams) -> f64 {
    -(-2.0 * p.crossover()).exp_m1()
}

/// Natural log of the second term of tau. The exponential prefactor overflows
/// and `erfc` underflows at low SNR, so the product is only formed in logs.
pub fn tau_ln_g(p: &TwoUserParams) -> f64 {
    let (p1, p2, rho) = (p.p1, p.p2, p.rho);
    let disc = (p2 * p2 + 4.0 * p1 * p1).sqrt();
    let arg = (2.0 * p2 + disc) / (2.0 * (p2 * rho).sqrt() * p1);
    0.5 * PI.ln() + (4.0 * p1 * p1 + p2 * p2) / (4.0 * rho * p2 * p1 * p1) + ln_erfc(arg) + 0.5 * (p2 / rho).ln()
        - p1.ln()
}

/// `g(rho)`, the probability that the weak gain is above the crossover and the
/// strong gain still clears the criterion threshold.
pub fn tau_g(p: &TwoUserParams) -> f64 {
    tau_ln_g(p).exp()
}

/// Probability that NOMA-R selects NOMA in a two-user network, `f + g`.
pub fn tau_closed_form(p: &TwoUserParams) -> f64 {
    let tau = tau_f(p) + tau_g(p);
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&tau), "tau = {tau}");
    tau.clamp(0.0, 1.0)
}

/// Memo of `tau_closed_form` keyed by `(P1, P2, rho)`; safe to share across
/// threads, concurrent inserts of the same key store the same value.
#[derive(Debug, Default)]
pub struct TauCache {
    values: RwLock<HashMap<[u64; 3], f64>>,
}

impl TauCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, p: &TwoUserParams) -> f64 {
        let key = [p.p1.to_bits(), p.p2.to_bits(), p.rho.to_bits()];
        if let Some(v) = self.values.read().expect("tau cache poisoned").get(&key) {
            return *v;
        }
        let v = tau_closed_form(p);
        self.values.write().expect("tau cache poisoned").insert(key, v);
        v
    }

    pub fn len(&self) -> usize {
        self.values.read().expect("tau cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta < 0.0) {
        return Err(Error::Domain(format!("beta must be negative, got {beta}")));
    }
    if beta.abs() < DEGENERATE_BETA {
        return Err(Error::DegenerateExponent(beta));
    }
    Ok(())
}

/// `(1/beta) log2 M` for a moment `M = E[2^(beta r)]`.
fn ec_from_moment(beta: f64, moment: f64) -> Result<f64> {
    if !(moment > 0.0) {
        return Err(Error::Domain(format!("moment E[2^(beta r)] = {moment} is not positive")));
    }
    Ok(moment.log2() / beta + 0.0)
}

/// `(1 + y)^c`
#[inline]
fn pow1p(y: f64, c: f64) -> f64 {
    (c * y.ln_1p()).exp()
}

/// `E[h(x1)]` against the weak-user density `2 e^{-2 x1}`.
fn expect_weak<F: Fn(f64) -> f64>(h: F, q: &QuadratureSpec) -> Result<f64> {
    integrate_semi_infinite(|x| 2.0 * (-2.0 * x).exp() * h(x), q)
}

/// `E[h(x2)]` against the strong-user density `2 e^{-x2} (1 - e^{-x2})`.
fn expect_strong<F: Fn(f64) -> f64>(h: F, q: &QuadratureSpec) -> Result<f64> {
    integrate_semi_infinite(|x| -2.0 * (-x).exp() * (-x).exp_m1() * h(x), q)
}

/// `E[h(x1, x2)]` against the joint density. `inner(x1, q)` must return
/// `int_0^inf e^{-u} h(x1, x1 + u) du`; the outer range is split at `split`.
fn expect_joint<I>(mut inner: I, split: Option<f64>, q: &QuadratureSpec) -> Result<f64>
where
    I: FnMut(f64, &QuadratureSpec) -> Result<f64>,
{
    let inner_q = q.tightened(0.1);
    let mut failure: Option<Error> = None;
    let mut outer = |x1: f64| -> f64 {
        match inner(x1, &inner_q) {
            Ok(v) => 2.0 * (-2.0 * x1).exp() * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let total = match split {
        Some(s) if s > 0.0 => {
            let head = integrate(&mut outer, 0.0, s.min(NEGLIGIBLE_RANGE), q)?;
            // shift so the tail integrand is O(1) near its left end
            let scale = (-2.0 * s).exp();
            let tail = if scale > 0.0 {
                integrate_semi_infinite(|v| outer(s + v), q)?
            } else {
                0.0
            };
            head + tail
        }
        _ => integrate_semi_infinite(&mut outer, q)?,
    };
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// NOMA-R EC of the weak user,
/// `(1/beta1) log2( z U(1, 2 + beta1 (tau + 1) / 2, z) )` with `z = 2 / (rho P1)`.
pub fn ec_nomar_weak_closed(p: &TwoUserParams, q: &QuadratureSpec) -> Result<f64> {
    ec_nomar_weak_closed_with_tau(p, tau_closed_form(p), q)
}

/// [`ec_nomar_weak_closed`] with a precomputed tau.
pub fn ec_nomar_weak_closed_with_tau(p: &TwoUserParams, tau: f64, q: &QuadratureSpec) -> Result<f64> {
    check_beta(p.beta1)?;
    let z = 2.0 / (p.rho * p.p1);
    let b = 2.0 + p.beta1 * (tau + 1.0) / 2.0;
    let moment = z * hyper_u_a1(b, z, q)?;
    ec_from_moment(p.beta1, moment)
}

/// NOMA-R time-share EC of the strong user: the expectation of
/// `(1 + y2/(1 + y1))^(beta2 tau) (1 + y2)^(beta2 (1 - tau) / 2)` over the
/// joint density, by nested quadrature.
pub fn ec_nomar_strong_timeshare(p: &TwoUserParams, q: &QuadratureSpec) -> Result<f64> {
    ec_nomar_strong_timeshare_with_tau(p, tau_closed_form(p), q)
}

/// [`ec_nomar_strong_timeshare`] with a precomputed tau.
pub fn ec_nomar_strong_timeshare_with_tau(p: &TwoUserParams, tau: f64, q: &QuadratureSpec) -> Result<f64> {
    check_beta(p.beta2)?;
    let (a1, a2) = (p.rho * p.p1, p.rho * p.p2);
    let c_noma = p.beta2 * tau;
    let c_oma = p.beta2 * (1.0 - tau) / 2.0;
    let moment = expect_joint(
        |x1, iq| {
            let y1 = a1 * x1;
            integrate_semi_infinite(
                |u| {
                    let y2 = a2 * (x1 + u);
                    (-u + c_noma * (y2 / (1.0 + y1)).ln_1p() + c_oma * y2.ln_1p()).exp()
                },
                iq,
            )
        },
        None,
        q,
    )?;
    ec_from_moment(p.beta2, moment)
}

/// `m(beta) = Gamma(beta/2 + 1) (2 - 2^(-beta/2)) = E[x2^(beta/2)]`, the Mellin
/// moment of the strong-user gain. Defined for `-4 < beta < 0`; the printed
/// product is 0 * inf at `beta = -2`, handled through
/// `m = 2 Gamma(beta/2 + 2) (1 - 2^(-eps)) / eps` with `eps = beta/2 + 1`.
pub fn highsnr_moment_factor(beta: f64) -> Result<f64> {
    if !(beta < 0.0) {
        return Err(Error::Domain(format!("beta must be negative, got {beta}")));
    }
    if beta <= -4.0 {
        return Err(Error::DivergentMoment(beta));
    }
    let eps = beta / 2.0 + 1.0;
    let ratio = if (beta + 2.0).abs() < 1e-3 {
        // (1 - e^{-eps L}) / eps = L (1 - eps L/2 + (eps L)^2/6 - (eps L)^3/24 + (eps L)^4/120)
        let t = eps * LN_2;
        LN_2 * (1.0 - t / 2.0 * (1.0 - t / 3.0 * (1.0 - t / 4.0 * (1.0 - t / 5.0))))
    } else {
        -(-eps * LN_2).exp_m1() / eps
    };
    Ok(2.0 * gamma_fn(eps + 1.0)? * ratio)
}

/// High-SNR asymptote of the strong user's NOMA-R EC,
/// `(1/beta2) log2( m(beta2) (rho P2)^(beta2/2) )`.
pub fn ec_nomar_strong_highsnr(p: &TwoUserParams) -> Result<f64> {
    let beta = p.beta2;
    let m = highsnr_moment_factor(beta)?;
    Ok((m.log2() + beta / 2.0 * (p.rho * p.p2).log2()) / beta)
}

/// EC of plain OMA or NOMA in a two-user network, `(1/beta) log2 E[2^(beta r)]`
/// with the expectation taken by quadrature over the order-statistic densities.
pub fn ec_numeric_k2(model: StrategyModel, user: TwoUser, p: &TwoUserParams, q: &QuadratureSpec) -> Result<f64> {
    let beta = p.beta(user);
    check_beta(beta)?;
    let (a1, a2) = (p.rho * p.p1, p.rho * p.p2);
    let moment = match (model.strategy(), user) {
        (Strategy::Oma, TwoUser::Weak) => expect_weak(|x| pow1p(a1 * x, beta / 2.0), q)?,
        (Strategy::Oma, TwoUser::Strong) => expect_strong(|x| pow1p(a2 * x, beta / 2.0), q)?,
        (Strategy::Noma, TwoUser::Weak) => expect_weak(|x| pow1p(a1 * x, beta), q)?,
        (Strategy::Noma, TwoUser::Strong) => expect_joint(
            |x1, iq| {
                let y1 = a1 * x1;
                integrate_semi_infinite(|u| (-u + beta * (a2 * (x1 + u) / (1.0 + y1)).ln_1p()).exp(), iq)
            },
            None,
            q,
        )?,
        (Strategy::NomaR, _) => {
            return Err(Error::Unsupported(
                "ec_numeric_k2 covers OMA and NOMA; use ec_k2 for NOMA-R".into(),
            ))
        }
    };
    ec_from_moment(beta, moment)
}

/// Event-selection NOMA-R EC in a two-user network. Given `x1`, the strong
/// gain exceeds `t(x1) = max(x1, threshold(x1))` with probability
/// `exp(-(t - x1))`, which gives the weak user a single integral; the strong
/// user's inner integral is split at the threshold.
pub fn ec_nomar_event_k2(user: TwoUser, p: &TwoUserParams, q: &QuadratureSpec) -> Result<f64> {
    let beta = p.beta(user);
    check_beta(beta)?;
    let (a1, a2) = (p.rho * p.p1, p.rho * p.p2);
    let x_star = p.crossover();
    let moment = match user {
        TwoUser::Weak => {
            let noma = |x: f64| pow1p(a1 * x, beta);
            let head = integrate(|x| 2.0 * (-2.0 * x).exp() * noma(x), 0.0, x_star.min(NEGLIGIBLE_RANGE), q)?;
            let tail = if x_star < NEGLIGIBLE_RANGE {
                integrate_semi_infinite(
                    |v| {
                        let x = x_star + v;
                        let p_noma = (-(p.strong_threshold(x) - x).max(0.0)).exp();
                        let mix = p_noma * noma(x) + (1.0 - p_noma) * pow1p(a1 * x, beta / 2.0);
                        2.0 * (-2.0 * x).exp() * mix
                    },
                    q,
                )?
            } else {
                0.0
            };
            head + tail
        }
        TwoUser::Strong => expect_joint(
            |x1, iq| {
                let y1 = a1 * x1;
                let noma_log = |u: f64| beta * (a2 * (x1 + u) / (1.0 + y1)).ln_1p();
                let d = (p.strong_threshold(x1) - x1).max(0.0);
                if d == 0.0 {
                    return integrate_semi_infinite(|u| (noma_log(u) - u).exp(), iq);
                }
                let oma_part = integrate(
                    |u| (-u + beta / 2.0 * (a2 * (x1 + u)).ln_1p()).exp(),
                    0.0,
                    d.min(NEGLIGIBLE_RANGE),
                    iq,
                )?;
                let scale = (-d).exp();
                let noma_part = if scale > 0.0 {
                    scale * integrate_semi_infinite(|v| (noma_log(d + v) - v).exp(), iq)?
                } else {
                    0.0
                };
                Ok(oma_part + noma_part)
            },
            Some(x_star),
            q,
        )?,
    };
    ec_from_moment(beta, moment)
}

/// EC of any strategy model for one user of a two-user network.
pub fn ec_k2(model: StrategyModel, user: TwoUser, p: &TwoUserParams, q: &QuadratureSpec) -> Result<f64> {
    match (model.strategy(), model.variant(), user) {
        (Strategy::NomaR, Some(Variant::TimeShare), TwoUser::Weak) => ec_nomar_weak_closed(p, q),
        (Strategy::NomaR, Some(Variant::TimeShare), TwoUser::Strong) => ec_nomar_strong_timeshare(p, q),
        (Strategy::NomaR, Some(Variant::EventSelection), u) => ec_nomar_event_k2(u, p, q),
        _ => ec_numeric_k2(model, user, p, q),
    }
}

/// Ergodic (mean) rate, the `beta -> 0` limit of the EC, for OMA and NOMA.
pub fn ergodic_rate_k2(model: StrategyModel, user: TwoUser, p: &TwoUserParams, q: &QuadratureSpec) -> Result<f64> {
    let (a1, a2) = (p.rho * p.p1, p.rho * p.p2);
    let log2_1p = |y: f64| y.ln_1p() / LN_2;
    match (model.strategy(), user) {
        (Strategy::Oma, TwoUser::Weak) => expect_weak(|x| 0.5 * log2_1p(a1 * x), q),
        (Strategy::Oma, TwoUser::Strong) => expect_strong(|x| 0.5 * log2_1p(a2 * x), q),
        (Strategy::Noma, TwoUser::Weak) => expect_weak(|x| log2_1p(a1 * x), q),
        (Strategy::Noma, TwoUser::Strong) => expect_joint(
            |x1, iq| integrate_semi_infinite(|u| (-u).exp() * log2_1p(a2 * (x1 + u) / (1.0 + a1 * x1)), iq),
            None,
            q,
        ),
        (Strategy::NomaR, _) => Err(Error::Unsupported("ergodic rate is provided for OMA and NOMA only".into())),
    }
}
