//! Monte-Carlo estimators of tau and of the effective capacity.
//!
//! The sample index range `[0, n)` is cut into blocks of [`BLOCK_SIZE`]
//! samples. Block `b` draws from `seed.stream(b)` and keeps its own running
//! moments; block results are merged in ascending block order, so an estimate
//! depends on `(cfg, n, seed)` only and not on the worker count.
//!
//! One pass evaluates every requested strategy model on the same gain
//! realizations (common random numbers).

use crate::channel::{fill_ordered_gains, RngSeed};
use crate::closed_form::{tau_closed_form, Strategy, StrategyModel, TwoUserParams, Variant, DEGENERATE_BETA};
use crate::rate_model::{k2_partition, k2_threshold_holds, ClusterSelector, NetworkConfig, Partition, MAX_USERS};
use crate::{Error, Result};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::LN_2;
use std::sync::Arc;

/// Samples per block (and per RNG stream).
pub const BLOCK_SIZE: u64 = 1 << 14;

/// Monte-Carlo EC estimate for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcEstimate {
    /// EC in bits/s/Hz.
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub std_err: f64,
    pub n: u64,
    /// Sample mean of `2^(beta r)`.
    pub raw_mean: f64,
    /// Standard error of `raw_mean`.
    pub raw_se: f64,
}

impl EcEstimate {
    /// Builds the EC estimate from the moments of `2^(beta r)`.
    pub fn from_moments(beta: f64, raw_mean: f64, raw_se: f64, n: u64) -> Result<Self> {
        check_beta(beta)?;
        if !(raw_mean > 0.0) {
            return Err(Error::Domain(format!(
                "mean of 2^(beta r) is {raw_mean}; every sample underflowed"
            )));
        }
        Ok(Self {
            // + 0.0 turns log2(1)/beta = -0.0 into 0.0
            value: raw_mean.log2() / beta + 0.0,
            std_err: raw_se / (beta.abs() * LN_2 * raw_mean),
            n,
            raw_mean,
            raw_se,
        })
    }
}

/// Monte-Carlo estimate of a selection probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauEstimate {
    pub value: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub std_err: f64,
    pub n: u64,
}

impl TauEstimate {
    fn from_count(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            value: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }
}

/// Per-user estimates and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SumEcEstimate {
    pub users: Vec<EcEstimate>,
    pub sum: f64,
    /// `sqrt(sum SE_k^2)`.
    pub sum_std_err: f64,
}

impl SumEcEstimate {
    fn new(users: Vec<EcEstimate>) -> Self {
        let sum = users.iter().map(|e| e.value).sum();
        let sum_std_err = users.iter().map(|e| e.std_err * e.std_err).sum::<f64>().sqrt();
        Self { users, sum, sum_std_err }
    }
}

/// Everything one pass produces at a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    /// Fraction of samples where cluster selection used NOMA at all.
    pub noma_frequency: TauEstimate,
    /// Fraction of samples where all users formed a single cluster.
    pub grand_cluster_frequency: TauEstimate,
    /// One entry per requested model, in request order.
    pub models: Vec<(StrategyModel, SumEcEstimate)>,
}

impl PointEstimate {
    pub fn get(&self, model: StrategyModel) -> Option<&SumEcEstimate> {
        self.models.iter().find(|(m, _)| *m == model).map(|(_, e)| e)
    }
}

/// `sqrt(a^2 + b^2)`, the standard error of a difference of two estimates
/// treated as independent.
pub fn combined_se(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Source of ordered gain realizations.
pub trait GainSampler: Send + Sync {
    /// Fills `out` with one ascending realization.
    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);
}

/// I.i.d. Rayleigh fading: ordered unit-mean exponential power gains.
#[derive(Debug, Clone, Copy, Default)]
pub struct OrderedRayleigh;

impl GainSampler for OrderedRayleigh {
    #[inline]
    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        fill_ordered_gains(rng, out);
    }
}

/// All gains zero; every rate is then zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroGains;

impl GainSampler for ZeroGains {
    fn fill(&self, _rng: &mut ChaCha8Rng, out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Monte-Carlo run settings.
#[derive(Clone)]
pub struct MonteCarlo {
    n: u64,
    seed: RngSeed,
    workers: usize,
    sampler: Arc<dyn GainSampler>,
}

impl std::fmt::Debug for MonteCarlo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MonteCarlo")
            .field("n", &self.n)
            .field("seed", &self.seed)
            .field("workers", &self.workers)
            .finish_non_exhaustive()
    }
}

impl MonteCarlo {
    pub fn new(n: u64, seed: RngSeed) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        Ok(Self {
            n,
            seed,
            workers: 0,
            sampler: Arc::new(OrderedRayleigh),
        })
    }

    /// Runs on a dedicated pool of `workers` threads; 0 uses the ambient rayon pool.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_sampler(mut self, sampler: Arc<dyn GainSampler>) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn seed(&self) -> RngSeed {
        self.seed
    }

    pub fn tau(&self, cfg: &NetworkConfig) -> Result<TauEstimate> {
        Ok(self.point(cfg, &[])?.noma_frequency)
    }

    pub fn ec(&self, model: StrategyModel, user: usize, cfg: &NetworkConfig) -> Result<EcEstimate> {
        if user >= cfg.k() {
            return Err(Error::Domain(format!("user index {user} out of range for K = {}", cfg.k())));
        }
        check_beta(cfg.betas()[user])?;
        let stats = self.run(cfg, &[model])?;
        stats.ec(0, user, cfg.betas()[user])
    }

    pub fn sum_ec(&self, model: StrategyModel, cfg: &NetworkConfig) -> Result<SumEcEstimate> {
        let mut p = self.point(cfg, &[model])?;
        Ok(p.models.remove(0).1)
    }

    /// Single pass over the samples evaluating every model in `models`.
    pub fn point(&self, cfg: &NetworkConfig, models: &[StrategyModel]) -> Result<PointEstimate> {
        for &b in cfg.betas() {
            check_beta(b)?;
        }
        let stats = self.run(cfg, models)?;
        let mut out = Vec::with_capacity(models.len());
        for (m, &model) in models.iter().enumerate() {
            let users = (0..cfg.k())
                .map(|k| stats.ec(m, k, cfg.betas()[k]))
                .collect::<Result<Vec<_>>>()?;
            out.push((model, SumEcEstimate::new(users)));
        }
        Ok(PointEstimate {
            noma_frequency: TauEstimate::from_count(stats.noma_hits, stats.n),
            grand_cluster_frequency: TauEstimate::from_count(stats.grand_hits, stats.n),
            models: out,
        })
    }

    fn run(&self, cfg: &NetworkConfig, models: &[StrategyModel]) -> Result<BlockStats> {
        let kernel = Kernel::new(cfg, models)?;
        let blocks = self.n.div_ceil(BLOCK_SIZE);
        let compute = || -> Vec<BlockStats> {
            (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let len = BLOCK_SIZE.min(self.n - b * BLOCK_SIZE);
                    kernel.block(&*self.sampler, self.seed.stream(b), len)
                })
                .collect()
        };
        let parts = if self.workers == 0 {
            compute()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", self.workers)))?;
            pool.install(compute)
        };
        let mut iter = parts.into_iter();
        let mut total = iter.next().expect("n >= 1 gives at least one block");
        for p in iter {
            total.merge(&p);
        }
        Ok(total)
    }
}

/// Probability that cluster selection uses NOMA, estimated from `n` samples.
pub fn estimate_tau(cfg: &NetworkConfig, n: u64, seed: RngSeed) -> Result<TauEstimate> {
    MonteCarlo::new(n, seed)?.tau(cfg)
}

/// EC of `user` (0-based) under `model`.
pub fn estimate_ec(model: StrategyModel, user: usize, cfg: &NetworkConfig, n: u64, seed: RngSeed) -> Result<EcEstimate> {
    MonteCarlo::new(n, seed)?.ec(model, user, cfg)
}

/// EC of every user under `model` from one sample stream, plus the sum.
pub fn estimate_sum_ec(model: StrategyModel, cfg: &NetworkConfig, n: u64, seed: RngSeed) -> Result<SumEcEstimate> {
    MonteCarlo::new(n, seed)?.sum_ec(model, cfg)
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

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let w = o.n as f64 / n as f64;
        self.mean += d * w;
        self.m2 += o.m2 + d * d * self.n as f64 * w;
        self.n = n;
    }

    fn std_err(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
struct BlockStats {
    n: u64,
    noma_hits: u64,
    grand_hits: u64,
    /// `[model][user]`, flattened with stride K.
    weights: Vec<Moments>,
    k: usize,
}

impl BlockStats {
    fn merge(&mut self, o: &BlockStats) {
        self.n += o.n;
        self.noma_hits += o.noma_hits;
        self.grand_hits += o.grand_hits;
        for (a, b) in self.weights.iter_mut().zip(&o.weights) {
            a.merge(b);
        }
    }

    fn ec(&self, model: usize, user: usize, beta: f64) -> Result<EcEstimate> {
        let m = &self.weights[model * self.k + user];
        EcEstimate::from_moments(beta, m.mean, m.std_err(), m.n)
    }
}

#[derive(Debug, Clone, Copy)]
enum RateKind {
    Oma,
    Noma,
    Selected,
    TimeShare(f64),
}

/// Per-sample work shared by all blocks.
struct Kernel<'a> {
    cfg: &'a NetworkConfig,
    kinds: Vec<RateKind>,
}

impl<'a> Kernel<'a> {
    fn new(cfg: &'a NetworkConfig, models: &[StrategyModel]) -> Result<Self> {
        let mut kinds = Vec::with_capacity(models.len());
        for m in models {
            kinds.push(match (m.strategy(), m.variant()) {
                (Strategy::Oma, _) => RateKind::Oma,
                (Strategy::Noma, _) => RateKind::Noma,
                (Strategy::NomaR, Some(Variant::TimeShare)) => {
                    if cfg.k() != 2 {
                        return Err(Error::Unsupported(format!(
                            "NOMA-R time-share needs the two-user tau; K = {}",
                            cfg.k()
                        )));
                    }
                    RateKind::TimeShare(tau_closed_form(&TwoUserParams::from_config(cfg)?))
                }
                (Strategy::NomaR, _) => RateKind::Selected,
            });
        }
        Ok(Self {
            cfg,
            kinds,
        })
    }

    fn block(&self, sampler: &dyn GainSampler, mut rng: ChaCha8Rng, len: u64) -> BlockStats {
        let k = self.cfg.k();
        let betas = self.cfg.betas();
        let mut stats = BlockStats {
            n: len,
            noma_hits: 0,
            grand_hits: 0,
            weights: vec![Moments::default(); self.kinds.len() * k],
            k,
        };
        let mut selector = if k != 2 { Some(ClusterSelector::new(k)) } else { None };
        let mut gains = [0.0; MAX_USERS];
        let mut y = [0.0; MAX_USERS];
        let mut oma = [0.0; MAX_USERS];
        let mut noma = [0.0; MAX_USERS];
        let mut selected = [0.0; MAX_USERS];
        let share = 1.0 / k as f64;
        for _ in 0..len {
            sampler.fill(&mut rng, &mut gains[..k]);
            self.cfg.received_snr_into(&gains[..k], &mut y[..k]);
            let mut interference = 0.0;
            for i in 0..k {
                oma[i] = share * y[i].ln_1p() / LN_2;
                noma[i] = (y[i] / (1.0 + interference)).ln_1p() / LN_2;
                interference += y[i];
            }
            let partition: Partition = match &mut selector {
                Some(s) => *s.select(&y[..k]),
                None => k2_partition(k2_threshold_holds(gains[0], gains[1], self.cfg)),
            };
            if partition.uses_noma() {
                stats.noma_hits += 1;
            }
            if k >= 2 && partition.blocks().len() == 1 {
                stats.grand_hits += 1;
            }
            partition_rates(&partition, &y[..k], &mut selected[..k]);
            for (m, kind) in self.kinds.iter().enumerate() {
                let acc = &mut stats.weights[m * k..(m + 1) * k];
                for i in 0..k {
                    let r = match *kind {
                        RateKind::Oma => oma[i],
                        RateKind::Noma => noma[i],
                        RateKind::Selected => selected[i],
                        RateKind::TimeShare(tau) => tau * noma[i] + (1.0 - tau) * oma[i],
                    };
                    acc[i].push((betas[i] * r).exp2());
                }
            }
        }
        stats
    }
}

/// Rates under a partition: SIC inside blocks of two or more users with
/// bandwidth share `|S|/K`, OMA rate `(1/K) log2(1 + y)` for singletons.
fn partition_rates(p: &Partition, y: &[f64], out: &mut [f64]) {
    let k = y.len() as f64;
    for &block in p.blocks() {
        let share = block.count_ones() as f64 / k;
        let mut interference = 0.0;
        let mut rest = block;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            out[i] = share * (y[i] / (1.0 + interference)).ln_1p() / LN_2;
            interference += y[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_ordered_gains;
    use crate::rate_model::{noma_r_rates, select_clusters};
    use crate::GainSample;

    fn cfg2(rho: f64) -> NetworkConfig {
        NetworkConfig::new(vec![0.2, 0.8], rho, vec![-2.0, -2.0]).unwrap()
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sqrt()).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..300].iter().for_each(|&x| a.push(x));
        xs[300..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - whole.mean).abs() < 1e-12 && (a.m2 - whole.m2).abs() < 1e-9 * whole.m2);
    }

    #[test]
    fn partition_rates_match_rate_model() {
        let cfg = NetworkConfig::new(vec![0.05, 0.15, 0.8], 10.0, vec![-2.0; 3]).unwrap();
        let mut rng = RngSeed(5).stream(0);
        let mut sel = ClusterSelector::new(3);
        for _ in 0..2000 {
            let s = sample_ordered_gains(3, &mut rng);
            let y = cfg.received_snr(&s);
            let mut out = [0.0; 3];
            partition_rates(sel.select(&y), &y, &mut out);
            let reference = noma_r_rates(&s, &cfg);
            for (a, b) in out.iter().zip(reference.rates()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let cfg = NetworkConfig::new(vec![0.05, 0.15, 0.8], 30.0, vec![-2.0; 3]).unwrap();
        let models = [StrategyModel::OMA, StrategyModel::NOMA, StrategyModel::NOMA_R_EVENT];
        let n = 3 * BLOCK_SIZE + 123;
        let a = MonteCarlo::new(n, RngSeed(9)).unwrap().with_workers(1).point(&cfg, &models).unwrap();
        let b = MonteCarlo::new(n, RngSeed(9)).unwrap().with_workers(4).point(&cfg, &models).unwrap();
        let c = MonteCarlo::new(n, RngSeed(9)).unwrap().point(&cfg, &models).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = MonteCarlo::new(n, RngSeed(10)).unwrap().point(&cfg, &models).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn single_model_runs_match_joint_pass() {
        let cfg = cfg2(10.0);
        let joint = MonteCarlo::new(50_000, RngSeed(3))
            .unwrap()
            .point(&cfg, &[StrategyModel::OMA, StrategyModel::NOMA_R_EVENT])
            .unwrap();
        let alone = estimate_ec(StrategyModel::NOMA_R_EVENT, 1, &cfg, 50_000, RngSeed(3)).unwrap();
        assert_eq!(joint.get(StrategyModel::NOMA_R_EVENT).unwrap().users[1], alone);
        let tau = estimate_tau(&cfg, 50_000, RngSeed(3)).unwrap();
        assert_eq!(tau, joint.noma_frequency);
    }

    #[test]
    fn zero_gains_give_zero_ec() {
        let cfg = NetworkConfig::new(vec![0.05, 0.15, 0.8], 100.0, vec![-2.0; 3]).unwrap();
        let mc = MonteCarlo::new(1000, RngSeed(1)).unwrap().with_sampler(Arc::new(ZeroGains));
        for model in [StrategyModel::OMA, StrategyModel::NOMA, StrategyModel::NOMA_R_EVENT] {
            let s = mc.sum_ec(model, &cfg).unwrap();
            for e in &s.users {
                assert_eq!(e.value.to_bits(), 0f64.to_bits());
                assert_eq!(e.std_err, 0.0);
            }
        }
        let ts = MonteCarlo::new(1000, RngSeed(1))
            .unwrap()
            .with_sampler(Arc::new(ZeroGains))
            .ec(StrategyModel::NOMA_R_TIMESHARE, 0, &cfg2(10.0))
            .unwrap();
        assert_eq!(ts.value, 0.0);
    }

    #[test]
    fn timeshare_needs_two_users() {
        let cfg = NetworkConfig::new(vec![0.05, 0.15, 0.8], 10.0, vec![-2.0; 3]).unwrap();
        assert!(matches!(
            estimate_ec(StrategyModel::NOMA_R_TIMESHARE, 0, &cfg, 10, RngSeed(0)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn rejects_bad_requests() {
        let cfg = cfg2(10.0);
        assert!(estimate_tau(&cfg, 0, RngSeed(0)).is_err());
        assert!(estimate_ec(StrategyModel::OMA, 2, &cfg, 10, RngSeed(0)).is_err());
        let tiny = cfg.with_betas(vec![-1e-7, -2.0]).unwrap();
        assert!(matches!(
            estimate_ec(StrategyModel::OMA, 0, &tiny, 10, RngSeed(0)),
            Err(Error::DegenerateExponent(_))
        ));
        assert!(estimate_ec(StrategyModel::OMA, 1, &tiny, 10, RngSeed(0)).is_ok());
    }

    #[test]
    fn tau_limits() {
        let low = estimate_tau(&cfg2(1e-6), 200_000, RngSeed(1)).unwrap();
        assert_eq!(low.value, 1.0);
        let high = estimate_tau(&cfg2(1e8), 200_000, RngSeed(1)).unwrap();
        assert!(high.value <= 1e-3);
    }

    #[test]
    fn tau_frequency_matches_selection_count() {
        let cfg = NetworkConfig::new(vec![0.05, 0.15, 0.8], 30.0, vec![-2.0; 3]).unwrap();
        let n = BLOCK_SIZE + 10;
        let est = estimate_tau(&cfg, n, RngSeed(4)).unwrap();
        let mut hits = 0;
        for b in 0..2 {
            let mut rng = RngSeed(4).stream(b);
            let len = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
            for _ in 0..len {
                let mut g = [0.0; 3];
                fill_ordered_gains(&mut rng, &mut g);
                if select_clusters(&GainSample::new(g.to_vec()).unwrap(), &cfg).uses_noma() {
                    hits += 1;
                }
            }
        }
        assert_eq!(est.value, hits as f64 / n as f64);
    }

    #[test]
    fn std_err_shrinks_like_root_n() {
        let cfg = cfg2(10.0);
        let a = estimate_ec(StrategyModel::NOMA, 1, &cfg, 200_000, RngSeed(2)).unwrap();
        let b = estimate_ec(StrategyModel::NOMA, 1, &cfg, 400_000, RngSeed(2)).unwrap();
        let ratio = a.std_err / b.std_err;
        assert!((1.3..=1.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn sum_is_sum_of_users() {
        let cfg = NetworkConfig::new(vec![0.05, 0.15, 0.8], 10.0, vec![-2.0; 3]).unwrap();
        let s = estimate_sum_ec(StrategyModel::NOMA_R_EVENT, &cfg, 20_000, RngSeed(8)).unwrap();
        let total: f64 = s.users.iter().map(|e| e.value).sum();
        assert_eq!(s.sum, total);
        assert!(s.sum > 0.0 && s.sum_std_err > 0.0);
    }
}
