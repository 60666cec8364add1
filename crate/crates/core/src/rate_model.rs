//! Per-realization achievable rates and NOMA-R cluster selection.
//!
//! Users are indexed `0..K` in ascending order of channel gain, so user 0 is
//! the weakest and user `K-1` the strongest. Inside a NOMA cluster the
//! receiver applies SIC from the strongest member down: member `k` sees
//! interference only from the weaker members of the same cluster.

use crate::channel::GainSample;
use crate::{Error, Result};
use std::cmp::Ordering;
use std::fmt;

/// Hard cap on K; the cluster search enumerates all set partitions.
pub const MAX_USERS: usize = 12;

/// Network parameters: transmit powers, transmit SNR and QoS exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    powers: Vec<f64>,
    rho: f64,
    betas: Vec<f64>,
}

impl NetworkConfig {
    /// `powers[k]` and `betas[k]` belong to the user with the `k`-th smallest gain.
    pub fn new(powers: Vec<f64>, rho: f64, betas: Vec<f64>) -> Result<Self> {
        let k = powers.len();
        if k == 0 {
            return Err(Error::Config("k_users must be at least 1".into()));
        }
        if k > MAX_USERS {
            return Err(Error::Config(format!(
                "k_users = {k} exceeds the supported maximum of {MAX_USERS} (exhaustive cluster search)"
            )));
        }
        if betas.len() != k {
            return Err(Error::Config(format!(
                "expected {k} betas (one per user), got {}",
                betas.len()
            )));
        }
        for (i, p) in powers.iter().enumerate() {
            if !(*p > 0.0) || !p.is_finite() {
                return Err(Error::Config(format!("power must be positive: user {} has power = {p}", i + 1)));
            }
        }
        for (i, b) in betas.iter().enumerate() {
            if !(*b < 0.0) || !b.is_finite() {
                return Err(Error::Config(format!("beta must be negative: user {} has beta = {b}", i + 1)));
            }
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Config(format!("rho must be positive, got {rho}")));
        }
        let total: f64 = powers.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            log::warn!("transmit powers sum to {total}, not 1");
        }
        Ok(Self { powers, rho, betas })
    }

    /// Configuration used for the K = 2, 3, 4 experiments: the strongest user
    /// carries 0.8 of the power and every `beta` is -2.
    pub fn reference(k: usize, rho: f64) -> Result<Self> {
        let powers = reference_powers(k)
            .ok_or_else(|| Error::Config(format!("no reference power vector for k_users = {k}")))?;
        Self::new(powers, rho, vec![-2.0; k])
    }

    pub fn k(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Config(format!("rho must be positive, got {rho}")));
        }
        Ok(Self { rho, ..self.clone() })
    }

    pub fn with_betas(&self, betas: Vec<f64>) -> Result<Self> {
        Self::new(self.powers.clone(), self.rho, betas)
    }

    /// Received SNRs `rho P_k x_k` of one realization.
    pub fn received_snr(&self, sample: &GainSample) -> Vec<f64> {
        let mut y = vec![0.0; self.k()];
        self.received_snr_into(sample.gains(), &mut y);
        y
    }

    #[inline]
    pub(crate) fn received_snr_into(&self, gains: &[f64], out: &mut [f64]) {
        for ((o, g), p) in out.iter_mut().zip(gains).zip(&self.powers) {
            *o = self.rho * p * g;
        }
    }
}

/// Reference power vectors for K = 2, 3, 4.
pub fn reference_powers(k: usize) -> Option<Vec<f64>> {
    match k {
        2 => Some(vec![0.2, 0.8]),
        3 => Some(vec![0.05, 0.15, 0.8]),
        4 => Some(vec![0.01, 0.04, 0.15, 0.8]),
        _ => None,
    }
}

/// Per-user rates in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(pub Vec<f64>);

impl RateVector {
    pub fn rates(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// NOMA clusters (two or more users each) and OMA singletons of one
/// realization. Together they partition the user set; indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterAssignment {
    pub clusters: Vec<Vec<usize>>,
    pub singletons: Vec<usize>,
}

impl ClusterAssignment {
    pub fn all_oma(k: usize) -> Self {
        Self {
            clusters: Vec::new(),
            singletons: (0..k).collect(),
        }
    }

    pub fn uses_noma(&self) -> bool {
        !self.clusters.is_empty()
    }

    pub fn noma_users(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    fn from_partition(p: &Partition, k: usize) -> Self {
        let mut out = Self::default();
        for &mask in p.blocks() {
            let members = members(mask);
            if members.len() >= 2 {
                out.clusters.push(members);
            } else {
                out.singletons.extend(members);
            }
        }
        out.clusters.sort();
        out.singletons.sort_unstable();
        debug_assert_eq!(out.noma_users() + out.singletons.len(), k);
        out
    }
}

impl fmt::Display for ClusterAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_based = |v: &[usize]| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
        let clusters: Vec<String> = self.clusters.iter().map(|c| format!("{{{}}}", one_based(c))).collect();
        write!(f, "noma=[{}] oma=[{}]", clusters.join(" "), one_based(&self.singletons))
    }
}

/// `(|S|/K) log2(1 + SINR_k)` for every member of `cluster`, in cluster order.
/// `cluster` must be listed in ascending gain order.
pub fn noma_rates(cluster: &[usize], sample: &GainSample, cfg: &NetworkConfig) -> Vec<f64> {
    debug_assert!(cluster.windows(2).all(|w| w[0] < w[1]), "cluster must be ascending");
    let y = cfg.received_snr(sample);
    let share = cluster.len() as f64 / cfg.k() as f64;
    let mut interference = 0.0;
    cluster
        .iter()
        .map(|&k| {
            let rate = share * (y[k] / (1.0 + interference)).ln_1p() / std::f64::consts::LN_2;
            interference += y[k];
            rate
        })
        .collect()
}

/// `(1/K) log2(1 + rho P_k x_k)`.
pub fn oma_rate(k: usize, sample: &GainSample, cfg: &NetworkConfig) -> f64 {
    let y = cfg.rho * cfg.powers[k] * sample.gains()[k];
    y.ln_1p() / std::f64::consts::LN_2 / cfg.k() as f64
}

/// True when every member of `cluster` gets at least its OMA rate under NOMA:
/// `1 + y_k / (1 + sum_{j<k} y_j) >= (1 + y_k)^(1/|S|)` for all members.
/// Equality counts as beneficial.
pub fn noma_beneficial(cluster: &[usize], sample: &GainSample, cfg: &NetworkConfig) -> bool {
    debug_assert!(cluster.len() >= 2);
    let y = cfg.received_snr(sample);
    let mask = cluster.iter().fold(0u16, |m, &i| m | (1 << i));
    cluster_feasible(mask, &y)
}

/// Two-user form of [`noma_beneficial`]: `x2 >= (rho^2 x1^2 P1^2 - 1) / (rho P2)`.
pub fn noma_beneficial_k2(sample: &GainSample, cfg: &NetworkConfig) -> bool {
    assert_eq!(cfg.k(), 2, "two-user criterion requires K = 2");
    let g = sample.gains();
    k2_threshold_holds(g[0], g[1], cfg)
}

#[inline]
pub(crate) fn k2_threshold_holds(x1: f64, x2: f64, cfg: &NetworkConfig) -> bool {
    let (rho, p1, p2) = (cfg.rho, cfg.powers[0], cfg.powers[1]);
    let weak = rho * x1 * p1;
    x2 >= (weak * weak - 1.0) / (rho * p2)
}

/// Partition of `{0..K}` maximizing the instantaneous sum rate, where every
/// block of two or more users must pass [`noma_beneficial`].
pub fn select_clusters(sample: &GainSample, cfg: &NetworkConfig) -> ClusterAssignment {
    let mut selector = ClusterSelector::new(cfg.k());
    let y = cfg.received_snr(sample);
    let p = if cfg.k() == 2 {
        k2_partition(k2_threshold_holds(sample.gains()[0], sample.gains()[1], cfg))
    } else {
        *selector.select(&y)
    };
    ClusterAssignment::from_partition(&p, cfg.k())
}

/// NOMA-R rates: SIC rates inside the selected clusters, OMA rates elsewhere.
pub fn noma_r_rates(sample: &GainSample, cfg: &NetworkConfig) -> RateVector {
    let assignment = select_clusters(sample, cfg);
    let mut rates = vec![0.0; cfg.k()];
    for c in &assignment.clusters {
        for (&k, r) in c.iter().zip(noma_rates(c, sample, cfg)) {
            rates[k] = r;
        }
    }
    for &k in &assignment.singletons {
        rates[k] = oma_rate(k, sample, cfg);
    }
    RateVector(rates)
}

/// OMA rates of every user.
pub fn oma_rates(sample: &GainSample, cfg: &NetworkConfig) -> RateVector {
    RateVector((0..cfg.k()).map(|k| oma_rate(k, sample, cfg)).collect())
}

/// NOMA rates with every user in one cluster.
pub fn full_noma_rates(sample: &GainSample, cfg: &NetworkConfig) -> RateVector {
    let all: Vec<usize> = (0..cfg.k()).collect();
    RateVector(noma_rates(&all, sample, cfg))
}

fn members(mask: u16) -> Vec<usize> {
    (0..16).filter(|i| mask & (1 << i) != 0).collect()
}

/// Benefit criterion on a bitmask of users, members taken in ascending order.
/// `(1 + sinr)^|S| >= 1 + y` is the same test with integer powers.
#[inline]
fn cluster_feasible(mask: u16, y: &[f64]) -> bool {
    let size = mask.count_ones() as i32;
    let mut interference = 0.0;
    let mut rest = mask;
    while rest != 0 {
        let k = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let sinr = y[k] / (1.0 + interference);
        if (1.0 + sinr).powi(size) < 1.0 + y[k] {
            return false;
        }
        interference += y[k];
    }
    true
}

/// Sum rate of a block: `(|S|/K) log2(1 + sum y)`; a singleton gets its OMA rate.
#[inline]
fn block_rate(mask: u16, y: &[f64], k: usize) -> f64 {
    let mut total = 0.0;
    let mut rest = mask;
    while rest != 0 {
        total += y[rest.trailing_zeros() as usize];
        rest &= rest - 1;
    }
    mask.count_ones() as f64 / k as f64 * total.ln_1p() / std::f64::consts::LN_2
}

/// Set partition as a list of disjoint bitmask blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Partition {
    blocks: [u16; MAX_USERS],
    len: usize,
}

impl Partition {
    const EMPTY: Self = Self {
        blocks: [0; MAX_USERS],
        len: 0,
    };

    pub(crate) fn blocks(&self) -> &[u16] {
        &self.blocks[..self.len]
    }

    pub(crate) fn uses_noma(&self) -> bool {
        self.blocks().iter().any(|b| b.count_ones() >= 2)
    }

    fn noma_users(&self) -> u32 {
        self.blocks().iter().filter(|b| b.count_ones() >= 2).map(|b| b.count_ones()).sum()
    }

    fn noma_clusters(&self) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = self.blocks().iter().filter(|b| b.count_ones() >= 2).map(|&b| members(b)).collect();
        v.sort();
        v
    }
}

pub(crate) fn k2_partition(noma: bool) -> Partition {
    let mut p = Partition::EMPTY;
    if noma {
        p.blocks[0] = 0b11;
        p.len = 1;
    } else {
        p.blocks[0] = 0b01;
        p.blocks[1] = 0b10;
        p.len = 2;
    }
    p
}

const TIE_RTOL: f64 = 1e-12;

/// Reusable exhaustive search over set partitions.
#[derive(Debug, Clone)]
pub(crate) struct ClusterSelector {
    k: usize,
    /// Sum rate of each block mask, NaN when the block fails the criterion.
    block_value: Vec<f64>,
    current: Partition,
    best: Partition,
    best_rate: f64,
    best_noma: u32,
}

impl ClusterSelector {
    pub(crate) fn new(k: usize) -> Self {
        assert!((1..=MAX_USERS).contains(&k));
        Self {
            k,
            block_value: vec![f64::NAN; 1 << k],
            current: Partition::EMPTY,
            best: Partition::EMPTY,
            best_rate: f64::NEG_INFINITY,
            best_noma: 0,
        }
    }

    /// Best partition for received SNRs `y`.
    pub(crate) fn select(&mut self, y: &[f64]) -> &Partition {
        debug_assert_eq!(y.len(), self.k);
        let k = self.k;
        self.search(|mask| {
            if mask.count_ones() >= 2 && !cluster_feasible(mask, y) {
                None
            } else {
                Some(block_rate(mask, y, k))
            }
        })
    }

    /// Search with an arbitrary block objective (`None` marks infeasible blocks).
    pub(crate) fn search<F: FnMut(u16) -> Option<f64>>(&mut self, mut value: F) -> &Partition {
        for mask in 1..(1u32 << self.k) {
            self.block_value[mask as usize] = value(mask as u16).unwrap_or(f64::NAN);
        }
        self.current = Partition::EMPTY;
        self.best = Partition::EMPTY;
        self.best_rate = f64::NEG_INFINITY;
        self.best_noma = 0;
        let all = ((1u32 << self.k) - 1) as u16;
        self.dfs(all, 0.0);
        &self.best
    }

    fn dfs(&mut self, remaining: u16, acc: f64) {
        if remaining == 0 {
            self.consider(acc);
            return;
        }
        let low = remaining & remaining.wrapping_neg();
        let others = remaining & !low;
        // every subset of `others`, joined with the lowest remaining user
        let mut sub = others;
        loop {
            let block = sub | low;
            let v = self.block_value[block as usize];
            if !v.is_nan() {
                self.current.blocks[self.current.len] = block;
                self.current.len += 1;
                self.dfs(remaining & !block, acc + v);
                self.current.len -= 1;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
    }

    fn consider(&mut self, rate: f64) {
        let noma = self.current.noma_users();
        let ordering = if (rate - self.best_rate).abs() <= TIE_RTOL * rate.abs().max(self.best_rate.abs()) {
            noma.cmp(&self.best_noma)
                .then_with(|| self.best.noma_clusters().cmp(&self.current.noma_clusters()))
        } else {
            rate.total_cmp(&self.best_rate)
        };
        if self.best.len == 0 || ordering == Ordering::Greater {
            self.best = self.current;
            self.best_rate = rate;
            self.best_noma = noma;
        }
    }
}
