//! JSON configuration files.

use crate::channel::RngSeed;
use crate::closed_form::{Strategy, StrategyModel, Variant};
use crate::rate_model::{reference_powers, NetworkConfig, MAX_USERS};
use crate::{db_to_linear, Error, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

/// Samples per Monte-Carlo point when the configuration does not say.
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

/// Raw configuration document. Unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub k_users: usize,
    #[serde(default)]
    pub powers: Option<Vec<f64>>,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub snr_grid_db: Option<Vec<f64>>,
    pub betas: Vec<f64>,
    pub strategies: Vec<String>,
    /// `event`, `timeshare` or `both`; default `event`.
    #[serde(default)]
    pub nomar_variant: Option<String>,
    #[serde(default)]
    pub n_samples: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// `snr_db` (default), `beta1` or `k_users`.
    #[serde(default)]
    pub axis: Option<String>,
    /// Axis values; for `snr_db` this may be given as `snr_grid_db` instead.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    /// `cf`, `mc` or `both`; default `both`.
    #[serde(default)]
    pub estimator: Option<String>,
    /// Powers per user count for the `k_users` axis, keyed by K.
    #[serde(default)]
    pub powers_by_k: Option<BTreeMap<String, Vec<f64>>>,
    /// Betas per user count for the `k_users` axis, keyed by K.
    #[serde(default)]
    pub betas_by_k: Option<BTreeMap<String, Vec<f64>>>,
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SnrDb,
    /// QoS exponent of every user but the strongest; the strongest keeps its own.
    Beta1,
    KUsers,
}

impl Axis {
    pub fn label(&self) -> &'static str {
        match self {
            Axis::SnrDb => "snr_db",
            Axis::Beta1 => "beta1",
            Axis::KUsers => "k_users",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "snr_db" => Ok(Axis::SnrDb),
            "beta1" => Ok(Axis::Beta1),
            "k_users" => Ok(Axis::KUsers),
            _ => Err(Error::Config(format!("unknown axis {s:?} (expected snr_db, beta1 or k_users)"))),
        }
    }
}

/// Which evaluators a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    ClosedForm,
    MonteCarlo,
    Both,
}

impl EstimatorChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cf" | "closed_form" => Ok(Self::ClosedForm),
            "mc" | "monte_carlo" => Ok(Self::MonteCarlo),
            "both" => Ok(Self::Both),
            _ => Err(Error::Config(format!("unknown estimator {s:?} (expected cf, mc or both)"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::ClosedForm => "cf",
            Self::MonteCarlo => "mc",
            Self::Both => "both",
        }
    }

    pub fn closed_form(&self) -> bool {
        matches!(self, Self::ClosedForm | Self::Both)
    }

    pub fn monte_carlo(&self) -> bool {
        matches!(self, Self::MonteCarlo | Self::Both)
    }
}

/// A validated sweep.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
    /// Network at the first grid point; other points are derived from it.
    pub base: NetworkConfig,
    pub strategies: Vec<StrategyModel>,
    pub estimator: EstimatorChoice,
    pub n: u64,
    pub seed: RngSeed,
    /// Size of the worker pool; 0 uses all cores.
    pub workers: usize,
    pub out_path: Option<PathBuf>,
    pub powers_by_k: BTreeMap<usize, Vec<f64>>,
    pub betas_by_k: BTreeMap<usize, Vec<f64>>,
}

impl SweepSpec {
    /// Checks the invariants that the constructor cannot see after field edits.
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("strategies must not be empty".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("grid must not be empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("grid values must be finite".into()));
        }
        let up = self.grid.windows(2).all(|w| w[0] < w[1]);
        let down = self.grid.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(Error::Config(format!("grid must be strictly monotone: {:?}", self.grid)));
        }
        if self.n == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        for v in &self.grid {
            self.network_at(*v)?;
        }
        Ok(())
    }

    /// Network configuration at axis value `v`.
    pub fn network_at(&self, v: f64) -> Result<NetworkConfig> {
        match self.axis {
            Axis::SnrDb => self.base.with_rho(db_to_linear(v)),
            Axis::Beta1 => {
                let k = self.base.k();
                let mut betas = self.base.betas().to_vec();
                betas[..k - 1].fill(v);
                if k == 1 {
                    betas[0] = v;
                }
                self.base.with_betas(betas)
            }
            Axis::KUsers => {
                if v.fract() != 0.0 || v < 1.0 || v > MAX_USERS as f64 {
                    return Err(Error::Config(format!("k_users grid value {v} is not an integer in 1..={MAX_USERS}")));
                }
                let k = v as usize;
                let powers = match self.powers_by_k.get(&k) {
                    Some(p) => p.clone(),
                    None if k == self.base.k() => self.base.powers().to_vec(),
                    None => reference_powers(k).ok_or_else(|| {
                        Error::Config(format!("no powers for k_users = {k}; add them under powers_by_k"))
                    })?,
                };
                let betas = match self.betas_by_k.get(&k) {
                    Some(b) => b.clone(),
                    None if k == self.base.k() => self.base.betas().to_vec(),
                    None => vec![self.base.betas()[0]; k],
                };
                NetworkConfig::new(powers, self.base.rho(), betas)
            }
        }
    }

    /// `(dB, linear)` columns for axis value `v`; only the SNR axis has a dB form.
    pub fn axis_columns(&self, v: f64) -> (f64, f64) {
        match self.axis {
            Axis::SnrDb => (v, db_to_linear(v)),
            Axis::Beta1 | Axis::KUsers => (f64::NAN, v),
        }
    }
}

impl fmt::Display for SweepSpec {
    /// Deterministic one-line description, used as a CSV comment.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let models: Vec<String> = self.strategies.iter().map(|m| m.to_string()).collect();
        write!(
            f,
            "axis={} k_users={} powers={:?} betas={:?} rho={:?} strategies={} estimator={} n_samples={} seed={}",
            self.axis.label(),
            self.base.k(),
            self.base.powers(),
            self.base.betas(),
            self.base.rho(),
            models.join(","),
            self.estimator.label(),
            self.n,
            self.seed.0
        )
    }
}

/// Expands strategy names and the NOMA-R variant setting into models.
pub fn strategy_models(names: &[String], nomar_variant: Option<&str>) -> Result<Vec<StrategyModel>> {
    let variants = match nomar_variant.unwrap_or("event") {
        "both" => vec![Variant::EventSelection, Variant::TimeShare],
        v => vec![Variant::parse(v)?],
    };
    let mut out = Vec::new();
    for name in names {
        let strategy = Strategy::parse(name)?;
        let models: Vec<StrategyModel> = match strategy {
            Strategy::NomaR => variants
                .iter()
                .map(|v| StrategyModel::new(strategy, Some(*v)))
                .collect::<Result<_>>()?,
            _ => vec![StrategyModel::new(strategy, None)?],
        };
        for m in models {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("strategies must not be empty".into()));
    }
    Ok(out)
}

fn keyed_by_k(map: Option<BTreeMap<String, Vec<f64>>>, field: &str) -> Result<BTreeMap<usize, Vec<f64>>> {
    map.unwrap_or_default()
        .into_iter()
        .map(|(k, v)| {
            k.parse::<usize>()
                .map(|k| (k, v))
                .map_err(|_| Error::Config(format!("{field}: key {k:?} is not a user count")))
        })
        .collect()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn into_spec(self) -> Result<SweepSpec> {
        let axis = match &self.axis {
            Some(a) => Axis::parse(a)?,
            None => Axis::SnrDb,
        };
        let powers = match self.powers {
            Some(p) => p,
            None => reference_powers(self.k_users).ok_or_else(|| {
                Error::Config(format!("powers missing and no default exists for k_users = {}", self.k_users))
            })?,
        };
        if powers.len() != self.k_users {
            return Err(Error::Config(format!(
                "k_users = {} but {} powers were given",
                self.k_users,
                powers.len()
            )));
        }
        let grid = match axis {
            Axis::SnrDb => {
                if self.grid.is_some() && self.snr_grid_db.is_some() {
                    return Err(Error::Config("give the SNR grid as either grid or snr_grid_db".into()));
                }
                if let Some(g) = self.grid.clone().or_else(|| self.snr_grid_db.clone()) {
                    if self.snr_db.is_some() {
                        return Err(Error::Config("snr_db and an SNR grid are mutually exclusive".into()));
                    }
                    g
                } else {
                    vec![self
                        .snr_db
                        .ok_or_else(|| Error::Config("one of snr_db or snr_grid_db is required".into()))?]
                }
            }
            Axis::Beta1 | Axis::KUsers => self
                .grid
                .clone()
                .ok_or_else(|| Error::Config(format!("axis {} needs a grid", axis.label())))?,
        };
        let snr_db = match axis {
            Axis::SnrDb => *grid.first().ok_or_else(|| Error::Config("grid must not be empty".into()))?,
            _ => self
                .snr_db
                .ok_or_else(|| Error::Config(format!("axis {} needs a fixed snr_db", axis.label())))?,
        };
        let base = NetworkConfig::new(powers, db_to_linear(snr_db), self.betas)?;
        let estimator = match &self.estimator {
            Some(e) => EstimatorChoice::parse(e)?,
            None => EstimatorChoice::Both,
        };
        let spec = SweepSpec {
            axis,
            grid,
            base,
            strategies: strategy_models(&self.strategies, self.nomar_variant.as_deref())?,
            estimator,
            n: self.n_samples.unwrap_or(DEFAULT_SAMPLES),
            seed: RngSeed(self.seed.unwrap_or(0)),
            workers: 0,
            out_path: None,
            powers_by_k: keyed_by_k(self.powers_by_k, "powers_by_k")?,
            betas_by_k: keyed_by_k(self.betas_by_k, "betas_by_k")?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ConfigFile::parse(&text)
        .map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?
        .into_spec()
}

/// Network configuration at the first grid point of a configuration file.
pub fn load_network_config(path: &Path) -> Result<NetworkConfig> {
    let spec = load_config(path)?;
    spec.network_at(spec.grid[0])
}
