//! Parameter sweeps.

use super::config::SweepSpec;
use super::results::{
    write_results, write_tau_rows, ResultRow, TauRow, UserLabel, CLOSED_FORM, CLOSED_FORM_ERROR, MONTE_CARLO,
    MONTE_CARLO_ERROR,
};
use crate::closed_form::{
    ec_k2, ec_nomar_strong_timeshare_with_tau, ec_nomar_weak_closed_with_tau, Strategy, StrategyModel, TauCache,
    TwoUser, TwoUserParams, Variant,
};
use crate::monte_carlo::{MonteCarlo, PointEstimate};
use crate::rate_model::NetworkConfig;
use crate::specfun::QuadratureSpec;
use crate::{Error, Result};
use rayon::prelude::*;

/// Estimator tag of the grand-cluster frequency rows in selection tables.
pub const GRAND_CLUSTER: &str = "mc_grand_cluster";

/// Output of [`run_sweep`].
#[derive(Debug, Clone, Default)]
pub struct SweepTable {
    /// Ordered by grid point, then strategy model, then estimator (cf before
    /// mc), then user 1..K and the sum.
    pub rows: Vec<ResultRow>,
    /// Monte-Carlo NOMA-selection and grand-cluster frequencies per grid point.
    pub selection: Vec<TauRow>,
    /// Closed-form rows lost to quadrature that did not converge.
    pub convergence_failures: usize,
}

struct PointResult {
    rows: Vec<ResultRow>,
    selection: Vec<TauRow>,
    convergence_failures: usize,
}

/// Runs `f` on a pool of `workers` threads (0: the ambient pool).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Evaluates every (grid point, strategy model, user) of `spec` and writes
/// the table to `spec.out_path` when set. Per-row failures become error rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let cache = TauCache::new();
    let points = with_workers(spec.workers, || {
        spec.grid
            .par_iter()
            .map(|&v| evaluate_point(spec, v, &cache))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut table = SweepTable::default();
    for p in points {
        table.rows.extend(p.rows);
        table.selection.extend(p.selection);
        table.convergence_failures += p.convergence_failures;
    }
    if let Some(path) = &spec.out_path {
        write_results(path, &spec.to_string(), &table.rows)?;
    }
    Ok(table)
}

/// NOMA-selection probability along the axis of `spec`: the closed form
/// (K = 2 only) and/or the Monte-Carlo frequency, as requested.
pub fn run_tau_sweep(spec: &SweepSpec) -> Result<Vec<TauRow>> {
    if spec.grid.is_empty() {
        return Err(Error::Config("grid must not be empty".into()));
    }
    let cache = TauCache::new();
    let points = with_workers(spec.workers, || {
        spec.grid
            .par_iter()
            .map(|&v| -> Result<Vec<TauRow>> {
                let cfg = spec.network_at(v)?;
                let (db, lin) = spec.axis_columns(v);
                let row = |estimator: &str, tau: f64, std_err: f64, n: u64, seed: u64| TauRow {
                    axis: spec.axis.label().into(),
                    axis_value_db: db,
                    axis_value_linear: lin,
                    k_users: cfg.k(),
                    estimator: estimator.into(),
                    tau,
                    std_err,
                    n_samples: n,
                    seed,
                };
                let mut rows = Vec::new();
                if spec.estimator.closed_form() {
                    rows.push(match TwoUserParams::from_config(&cfg) {
                        Ok(p) => row(CLOSED_FORM, cache.get(&p), 0.0, 0, 0),
                        Err(e) => {
                            log::warn!("closed-form tau unavailable at {} = {v}: {e}", spec.axis.label());
                            row(CLOSED_FORM_ERROR, f64::NAN, f64::NAN, 0, 0)
                        }
                    });
                }
                if spec.estimator.monte_carlo() {
                    let est = MonteCarlo::new(spec.n, spec.seed)?.tau(&cfg)?;
                    rows.push(row(MONTE_CARLO, est.value, est.std_err, est.n, spec.seed.0));
                }
                Ok(rows)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let rows: Vec<TauRow> = points.into_iter().flatten().collect();
    if let Some(path) = &spec.out_path {
        write_tau_rows(path, &spec.to_string(), &rows)?;
    }
    Ok(rows)
}

fn variant_label(m: &StrategyModel) -> &'static str {
    m.variant().map_or("none", |v| v.label())
}

/// Closed-form (quadrature) EC of one user of a two-user network.
fn closed_form_user(model: StrategyModel, user: TwoUser, p: &TwoUserParams, cache: &TauCache, q: &QuadratureSpec) -> Result<f64> {
    match (model.strategy(), model.variant(), user) {
        (Strategy::NomaR, Some(Variant::TimeShare), TwoUser::Weak) => ec_nomar_weak_closed_with_tau(p, cache.get(p), q),
        (Strategy::NomaR, Some(Variant::TimeShare), TwoUser::Strong) => {
            ec_nomar_strong_timeshare_with_tau(p, cache.get(p), q)
        }
        _ => ec_k2(model, user, p, q),
    }
}

fn evaluate_point(spec: &SweepSpec, v: f64, cache: &TauCache) -> Result<PointResult> {
    let cfg = spec.network_at(v)?;
    let k = cfg.k();
    let (db, lin) = spec.axis_columns(v);
    let make = |model: &StrategyModel, user: UserLabel, estimator: &str, ec: f64, std_err: f64, n: u64, seed: u64| ResultRow {
        axis: spec.axis.label().into(),
        axis_value_db: db,
        axis_value_linear: lin,
        strategy: model.strategy().label().into(),
        variant: variant_label(model).into(),
        user,
        estimator: estimator.into(),
        ec,
        std_err,
        n_samples: n,
        seed,
    };
    let labels: Vec<UserLabel> = (1..=k).map(UserLabel::User).chain([UserLabel::Sum]).collect();
    let error_rows = |model: &StrategyModel, tag: &str| -> Vec<ResultRow> {
        labels.iter().map(|&u| make(model, u, tag, f64::NAN, f64::NAN, 0, 0)).collect()
    };

    let mut convergence_failures = 0;
    let cf: Vec<Option<Vec<ResultRow>>> = if spec.estimator.closed_form() {
        let q = QuadratureSpec::default();
        spec.strategies
            .iter()
            .map(|model| {
                let values = TwoUserParams::from_config(&cfg).and_then(|p| {
                    [TwoUser::Weak, TwoUser::Strong]
                        .iter()
                        .map(|&u| closed_form_user(*model, u, &p, cache, &q))
                        .collect::<Result<Vec<f64>>>()
                });
                Some(match values {
                    Ok(vals) => {
                        let sum: f64 = vals.iter().sum();
                        let mut rows: Vec<ResultRow> = vals
                            .iter()
                            .enumerate()
                            .map(|(i, &e)| make(model, UserLabel::User(i + 1), CLOSED_FORM, e, 0.0, 0, 0))
                            .collect();
                        rows.push(make(model, UserLabel::Sum, CLOSED_FORM, sum, 0.0, 0, 0));
                        rows
                    }
                    Err(e) => {
                        if matches!(e, Error::Convergence { .. }) {
                            convergence_failures += 1;
                        }
                        log::warn!("closed form for {model} at {} = {v}: {e}", spec.axis.label());
                        error_rows(model, CLOSED_FORM_ERROR)
                    }
                })
            })
            .collect()
    } else {
        vec![None; spec.strategies.len()]
    };

    let mut selection = Vec::new();
    let mc: Vec<Option<Vec<ResultRow>>> = if spec.estimator.monte_carlo() {
        let supported: Vec<StrategyModel> = spec
            .strategies
            .iter()
            .copied()
            .filter(|m| k == 2 || m.variant() != Some(Variant::TimeShare))
            .collect();
        let estimate: Result<PointEstimate> = MonteCarlo::new(spec.n, spec.seed)?.point(&cfg, &supported);
        if let Err(e) = &estimate {
            log::warn!("Monte Carlo at {} = {v}: {e}", spec.axis.label());
        }
        if let Ok(p) = &estimate {
            let tau_row = |estimator: &str, t: &crate::TauEstimate| TauRow {
                axis: spec.axis.label().into(),
                axis_value_db: db,
                axis_value_linear: lin,
                k_users: k,
                estimator: estimator.into(),
                tau: t.value,
                std_err: t.std_err,
                n_samples: t.n,
                seed: spec.seed.0,
            };
            selection.push(tau_row(MONTE_CARLO, &p.noma_frequency));
            selection.push(tau_row(GRAND_CLUSTER, &p.grand_cluster_frequency));
        }
        spec.strategies
            .iter()
            .map(|model| {
                let found = estimate.as_ref().ok().and_then(|p| p.get(*model));
                Some(match found {
                    Some(s) => {
                        let mut rows: Vec<ResultRow> = s
                            .users
                            .iter()
                            .enumerate()
                            .map(|(i, e)| make(model, UserLabel::User(i + 1), MONTE_CARLO, e.value, e.std_err, e.n, spec.seed.0))
                            .collect();
                        rows.push(make(model, UserLabel::Sum, MONTE_CARLO, s.sum, s.sum_std_err, spec.n, spec.seed.0));
                        rows
                    }
                    None => {
                        if estimate.is_ok() {
                            log::warn!("{model} has no Monte-Carlo estimator for K = {k}");
                        }
                        error_rows(model, MONTE_CARLO_ERROR)
                    }
                })
            })
            .collect()
    } else {
        vec![None; spec.strategies.len()]
    };

    let mut rows = Vec::new();
    for (c, m) in cf.into_iter().zip(mc) {
        rows.extend(c.into_iter().flatten());
        rows.extend(m.into_iter().flatten());
    }
    Ok(PointResult {
        rows,
        selection,
        convergence_failures,
    })
}

/// Evaluates a single network configuration; a one-point sweep on the SNR axis.
pub fn evaluate_config(cfg: &NetworkConfig, base: &SweepSpec) -> Result<SweepTable> {
    let mut spec = base.clone();
    spec.axis = super::config::Axis::SnrDb;
    spec.grid = vec![crate::linear_to_db(cfg.rho())];
    spec.base = cfg.clone();
    spec.out_path = None;
    run_sweep(&spec)
}
