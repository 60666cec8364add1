//! Figure pipelines: the sweeps behind the four result figures, each with a
//! gnuplot script that plots the emitted CSV.

use super::config::{Axis, EstimatorChoice, SweepSpec};
use super::results::{fmt_f64, write_table, write_tau_rows, ResultRow, UserLabel, MONTE_CARLO};
use super::sweep::{run_sweep, run_tau_sweep, SweepTable};
use crate::channel::RngSeed;
use crate::closed_form::StrategyModel;
use crate::monte_carlo::combined_se;
use crate::rate_model::NetworkConfig;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Grid of the beta1 sweep.
pub const FIG4_BETA1: [f64; 8] = [-10.0, -8.0, -6.0, -4.0, -2.0, -1.0, -0.5, -0.1];
/// SNR of the beta1 sweep, in dB.
pub const FIG4_SNR_DB: f64 = 35.0;

/// Run settings shared by all figures.
#[derive(Debug, Clone, Copy)]
pub struct FigureRun {
    pub n: u64,
    pub seed: RngSeed,
    pub workers: usize,
}

fn db_grid(from: f64, to: f64, step: f64) -> Vec<f64> {
    let count = ((to - from) / step).round() as usize;
    (0..=count).map(|i| from + step * i as f64).collect()
}

fn models(k: usize) -> Vec<StrategyModel> {
    let mut m = vec![StrategyModel::OMA, StrategyModel::NOMA, StrategyModel::NOMA_R_EVENT];
    if k == 2 {
        m.push(StrategyModel::NOMA_R_TIMESHARE);
    }
    m
}

fn base_spec(cfg: NetworkConfig, axis: Axis, grid: Vec<f64>, estimator: EstimatorChoice, run: &FigureRun) -> SweepSpec {
    SweepSpec {
        axis,
        grid,
        base: cfg,
        strategies: models(2),
        estimator,
        n: run.n,
        seed: run.seed,
        workers: run.workers,
        out_path: None,
        powers_by_k: BTreeMap::new(),
        betas_by_k: BTreeMap::new(),
    }
}

/// Runs the pipeline of figure `fig` (1 to 4), writing CSV files and gnuplot
/// scripts into `out_dir`. Returns the paths written.
pub fn reproduce_figure(fig: u8, out_dir: &Path, run: &FigureRun) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    match fig {
        1 => figure1(out_dir, run),
        2 => figure2(out_dir, run),
        3 => figure3(out_dir, run),
        4 => figure4(out_dir, run),
        _ => Err(Error::Config(format!("figure must be 1, 2, 3 or 4, got {fig}"))),
    }
}

fn write_script(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn figure1(out: &Path, run: &FigureRun) -> Result<Vec<PathBuf>> {
    let mut spec = base_spec(
        NetworkConfig::reference(2, 1.0)?,
        Axis::SnrDb,
        db_grid(-40.0, 40.0, 5.0),
        EstimatorChoice::Both,
        run,
    );
    let csv = out.join("fig1_tau.csv");
    spec.out_path = Some(csv.clone());
    run_tau_sweep(&spec)?;
    let gp = out.join("fig1.gp");
    write_script(
        &gp,
        r#"set datafile separator ","
set xlabel "SNR (dB)"
set ylabel "Probability of NOMA"
set key bottom left
plot "fig1_tau.csv" using 2:(strcol(5) eq "cf" ? $6 : 1/0) with lines title "closed form", \
     "fig1_tau.csv" using 2:(strcol(5) eq "mc" ? $6 : 1/0) with points pt 6 title "Monte Carlo"
"#,
    )?;
    Ok(vec![csv, gp])
}

fn figure2(out: &Path, run: &FigureRun) -> Result<Vec<PathBuf>> {
    let mut spec = base_spec(
        NetworkConfig::reference(2, 1.0)?,
        Axis::SnrDb,
        db_grid(-10.0, 40.0, 5.0),
        EstimatorChoice::Both,
        run,
    );
    let csv = out.join("fig2_ec_per_user.csv");
    spec.out_path = Some(csv.clone());
    run_sweep(&spec)?;
    let gp = out.join("fig2.gp");
    let mut plots = Vec::new();
    for user in ["1", "2"] {
        for (s, v) in [("OMA", "none"), ("NOMA", "none"), ("NOMA-R", "event"), ("NOMA-R", "timeshare")] {
            plots.push(format!(
                "\"fig2_ec_per_user.csv\" using 2:(strcol(4) eq \"{s}\" && strcol(5) eq \"{v}\" && strcol(6) eq \"{user}\" && strcol(7) eq \"mc\" ? $8 : 1/0) with linespoints title \"{s} {v} user {user}\""
            ));
        }
    }
    write_script(
        &gp,
        &format!(
            "set datafile separator \",\"\nset xlabel \"SNR (dB)\"\nset ylabel \"EC (bits/s/Hz)\"\nset key top left\nplot {}\n",
            plots.join(", \\\n     ")
        ),
    )?;
    Ok(vec![csv, gp])
}

fn sum_plot_script(csv: &str, xlabel: &str) -> String {
    let plots: Vec<String> = [("OMA", "none"), ("NOMA", "none"), ("NOMA-R", "event")]
        .iter()
        .map(|(s, v)| {
            let x = if xlabel.starts_with("SNR") { 2 } else { 3 };
            format!(
                "\"{csv}\" using {x}:(strcol(4) eq \"{s}\" && strcol(5) eq \"{v}\" && strcol(6) eq \"sum\" && strcol(7) eq \"mc\" ? $8 : 1/0) with linespoints title \"{s}\""
            )
        })
        .collect();
    format!(
        "set datafile separator \",\"\nset xlabel \"{xlabel}\"\nset ylabel \"Sum EC (bits/s/Hz)\"\nset key top left\nplot {}\n",
        plots.join(", \\\n     ")
    )
}

fn figure3(out: &Path, run: &FigureRun) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut selection = Vec::new();
    for k in [2, 3, 4] {
        let estimator = if k == 2 { EstimatorChoice::Both } else { EstimatorChoice::MonteCarlo };
        let mut spec = base_spec(NetworkConfig::reference(k, 1.0)?, Axis::SnrDb, db_grid(0.0, 40.0, 5.0), estimator, run);
        spec.strategies = models(k);
        let csv = out.join(format!("fig3_sum_ec_k{k}.csv"));
        spec.out_path = Some(csv.clone());
        let table = run_sweep(&spec)?;
        selection.extend(table.selection);
        written.push(csv);
        let gp = out.join(format!("fig3_k{k}.gp"));
        write_script(&gp, &sum_plot_script(&format!("fig3_sum_ec_k{k}.csv"), "SNR (dB)"))?;
        written.push(gp);
    }
    let sel = out.join("fig3_selection.csv");
    write_tau_rows(
        &sel,
        &format!("NOMA-selection and grand-cluster frequencies; n_samples={} seed={}", run.n, run.seed.0),
        &selection,
    )?;
    written.push(sel);
    Ok(written)
}

/// Largest beta1 at which the NOMA-R (event selection) Monte-Carlo sum EC
/// exceeds the NOMA sum EC by more than three combined standard errors.
pub fn largest_beta1_nomar_exceeds_noma(rows: &[ResultRow]) -> Option<f64> {
    let sum_of = |strategy: &str, v: f64| {
        rows.iter().find(|r| {
            r.strategy == strategy
                && (strategy != "NOMA-R" || r.variant == "event")
                && r.user == UserLabel::Sum
                && r.estimator == MONTE_CARLO
                && r.axis_value_linear == v
        })
    };
    let mut axis: Vec<f64> = rows.iter().map(|r| r.axis_value_linear).collect();
    axis.sort_by(f64::total_cmp);
    axis.dedup();
    axis.into_iter()
        .rev()
        .find(|&v| match (sum_of("NOMA-R", v), sum_of("NOMA", v)) {
            (Some(r), Some(n)) => r.ec - n.ec > 3.0 * combined_se(r.std_err, n.std_err),
            _ => false,
        })
}

fn figure4(out: &Path, run: &FigureRun) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut summary = Vec::new();
    for k in [2, 3] {
        let estimator = if k == 2 { EstimatorChoice::Both } else { EstimatorChoice::MonteCarlo };
        let cfg = NetworkConfig::reference(k, crate::db_to_linear(FIG4_SNR_DB))?;
        let mut spec = base_spec(cfg, Axis::Beta1, FIG4_BETA1.to_vec(), estimator, run);
        spec.strategies = models(k);
        let csv = out.join(format!("fig4_sum_ec_k{k}.csv"));
        spec.out_path = Some(csv.clone());
        let SweepTable { rows, .. } = run_sweep(&spec)?;
        let largest = largest_beta1_nomar_exceeds_noma(&rows);
        summary.push(vec![k.to_string(), fmt_f64(FIG4_SNR_DB), fmt_f64(largest.unwrap_or(f64::NAN))]);
        written.push(csv);
        let gp = out.join(format!("fig4_k{k}.gp"));
        write_script(&gp, &sum_plot_script(&format!("fig4_sum_ec_k{k}.csv"), "beta_1"))?;
        written.push(gp);
    }
    let path = out.join("fig4_summary.csv");
    write_table(
        &path,
        &format!("largest beta1 with NOMA-R sum EC above NOMA by more than 3 SE; n_samples={} seed={}", run.n, run.seed.0),
        "k_users,snr_db,largest_beta1_nomar_exceeds_noma",
        summary,
    )?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::results::{read_results, read_tau_rows, CLOSED_FORM};

    #[test]
    fn grids() {
        assert_eq!(db_grid(-40.0, 40.0, 5.0).len(), 17);
        assert_eq!(db_grid(0.0, 40.0, 5.0).last(), Some(&40.0));
    }

    #[test]
    fn figure1_small_run() {
        let dir = tempfile::tempdir().unwrap();
        let run = FigureRun { n: 20_000, seed: RngSeed(42), workers: 1 };
        let files = reproduce_figure(1, dir.path(), &run).unwrap();
        assert_eq!(files.len(), 2);
        let rows = read_tau_rows(&files[0]).unwrap();
        assert_eq!(rows.len(), 34);
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].estimator, CLOSED_FORM);
            assert!((pair[0].tau - pair[1].tau).abs() <= (3.0 * pair[1].std_err).max(0.01));
        }
        assert!(std::fs::read_to_string(&files[1]).unwrap().contains("fig1_tau.csv"));
    }

    #[test]
    fn summary_picks_largest_exceeding_beta() {
        let dir = tempfile::tempdir().unwrap();
        let run = FigureRun { n: 20_000, seed: RngSeed(1), workers: 0 };
        let mut spec = base_spec(
            NetworkConfig::reference(2, crate::db_to_linear(FIG4_SNR_DB)).unwrap(),
            Axis::Beta1,
            vec![-6.0, -0.1],
            EstimatorChoice::MonteCarlo,
            &run,
        );
        spec.out_path = Some(dir.path().join("b.csv"));
        run_sweep(&spec).unwrap();
        let rows = read_results(&dir.path().join("b.csv")).unwrap();
        let largest = largest_beta1_nomar_exceeds_noma(&rows);
        assert_eq!(largest, Some(-6.0));
    }

    #[test]
    fn unknown_figure() {
        let dir = tempfile::tempdir().unwrap();
        let run = FigureRun { n: 10, seed: RngSeed(1), workers: 0 };
        assert!(reproduce_figure(5, dir.path(), &run).is_err());
    }
}
