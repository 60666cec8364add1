//! Configuration ingestion, sweeps, figure pipelines and CSV output.

mod config;
mod figures;
mod results;
mod sweep;
mod validate;

pub use config::{
    load_config, load_network_config, strategy_models, Axis, ConfigFile, EstimatorChoice, SweepSpec, DEFAULT_SAMPLES,
};
pub use figures::{largest_beta1_nomar_exceeds_noma, reproduce_figure, FigureRun, FIG4_BETA1, FIG4_SNR_DB};
pub use results::{
    fmt_f64, normalized_contents, read_results, read_tau_rows, results_to_string, tau_rows_to_string, write_results,
    write_table, write_tau_rows, ResultRow, TauRow, UserLabel, CLOSED_FORM, CLOSED_FORM_ERROR, EC_HEADER, MONTE_CARLO,
    MONTE_CARLO_ERROR, TAU_HEADER, TIMESTAMP_PREFIX,
};
pub use sweep::{evaluate_config, run_sweep, run_tau_sweep, SweepTable, GRAND_CLUSTER};
pub use validate::{run_validation, Check, ValidationReport};
