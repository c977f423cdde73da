//! Experiment runner: configs, the training loop, diagnostics, sweeps and plots.

mod config;
mod diagnostics;
pub mod plot;
mod report;
mod sweep;
mod train;

pub use config::{default_alpha_scale, parse_seeds, RunConfig, KEYS};
pub use diagnostics::{
    exhaustion_stats, height, max_heights, scatter_unloads, MetricsRow, RowKind, METRICS_HEADER,
};
pub use report::{find_runs, read_metrics, read_unloads, report};
pub use sweep::{sweep, train_seeds, worker_count, SweepCell, SweepGrid, SweepSummaryRow};
pub use train::{train, TrainOutcome};
