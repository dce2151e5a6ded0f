//! Seeded trials, sweeps and their CSV/SVG artifacts.

pub mod config;
pub mod metrics;
pub mod output;
pub mod plot;
pub mod sweep;
pub mod trial;

pub use config::{EnvConfig, GridAxes, GridSpec, RunConfig, SCHEMA_VERSION};
pub use metrics::{MetricRow, MetricsTracker, Summary};
pub use output::{read_csv, write_best_csv, write_csv, CsvRow, TraceWriter, METRIC_COLUMNS};
pub use plot::{aggregate_series, emit_plot, render_svg, Metric, PlotOptions, Series, LOG_FLOOR};
pub use sweep::{best_per_method, run_sweep, BestChoice, SweepOutcome, TrialFailure};
pub use trial::{run_trial, run_trial_with, StepEvent, TrialResult};
