//! Experiment orchestration: configs, seeded runs, aggregation and output.

pub mod aggregate;
pub mod cli;
pub mod config;
pub mod output;
pub mod plot;
pub mod runner;

pub use aggregate::{aggregate, aggregate_field, AggregateCurve, CurvePoint, Field};
pub use cli::{cli_main, run_to_dir};
pub use config::{expand_sweep, EarlyStop, EnvConfig, EnvKind, ExperimentConfig, SweepPoint, TestMetric, TestProtocol};
pub use output::{read_curve, read_records, records_csv, write_curve, write_records};
pub use plot::{render_plot, render_svg, PlotFrame};
pub use runner::{run_experiment, run_single, MetricsRecord, RunRngs};
