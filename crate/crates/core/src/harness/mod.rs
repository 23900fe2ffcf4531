//! Config ingestion, sweep orchestration and result files.

pub mod config;
pub mod output;
pub mod pipeline;

pub use config::{Case, ExperimentConfig};
pub use output::{emit_csv, emit_json, read_json, write_csv, write_json, SweepDocument};
pub use pipeline::{run_cases, run_cases_on, summarize, Pipeline, SweepRecord, SweepSummary};
