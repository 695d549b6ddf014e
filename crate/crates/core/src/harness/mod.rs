//! Experiment presets, multi-seed execution, aggregation across seeds, and
//! CSV export.
//!
//! Output rows follow the schema `run_id,seed,method,iter,metric,value` and
//! are sorted by run id, method, seed, iteration and metric, so identical
//! configurations produce byte-identical files regardless of scheduling.

pub mod config;
pub mod csv;
pub mod experiment;
pub mod records;
pub mod seed;

pub use config::{
    AdversarySpec, ExperimentConfig, ExperimentKind, ProbabilitySpec, ProblemSpec, Scale, ScheduleSpec,
    StartSpec,
};
pub use csv::{format_g17, read_records, to_csv_bytes, write_csv, write_rows};
pub use experiment::{
    build_instance, execute, plan_experiment, run_experiment, to_records, ExperimentOutput, ExperimentPlan,
    ProblemInstance, RunOutcome, RunSpec,
};
pub use records::{aggregate, sort_records, Metric, RunRecord, Statistic, SummaryRow};
pub use seed::derive_seed;
