//! The normalized subgradient method, baseline first-order methods, and the
//! run loop that drives them against a corruption channel.

mod methods;
mod run;
mod schedule;

pub use methods::{nsm_step, BaselineHyper, Method, OptimizerState};
pub use run::{default_cadence, run, MetricSet, RunSettings, Trajectory, TrajectoryPoint};
pub use schedule::StepSchedule;
