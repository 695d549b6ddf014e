//! Normalized subgradient method (NSM) under probabilistic, arbitrary
//! corruption of the subgradient feedback.
//!
//! At every iteration the optimizer receives the true subgradient with
//! probability `1 − p` and an adversarial vector with probability `p`. NSM
//! only uses the direction of the feedback, so a corrupt vector moves the
//! iterate by at most the step length. Below the corruption threshold
//! `cos φ / (1 + cos φ)` the iterates converge at rate `O(log T / T)`.
//!
//! Modules:
//! - [`geometry`]: vectors, feasible sets, projection, normalization.
//! - [`problems`]: objectives, data generators, closed-form optima.
//! - [`corruption`]: the corruption channel and adversaries.
//! - [`optimizers`]: NSM, baseline methods, and the run loop.
//! - [`analysis`]: step sizes, thresholds, bounds and numerical probes.
//! - [`harness`]: experiment presets, multi-seed runs, aggregation and CSV.
//! - [`verify`]: invariant suites.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod corruption;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod optimizers;
pub mod problems;
pub mod verify;

pub use error::{NsmError, Result};
pub use geometry::{distance_sq, normalize, FeasibleSet, RealVector};
