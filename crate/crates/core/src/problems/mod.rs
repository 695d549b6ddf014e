//! Objective functions with exact subgradients, synthetic data generators,
//! closed-form optima, and spectral constants.

mod least_squares;
pub mod linalg;
mod logistic;
mod synth;
mod toy;

pub use least_squares::{least_squares_optimum, LeastSquares, LinRegData};
pub use linalg::{condition_number, Cholesky, Matrix, SingularValues};
pub use logistic::{ClassData, Logistic};
pub use synth::{synth_classes, synth_linreg};
pub(crate) use synth::sample_ball as sample_ball_point;
pub use toy::{Quadratic, ToyQuartic};

use crate::geometry::RealVector;

/// A problem instance: value, subgradient, and an optional nearest-minimizer
/// oracle.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes a subgradient at `x` into `out`.
    fn subgradient_into(&self, x: &[f64], out: &mut [f64]);

    /// Nearest minimizer to `x`, when known.
    fn nearest_optimum(&self, _x: &[f64]) -> Option<&RealVector> {
        None
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.subgradient_into(x, &mut out);
        out
    }
}
