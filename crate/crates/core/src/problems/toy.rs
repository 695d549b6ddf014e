use super::Objective;
use crate::geometry::RealVector;

/// `f(x) = x_{d−1}⁴`, minimized at the origin. Intended to be paired with a
/// diagonal box, on which it meets the acute angle condition with
/// `cos φ = 1/√d` exactly.
#[derive(Debug, Clone)]
pub struct ToyQuartic {
    optimum: RealVector,
}

impl ToyQuartic {
    pub fn new(dim: usize) -> Self {
        Self {
            optimum: RealVector::zeros(dim),
        }
    }
}

impl Objective for ToyQuartic {
    fn dim(&self) -> usize {
        self.optimum.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        x[x.len() - 1].powi(4)
    }

    fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let last = x.len() - 1;
        out[last] = 4.0 * x[last].powi(3);
    }

    fn nearest_optimum(&self, _x: &[f64]) -> Option<&RealVector> {
        Some(&self.optimum)
    }
}

/// `f(x) = ‖x − c‖²`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    center: RealVector,
}

impl Quadratic {
    pub fn new(center: RealVector) -> Self {
        Self { center }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        crate::geometry::distance_sq_slice(x, self.center.as_slice())
    }

    fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(self.center.as_slice()) {
            *o = 2.0 * (xi - ci);
        }
    }

    fn nearest_optimum(&self, _x: &[f64]) -> Option<&RealVector> {
        Some(&self.center)
    }
}
