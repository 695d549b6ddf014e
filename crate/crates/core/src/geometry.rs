//! Dense real vectors, feasible sets with exact Euclidean projection, and
//! safe normalization.

use std::ops::Index;

use crate::error::{check_dim, NsmError, Result};

/// Default threshold below which a vector is treated as zero by [`normalize`].
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// A finite, non-empty vector of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    /// Validates that `entries` is non-empty and finite.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(NsmError::InvalidArgument("vector must have dim >= 1".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(NsmError::NonFinite {
                context: "vector entries".into(),
            });
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector must have dim >= 1");
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim >= 1 && value.is_finite());
        Self(vec![value; dim])
    }

    /// Standard basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = 1.0;
        v
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        Self(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dot(&self, other: &RealVector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn scaled(&self, factor: f64) -> Result<RealVector> {
        RealVector::new(self.0.iter().map(|v| v * factor).collect())
    }
}

impl Index<usize> for RealVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl AsRef<[f64]> for RealVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Squared Euclidean distance `Σ (aᵢ − bᵢ)²`.
pub fn distance_sq(a: &RealVector, b: &RealVector) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(distance_sq_slice(a.as_slice(), b.as_slice()))
}

pub(crate) fn distance_sq_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Result of [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub direction: RealVector,
    pub is_zero: bool,
}

/// Returns `v / ‖v‖`, or the zero vector with `is_zero = true` when
/// `‖v‖ <= zero_tol`.
pub fn normalize(v: &RealVector, zero_tol: f64) -> Result<Direction> {
    if !(zero_tol >= 0.0) {
        return Err(NsmError::InvalidArgument(format!("zero_tol must be >= 0, got {zero_tol}")));
    }
    let (direction, is_zero) = normalize_slice(v.as_slice(), zero_tol)?;
    Ok(Direction {
        direction: RealVector::from_vec_unchecked(direction),
        is_zero,
    })
}

pub(crate) fn normalize_slice(v: &[f64], zero_tol: f64) -> Result<(Vec<f64>, bool)> {
    if !all_finite(v) {
        return Err(NsmError::NonFinite {
            context: "vector to normalize".into(),
        });
    }
    let n = norm(v);
    if !n.is_finite() {
        // Entries are finite but the sum of squares overflowed; rescale first.
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let scaled: Vec<f64> = v.iter().map(|x| x / scale).collect();
        let sn = norm(&scaled);
        return Ok((scaled.iter().map(|x| x / sn).collect(), false));
    }
    if n > zero_tol {
        Ok((v.iter().map(|x| x / n).collect(), false))
    } else {
        Ok((vec![0.0; v.len()], true))
    }
}

/// A closed convex set with an exact Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// `{x : ‖x − center‖ ≤ radius}`.
    Ball { center: RealVector, radius: f64 },
    /// The diagonal segment `{x : x₀ = … = x_{d−1}, |xᵢ| ≤ bound}`.
    DiagBox { bound: f64, dim: usize },
    /// All of ℝᵈ. `diameter` is only a declared value for step-size formulas.
    Unconstrained { dim: usize, diameter: Option<f64> },
}

impl FeasibleSet {
    pub fn ball(center: RealVector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(NsmError::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn diag_box(bound: f64, dim: usize) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(NsmError::InvalidArgument(format!("box bound must be positive, got {bound}")));
        }
        if dim == 0 {
            return Err(NsmError::InvalidArgument("dimension must be >= 1".into()));
        }
        Ok(Self::DiagBox { bound, dim })
    }

    pub fn unconstrained(dim: usize, diameter: Option<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(NsmError::InvalidArgument("dimension must be >= 1".into()));
        }
        if let Some(r) = diameter {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(NsmError::InvalidArgument(format!("declared diameter must be >= 0, got {r}")));
            }
        }
        Ok(Self::Unconstrained { dim, diameter })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.dim(),
            Self::DiagBox { dim, .. } | Self::Unconstrained { dim, .. } => *dim,
        }
    }

    /// Exact Euclidean diameter; `None` for an unconstrained set without a
    /// declared value.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            Self::Ball { radius, .. } => Some(2.0 * radius),
            Self::DiagBox { bound, dim } => Some(2.0 * bound * (*dim as f64).sqrt()),
            Self::Unconstrained { diameter, .. } => *diameter,
        }
    }

    /// Membership test with absolute slack `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Self::Ball { center, radius } => {
                distance_sq_slice(x, center.as_slice()).sqrt() <= radius + tol
            }
            Self::DiagBox { bound, .. } => {
                let first = x[0];
                x.iter().all(|v| (v - first).abs() <= tol && v.abs() <= bound + tol)
            }
            Self::Unconstrained { .. } => true,
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &RealVector) -> Result<RealVector> {
        check_dim(self.dim(), x.dim())?;
        let mut out = x.as_slice().to_vec();
        self.project_in_place(&mut out)?;
        Ok(RealVector::from_vec_unchecked(out))
    }

    pub(crate) fn project_in_place(&self, x: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        if !all_finite(x) {
            return Err(NsmError::NonFinite {
                context: "point to project".into(),
            });
        }
        match self {
            Self::Ball { center, radius } => {
                let c = center.as_slice();
                let dist = distance_sq_slice(x, c).sqrt();
                if dist > *radius {
                    let scale = radius / dist;
                    for (xi, ci) in x.iter_mut().zip(c) {
                        *xi = ci + (*xi - ci) * scale;
                    }
                }
            }
            Self::DiagBox { bound, dim } => {
                let mean = x.iter().sum::<f64>() / *dim as f64;
                let v = mean.clamp(-bound, *bound);
                x.iter_mut().for_each(|xi| *xi = v);
            }
            Self::Unconstrained { .. } => {}
        }
        Ok(())
    }
}
