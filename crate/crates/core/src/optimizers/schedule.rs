use crate::error::{NsmError, Result};

/// Step size rule, indexed from `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `γ_t = gamma0 / t`.
    InverseT { gamma0: f64 },
    /// `γ_t = gamma`.
    Constant { gamma: f64 },
}

impl StepSchedule {
    pub fn inverse_t(gamma0: f64) -> Result<Self> {
        check_positive(gamma0)?;
        Ok(Self::InverseT { gamma0 })
    }

    pub fn constant(gamma: f64) -> Result<Self> {
        check_positive(gamma)?;
        Ok(Self::Constant { gamma })
    }

    pub fn gamma(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        match *self {
            Self::InverseT { gamma0 } => gamma0 / t as f64,
            Self::Constant { gamma } => gamma,
        }
    }

    /// The scale parameter (`gamma0` or `gamma`).
    pub fn base(&self) -> f64 {
        match *self {
            Self::InverseT { gamma0 } => gamma0,
            Self::Constant { gamma } => gamma,
        }
    }
}

fn check_positive(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(NsmError::InvalidArgument(format!("step size must be positive, got {v}")))
    }
}
