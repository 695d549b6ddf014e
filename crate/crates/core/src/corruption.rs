//! Probabilistic corruption of subgradient feedback: with probability `p`
//! the optimizer receives an adversarial vector `b_t` instead of `g(x_t)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, NsmError, Result};
use crate::geometry::{distance_sq_slice, RealVector};

/// Distance below which the worst-case adversary treats `x_t` as the optimum.
pub const AT_OPTIMUM_TOL: f64 = 1e-12;

/// Strategy used to produce the corrupt feedback `b_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Adversary {
    /// `(R/γ_t)·(x* − x_t)/‖x* − x_t‖`: a huge push toward the optimum, so
    /// that descent along `−b_t` moves away from it. Emits `(R/γ_t)·e₁` when
    /// `x_t` coincides with `x*`.
    WorstCaseDirectional,
    /// `factor · (−g_t)`.
    ScaledOpposite { factor: f64 },
    /// `−x_t` when `x_{t,0} ≠ 0`, otherwise `fallback`.
    NegateIterate { fallback: RealVector },
    /// A constant vector.
    FixedVector(RealVector),
}

impl Adversary {
    pub fn scaled_opposite(factor: f64) -> Result<Self> {
        if factor == 0.0 || !factor.is_finite() {
            return Err(NsmError::InvalidArgument(format!(
                "scaled-opposite factor must be finite and non-zero, got {factor}"
            )));
        }
        Ok(Self::ScaledOpposite { factor })
    }

    /// `NegateIterate` with the all-ones fallback.
    pub fn negate_iterate(dim: usize) -> Self {
        Self::NegateIterate {
            fallback: RealVector::filled(dim, 1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::WorstCaseDirectional => "worst-case",
            Self::ScaledOpposite { .. } => "opposite",
            Self::NegateIterate { .. } => "negate-iterate",
            Self::FixedVector(_) => "fixed",
        }
    }

    /// Checks vector-valued strategies against the problem dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::NegateIterate { fallback } => check_dim(dim, fallback.dim()),
            Self::FixedVector(v) => check_dim(dim, v.dim()),
            Self::ScaledOpposite { factor } if *factor == 0.0 || !factor.is_finite() => Err(
                NsmError::InvalidArgument("scaled-opposite factor must be non-zero".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Everything an adversary may look at when choosing `b_t`.
#[derive(Debug, Clone, Copy)]
pub struct FeedbackContext<'a> {
    pub x: &'a [f64],
    pub gradient: &'a [f64],
    pub gamma: f64,
    pub optimum: Option<&'a [f64]>,
    pub radius: Option<f64>,
}

/// Computes `b_t` for the given strategy.
pub fn corrupt_vector(adversary: &Adversary, ctx: &FeedbackContext<'_>) -> Result<Vec<f64>> {
    let dim = ctx.x.len();
    check_dim(dim, ctx.gradient.len())?;
    match adversary {
        Adversary::WorstCaseDirectional => {
            let optimum = ctx.optimum.ok_or(NsmError::MissingContext {
                adversary: "worst-case",
                missing: "a known optimum",
            })?;
            let radius = ctx.radius.ok_or(NsmError::MissingContext {
                adversary: "worst-case",
                missing: "a radius R",
            })?;
            check_dim(dim, optimum.len())?;
            if !(ctx.gamma > 0.0) {
                return Err(NsmError::InvalidArgument(format!("step size must be > 0, got {}", ctx.gamma)));
            }
            let scale = radius / ctx.gamma;
            let dist = distance_sq_slice(optimum, ctx.x).sqrt();
            if dist <= AT_OPTIMUM_TOL {
                let mut b = vec![0.0; dim];
                b[0] = scale;
                Ok(b)
            } else {
                Ok(optimum
                    .iter()
                    .zip(ctx.x)
                    .map(|(o, x)| scale * (o - x) / dist)
                    .collect())
            }
        }
        Adversary::ScaledOpposite { factor } => Ok(ctx.gradient.iter().map(|g| -factor * g).collect()),
        Adversary::NegateIterate { fallback } => {
            check_dim(dim, fallback.dim())?;
            if ctx.x[0] != 0.0 {
                Ok(ctx.x.iter().map(|v| -v).collect())
            } else {
                Ok(fallback.as_slice().to_vec())
            }
        }
        Adversary::FixedVector(v) => {
            check_dim(dim, v.dim())?;
            Ok(v.as_slice().to_vec())
        }
    }
}

/// Feedback returned by [`CorruptionChannel::next_feedback`].
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub h: Vec<f64>,
    pub corrupt: bool,
}

/// A Bernoulli(`p`) gate in front of an adversary. Each call to
/// [`next_feedback`](Self::next_feedback) consumes exactly one uniform draw,
/// independent of the iterate.
#[derive(Debug, Clone)]
pub struct CorruptionChannel {
    p: f64,
    adversary: Adversary,
    rng: ChaCha8Rng,
    draws_made: u64,
    corruptions_made: u64,
}

impl CorruptionChannel {
    pub fn new(p: f64, adversary: Adversary, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(NsmError::InvalidArgument(format!("corruption probability must be in [0, 1], got {p}")));
        }
        Ok(Self {
            p,
            adversary,
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws_made: 0,
            corruptions_made: 0,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn adversary(&self) -> &Adversary {
        &self.adversary
    }

    pub fn draws_made(&self) -> u64 {
        self.draws_made
    }

    pub fn corruptions_made(&self) -> u64 {
        self.corruptions_made
    }

    /// Draws the corruption indicator without producing feedback.
    pub fn draw(&mut self) -> bool {
        let u: f64 = self.rng.random();
        self.draws_made += 1;
        let corrupt = u < self.p;
        if corrupt {
            self.corruptions_made += 1;
        }
        corrupt
    }

    /// Returns `(b_t, true)` with probability `p`, else `(g_t, false)`.
    pub fn next_feedback(&mut self, ctx: &FeedbackContext<'_>) -> Result<Feedback> {
        if self.draw() {
            Ok(Feedback {
                h: corrupt_vector(&self.adversary, ctx)?,
                corrupt: true,
            })
        } else {
            Ok(Feedback {
                h: ctx.gradient.to_vec(),
                corrupt: false,
            })
        }
    }
}
