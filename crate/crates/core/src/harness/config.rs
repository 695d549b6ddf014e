use std::fmt;
use std::str::FromStr;

use crate::corruption::Adversary;
use crate::error::{NsmError, Result};
use crate::geometry::RealVector;
use crate::optimizers::{BaselineHyper, Method};

use super::records::Metric;

/// Named experiment family; used as the prefix of every run id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Toy,
    LinReg,
    Logistic,
    Custom,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Toy => "toy",
            Self::LinReg => "linreg",
            Self::Logistic => "logistic",
            Self::Custom => "custom",
        }
    }
}

/// Problem instance parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// `x_{d−1}⁴` on the diagonal segment `|xᵢ| ≤ bound`.
    Toy { dim: usize, bound: f64 },
    /// Least squares on synthetic Gaussian data. `radius` bounds the true
    /// weights and scales the adversary; the feasible set is the ball of
    /// radius `set_radius` around the origin.
    LinReg {
        dim: usize,
        samples: usize,
        radius: f64,
        noise_sd: f64,
        set_radius: f64,
    },
    /// Regularized softmax regression on synthetic clusters, unconstrained.
    Logistic {
        dim: usize,
        samples: usize,
        classes: usize,
        lambda: f64,
        separation: f64,
    },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Toy { .. } => "toy",
            Self::LinReg { .. } => "linreg",
            Self::Logistic { .. } => "logistic",
        }
    }

    /// Dimension of the decision variable.
    pub fn decision_dim(&self) -> usize {
        match *self {
            Self::Toy { dim, .. } | Self::LinReg { dim, .. } => dim,
            Self::Logistic { dim, classes, .. } => dim * classes,
        }
    }

    pub fn has_optimum(&self) -> bool {
        !matches!(self, Self::Logistic { .. })
    }
}

/// A corruption probability, either absolute or relative to the problem's
/// threshold `cos φ/(1 + cos φ)`: `scale·threshold + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbabilitySpec {
    Fixed(f64),
    Threshold { scale: f64, offset: f64 },
}

impl ProbabilitySpec {
    pub fn threshold_fraction(scale: f64) -> Self {
        Self::Threshold { scale, offset: 0.0 }
    }

    pub fn threshold_offset(offset: f64) -> Self {
        Self::Threshold { scale: 1.0, offset }
    }

    pub fn needs_threshold(&self) -> bool {
        matches!(self, Self::Threshold { .. })
    }

    pub fn resolve(&self, threshold: Option<f64>) -> Result<f64> {
        let p = match *self {
            Self::Fixed(p) => p,
            Self::Threshold { scale, offset } => {
                let thr = threshold.ok_or_else(|| {
                    NsmError::Config(format!("probability '{self}' needs a known threshold"))
                })?;
                scale * thr + offset
            }
        };
        if (0.0..=1.0).contains(&p) {
            Ok(p)
        } else {
            Err(NsmError::Config(format!("probability '{self}' resolves to {p}, outside [0, 1]")))
        }
    }
}

impl fmt::Display for ProbabilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Fixed(p) => write!(f, "{p}"),
            Self::Threshold { scale, offset } => {
                if scale != 1.0 {
                    write!(f, "{scale}*")?;
                }
                f.write_str("thr")?;
                if offset > 0.0 {
                    write!(f, "+{offset}")?;
                } else if offset < 0.0 {
                    write!(f, "-{}", -offset)?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `0.25`, `thr`, `0.5*thr`, `0.5thr`, `thr-0.01`, `thr+0.01`.
impl FromStr for ProbabilitySpec {
    type Err = NsmError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || NsmError::Config(format!("cannot parse probability '{s}'"));
        let t = s.trim();
        let Some(pos) = t.find("thr") else {
            return t.parse::<f64>().map(Self::Fixed).map_err(|_| bad());
        };
        let head = t[..pos].trim();
        let head = head.strip_suffix('*').unwrap_or(head).trim();
        let tail = t[pos + 3..].trim();
        let scale = if head.is_empty() {
            1.0
        } else {
            head.parse::<f64>().map_err(|_| bad())?
        };
        let offset = if tail.is_empty() {
            0.0
        } else if let Some(rest) = tail.strip_prefix('+') {
            rest.trim().parse::<f64>().map_err(|_| bad())?
        } else if let Some(rest) = tail.strip_prefix('-') {
            -rest.trim().parse::<f64>().map_err(|_| bad())?
        } else {
            return Err(bad());
        };
        if !scale.is_finite() || !offset.is_finite() {
            return Err(bad());
        }
        Ok(Self::Threshold { scale, offset })
    }
}

/// Step size rule of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleSpec {
    /// `γ/t` with `γ` from the convergence theorem (needs a diameter and
    /// `cos φ`, so toy and linreg only).
    Theorem,
    InverseT(f64),
    Constant(f64),
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Theorem => f.write_str("theorem"),
            Self::InverseT(g) => write!(f, "inverse-t({g})"),
            Self::Constant(g) => write!(f, "const({g})"),
        }
    }
}

/// Adversary selector, instantiated per problem dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdversarySpec {
    WorstCase,
    Opposite(f64),
    NegateIterate,
    /// The constant vector `value · 𝟙`.
    Fixed(f64),
}

impl AdversarySpec {
    pub fn build(&self, dim: usize) -> Result<Adversary> {
        match *self {
            Self::WorstCase => Ok(Adversary::WorstCaseDirectional),
            Self::Opposite(f) => Adversary::scaled_opposite(f),
            Self::NegateIterate => Ok(Adversary::negate_iterate(dim)),
            Self::Fixed(v) => Ok(Adversary::FixedVector(RealVector::new(vec![v; dim])?)),
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WorstCase => f.write_str("worst-case"),
            Self::Opposite(c) => write!(f, "opposite:{c}"),
            Self::NegateIterate => f.write_str("negate-iterate"),
            Self::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

/// Parses `worst-case`, `opposite[:factor]`, `negate-iterate`, `fixed:value`.
impl FromStr for AdversarySpec {
    type Err = NsmError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || NsmError::Config(format!("unknown adversary '{s}'"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())
        };
        match name {
            "worst-case" | "worstcase" => Ok(Self::WorstCase),
            "opposite" => Ok(Self::Opposite(if arg.is_some() { num(arg)? } else { 15.0 })),
            "negate-iterate" | "negate" => Ok(Self::NegateIterate),
            "fixed" => Ok(Self::Fixed(num(arg)?)),
            _ => Err(bad()),
        }
    }
}

/// Initial iterate before projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartSpec {
    /// The projection of the origin.
    Origin,
    /// `value · 𝟙`.
    Constant(f64),
}

/// Preset size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Linreg `d = 20, N = 200`; logistic `d = 10, N = 300, m = 3`.
    Desk,
    /// Linreg `d = 100, N = 1000`; logistic `d = 784, N = 6000, m = 10`.
    Full,
}

/// Full description of a multi-seed experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub problem: ProblemSpec,
    pub p_values: Vec<ProbabilitySpec>,
    /// Defaults to `max(p, 0.75·threshold)` for the theorem schedule.
    pub q: Option<ProbabilitySpec>,
    pub schedule: ScheduleSpec,
    pub adversary: AdversarySpec,
    pub optimizers: Vec<Method>,
    pub hyper: BaselineHyper,
    pub project_baselines: bool,
    pub iterations: usize,
    pub seeds: Vec<u64>,
    pub start: StartSpec,
    pub metrics: Vec<Metric>,
    /// Recording stride; `None` picks every iteration up to 10⁴ steps and a
    /// proportional stride above.
    pub cadence: Option<usize>,
}

/// Number of seeds presets run by default.
pub const DEFAULT_SEED_COUNT: u64 = 10;

pub const DEFAULT_Q_FRACTION: f64 = 0.75;

impl ExperimentConfig {
    /// Threshold sweep on `x_{d−1}⁴`: `d = 10`, `R = 10`, `γ_t = 200/t`,
    /// `x₁ = 5·𝟙`, adversary `−x_t`.
    pub fn toy() -> Self {
        Self {
            kind: ExperimentKind::Toy,
            problem: ProblemSpec::Toy { dim: 10, bound: 10.0 },
            p_values: vec![
                ProbabilitySpec::Fixed(0.1),
                ProbabilitySpec::Fixed(0.2),
                ProbabilitySpec::threshold_offset(-0.01),
                ProbabilitySpec::threshold_offset(0.0),
                ProbabilitySpec::threshold_offset(0.01),
                ProbabilitySpec::Fixed(0.4),
            ],
            q: None,
            schedule: ScheduleSpec::InverseT(200.0),
            adversary: AdversarySpec::NegateIterate,
            optimizers: vec![Method::Nsm],
            hyper: BaselineHyper::default(),
            project_baselines: true,
            iterations: 10_000,
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            start: StartSpec::Constant(5.0),
            metrics: vec![Metric::DistSqOpt],
            cadence: None,
        }
    }

    /// Least squares with the worst-case adversary, `p = ½/(1+κ)`,
    /// `q = ¾/(1+κ)`, theorem step sizes for every method.
    pub fn linreg(scale: Scale) -> Self {
        let (dim, samples) = match scale {
            Scale::Desk => (20, 200),
            Scale::Full => (100, 1000),
        };
        let radius = 10.0;
        Self {
            kind: ExperimentKind::LinReg,
            problem: ProblemSpec::LinReg {
                dim,
                samples,
                radius,
                noise_sd: radius / 4.0,
                set_radius: 2.0 * radius,
            },
            p_values: vec![ProbabilitySpec::threshold_fraction(0.5)],
            q: Some(ProbabilitySpec::threshold_fraction(DEFAULT_Q_FRACTION)),
            schedule: ScheduleSpec::Theorem,
            adversary: AdversarySpec::WorstCase,
            optimizers: Method::ALL.to_vec(),
            hyper: BaselineHyper::default(),
            project_baselines: true,
            iterations: 10_000,
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            start: StartSpec::Origin,
            metrics: vec![Metric::DistSqOpt],
            cadence: None,
        }
    }

    /// Softmax regression with adversary `−15·g`, `p = 0.25`, `γ_t = 0.1/t`.
    /// The desk preset uses `λ = 0.1`, the full preset `λ = 100`.
    pub fn logistic(scale: Scale) -> Self {
        let (dim, samples, classes, lambda) = match scale {
            Scale::Desk => (10, 300, 3, 0.1),
            Scale::Full => (784, 6000, 10, 100.0),
        };
        Self {
            kind: ExperimentKind::Logistic,
            problem: ProblemSpec::Logistic {
                dim,
                samples,
                classes,
                lambda,
                separation: 10.0,
            },
            p_values: vec![ProbabilitySpec::Fixed(0.25)],
            q: None,
            schedule: ScheduleSpec::InverseT(0.1),
            adversary: AdversarySpec::Opposite(15.0),
            optimizers: Method::ALL.to_vec(),
            hyper: BaselineHyper::default(),
            project_baselines: true,
            iterations: 5_000,
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            start: StartSpec::Origin,
            metrics: vec![Metric::Objective],
            cadence: None,
        }
    }

    /// Checks every field that can be checked without generating data.
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(NsmError::Config(m));
        if self.iterations == 0 {
            return err("T must be >= 1".into());
        }
        if self.seeds.is_empty() {
            return err("at least one seed is required".into());
        }
        if self.p_values.is_empty() {
            return err("at least one corruption probability is required".into());
        }
        if self.optimizers.is_empty() {
            return err("at least one optimizer is required".into());
        }
        if self.metrics.is_empty() || self.metrics.contains(&Metric::Diverged) {
            return err("metrics must be a non-empty subset of dist_sq_opt, objective, corrupt_flag, gamma_t".into());
        }
        if self.cadence == Some(0) {
            return err("cadence must be >= 1".into());
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return err("duplicate seeds".into());
        }
        let mut methods = self.optimizers.clone();
        methods.sort();
        methods.dedup();
        if methods.len() != self.optimizers.len() {
            return err("duplicate optimizers".into());
        }
        match self.problem {
            ProblemSpec::Toy { dim, bound } => {
                if dim == 0 || !(bound > 0.0) {
                    return err(format!("toy needs d >= 1 and R > 0, got d={dim} R={bound}"));
                }
            }
            ProblemSpec::LinReg {
                dim,
                samples,
                radius,
                noise_sd,
                set_radius,
            } => {
                if dim == 0 || samples < dim {
                    return err(format!("linreg needs N >= d >= 1, got N={samples} d={dim}"));
                }
                if !(radius > 0.0) || !(noise_sd >= 0.0) || !(set_radius > 0.0) {
                    return err("linreg needs R > 0, noise_sd >= 0, set radius > 0".into());
                }
            }
            ProblemSpec::Logistic {
                dim,
                samples,
                classes,
                lambda,
                separation,
            } => {
                if dim == 0 || classes == 0 || samples < classes {
                    return err(format!(
                        "logistic needs d >= 1 and N >= m >= 1, got d={dim} N={samples} m={classes}"
                    ));
                }
                if !(lambda >= 0.0) || !(separation >= 0.0) {
                    return err("logistic needs lambda >= 0 and separation >= 0".into());
                }
            }
        }
        let has_threshold = !matches!(self.problem, ProblemSpec::Logistic { .. });
        if !has_threshold {
            if self.schedule == ScheduleSpec::Theorem {
                return err("the theorem schedule needs a diameter and cos phi; logistic is unconstrained".into());
            }
            if let Some(p) = self.p_values.iter().chain(self.q.iter()).find(|p| p.needs_threshold()) {
                return err(format!("probability '{p}' needs a threshold, which logistic does not have"));
            }
            if self.metrics.contains(&Metric::DistSqOpt) {
                return err("dist_sq_opt needs a known optimum; logistic has none".into());
            }
            if self.adversary == AdversarySpec::WorstCase {
                return err("the worst-case adversary needs a known optimum".into());
            }
        }
        for p in &self.p_values {
            if let ProbabilitySpec::Fixed(v) = p {
                if !(0.0..=1.0).contains(v) {
                    return err(format!("p = {v} is outside [0, 1]"));
                }
            }
        }
        match self.schedule {
            ScheduleSpec::InverseT(g) | ScheduleSpec::Constant(g) if !(g > 0.0 && g.is_finite()) => {
                return err(format!("step size must be positive, got {g}"));
            }
            _ => {}
        }
        let h = &self.hyper;
        for (name, v) in [
            ("beta1", h.beta1),
            ("beta2", h.beta2),
            ("rms_decay", h.rms_decay),
            ("momentum", h.momentum),
        ] {
            if !(0.0..1.0).contains(&v) {
                return err(format!("{name} must be in [0, 1), got {v}"));
            }
        }
        if !(h.eps > 0.0 && h.eps.is_finite()) {
            return err(format!("eps must be positive, got {}", h.eps));
        }
        if let AdversarySpec::Opposite(f) = self.adversary {
            if f == 0.0 || !f.is_finite() {
                return err("opposite factor must be finite and non-zero".into());
            }
        }
        Ok(())
    }

    /// One-line summary for the stderr echo.
    pub fn describe(&self) -> String {
        let ps: Vec<String> = self.p_values.iter().map(|p| p.to_string()).collect();
        let ms: Vec<&str> = self.optimizers.iter().map(Method::name).collect();
        format!(
            "experiment={} problem={:?} p=[{}] q={} schedule={} adversary={} optimizers=[{}] T={} seeds={} project_baselines={}",
            self.kind.name(),
            self.problem,
            ps.join(","),
            self.q.map_or("default".to_string(), |q| q.to_string()),
            self.schedule,
            self.adversary,
            ms.join(","),
            self.iterations,
            self.seeds.len(),
            self.project_baselines,
        )
    }
}
