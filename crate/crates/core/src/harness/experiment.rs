use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{strongly_convex_gamma, theorem_gamma, threshold_probability};
use crate::corruption::{Adversary, CorruptionChannel};
use crate::error::{NsmError, Result};
use crate::geometry::{FeasibleSet, RealVector};
use crate::optimizers::{default_cadence, run, Method, MetricSet, RunSettings, StepSchedule, Trajectory};
use crate::problems::{synth_classes, synth_linreg, LeastSquares, Logistic, Objective, ToyQuartic};

use super::config::{
    ExperimentConfig, ProbabilitySpec, ProblemSpec, ScheduleSpec, StartSpec, DEFAULT_Q_FRACTION,
};
use super::records::{sort_records, Metric, RunRecord};
use super::seed::{derive_seed, STREAM_CHANNEL, STREAM_DATA};

/// A generated problem shared by every run of one base seed.
pub struct ProblemInstance {
    pub objective: Arc<dyn Objective>,
    pub set: FeasibleSet,
    pub start: RealVector,
    /// Acute angle constant, when known.
    pub cos_phi: Option<f64>,
    /// Condition number `σmax/σmin` for least squares.
    pub kappa: Option<f64>,
    /// Scale handed to the worst-case adversary.
    pub adversary_radius: Option<f64>,
}

impl ProblemInstance {
    /// `cos φ/(1 + cos φ)`, when `cos φ` is known.
    pub fn threshold(&self) -> Option<f64> {
        self.cos_phi.and_then(|c| threshold_probability(c).ok())
    }
}

/// Builds the problem for `base_seed`; data is drawn from the data stream.
pub fn build_instance(problem: &ProblemSpec, start: StartSpec, base_seed: u64) -> Result<ProblemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base_seed, STREAM_DATA, 0));
    let dim = problem.decision_dim();
    let start = match start {
        StartSpec::Origin => RealVector::zeros(dim),
        StartSpec::Constant(v) => RealVector::new(vec![v; dim])?,
    };
    match *problem {
        ProblemSpec::Toy { dim, bound } => Ok(ProblemInstance {
            objective: Arc::new(ToyQuartic::new(dim)),
            set: FeasibleSet::diag_box(bound, dim)?,
            start,
            cos_phi: Some(1.0 / (dim as f64).sqrt()),
            kappa: None,
            adversary_radius: Some(bound),
        }),
        ProblemSpec::LinReg {
            dim,
            samples,
            radius,
            noise_sd,
            set_radius,
        } => {
            let data = synth_linreg(dim, samples, radius, noise_sd, &mut rng)?;
            let kappa = data.kappa();
            Ok(ProblemInstance {
                objective: Arc::new(LeastSquares::new(data)?),
                set: FeasibleSet::ball(RealVector::zeros(dim), set_radius)?,
                start,
                cos_phi: Some(1.0 / kappa),
                kappa: Some(kappa),
                adversary_radius: Some(radius),
            })
        }
        ProblemSpec::Logistic {
            dim,
            samples,
            classes,
            lambda,
            separation,
        } => {
            let data = synth_classes(dim, samples, classes, separation, &mut rng)?.with_lambda(lambda)?;
            Ok(ProblemInstance {
                objective: Arc::new(Logistic::new(data)),
                set: FeasibleSet::unconstrained(dim * classes, None)?,
                start,
                cos_phi: None,
                kappa: None,
                adversary_radius: None,
            })
        }
    }
}

/// One fully resolved optimizer run.
pub struct RunSpec {
    pub run_id: String,
    pub p_label: String,
    pub p: f64,
    /// Design probability behind a theorem schedule.
    pub q: Option<f64>,
    pub seed: u64,
    pub method: Method,
    pub schedule: StepSchedule,
    pub channel_seed: u64,
    pub adversary: Adversary,
    pub instance: Arc<ProblemInstance>,
}

/// Every run of an experiment, resolved and validated, plus the config echo.
pub struct ExperimentPlan {
    pub config: ExperimentConfig,
    pub runs: Vec<RunSpec>,
    pub cadence: usize,
    pub echo: Vec<String>,
}

pub fn run_id(config: &ExperimentConfig, p: &ProbabilitySpec) -> String {
    format!("{}/p={p}", config.kind.name())
}

/// Validates the config, generates all data and resolves every probability
/// and step size. Any error here aborts before a single run starts.
pub fn plan_experiment(config: &ExperimentConfig) -> Result<ExperimentPlan> {
    config.validate()?;
    let cadence = config.cadence.unwrap_or_else(|| default_cadence(config.iterations));
    let mut echo = vec![config.describe()];
    echo.push(format!(
        "cadence={cadence} metrics=[{}]",
        config.metrics.iter().map(Metric::name).collect::<Vec<_>>().join(",")
    ));
    let adversary = config.adversary.build(config.problem.decision_dim())?;
    let mut runs = Vec::new();
    for &seed in &config.seeds {
        let instance = Arc::new(build_instance(&config.problem, config.start, seed)?);
        let threshold = instance.threshold();
        for p_spec in &config.p_values {
            let p = p_spec.resolve(threshold)?;
            let (schedule, q) = resolve_schedule(config, &instance, p)?;
            let mut line = format!("seed={seed} p={p_spec} resolved_p={p}");
            if let Some(thr) = threshold {
                line.push_str(&format!(" threshold={thr}"));
            }
            if let Some(k) = instance.kappa {
                line.push_str(&format!(" kappa={k}"));
            }
            if let Some(q) = q {
                line.push_str(&format!(" q={q}"));
            }
            if let Some(d) = instance.set.diameter() {
                line.push_str(&format!(" diameter={d}"));
            }
            line.push_str(&format!(" gamma0={}", schedule.base()));
            echo.push(line);
            let channel_seed = derive_seed(seed, STREAM_CHANNEL, p.to_bits());
            for &method in &config.optimizers {
                runs.push(RunSpec {
                    run_id: run_id(config, p_spec),
                    p_label: p_spec.to_string(),
                    p,
                    q,
                    seed,
                    method,
                    schedule,
                    channel_seed,
                    adversary: adversary.clone(),
                    instance: Arc::clone(&instance),
                });
            }
        }
    }
    Ok(ExperimentPlan {
        config: config.clone(),
        runs,
        cadence,
        echo,
    })
}

fn resolve_schedule(
    config: &ExperimentConfig,
    instance: &ProblemInstance,
    p: f64,
) -> Result<(StepSchedule, Option<f64>)> {
    match config.schedule {
        ScheduleSpec::InverseT(g) => Ok((StepSchedule::inverse_t(g)?, None)),
        ScheduleSpec::Constant(g) => Ok((StepSchedule::constant(g)?, None)),
        ScheduleSpec::Theorem => {
            let missing = || NsmError::Config("the theorem schedule needs cos phi and a diameter".into());
            let threshold = instance.threshold().ok_or_else(missing)?;
            let diameter = instance.set.diameter().ok_or_else(missing)?;
            let q = match config.q {
                Some(q) => q.resolve(Some(threshold))?,
                None => p.max(DEFAULT_Q_FRACTION * threshold),
            };
            if p > q {
                return Err(NsmError::Config(format!("p = {p} exceeds the design probability q = {q}")));
            }
            let gamma = match instance.kappa {
                Some(kappa) => strongly_convex_gamma(diameter, kappa, q)?,
                None => theorem_gamma(diameter, instance.cos_phi.ok_or_else(missing)?, q)?,
            };
            Ok((StepSchedule::inverse_t(gamma)?, Some(q)))
        }
    }
}

/// Result of one run.
pub struct RunOutcome {
    pub run_id: String,
    pub p_label: String,
    pub p: f64,
    pub seed: u64,
    pub method: Method,
    pub gamma0: f64,
    pub trajectory: Trajectory,
}

fn metric_set(metrics: &[Metric]) -> MetricSet {
    MetricSet {
        dist_sq_opt: metrics.contains(&Metric::DistSqOpt),
        objective: metrics.contains(&Metric::Objective),
    }
}

/// Executes all runs in parallel; outcomes come back in plan order.
pub fn execute(plan: &ExperimentPlan) -> Result<Vec<RunOutcome>> {
    let metrics = metric_set(&plan.config.metrics);
    plan.runs
        .par_iter()
        .map(|spec| {
            let mut channel = CorruptionChannel::new(spec.p, spec.adversary.clone(), spec.channel_seed)?;
            let settings = RunSettings {
                method: spec.method,
                hyper: plan.config.hyper,
                schedule: spec.schedule,
                iterations: plan.config.iterations,
                metrics,
                cadence: plan.cadence,
                project_baselines: plan.config.project_baselines,
                adversary_radius: spec.instance.adversary_radius,
            };
            let inst = &spec.instance;
            let trajectory = run(inst.objective.as_ref(), &inst.set, &mut channel, &inst.start, &settings)?;
            Ok(RunOutcome {
                run_id: spec.run_id.clone(),
                p_label: spec.p_label.clone(),
                p: spec.p,
                seed: spec.seed,
                method: spec.method,
                gamma0: spec.schedule.base(),
                trajectory,
            })
        })
        .collect()
}

/// Flattens outcomes into sorted records. A diverged run ends with a
/// `diverged` row of value 1 at the iteration where it stopped.
pub fn to_records(outcomes: &[RunOutcome], metrics: &[Metric]) -> Vec<RunRecord> {
    let mut records = Vec::new();
    for o in outcomes {
        let row = |iter, metric, value| RunRecord {
            run_id: o.run_id.clone(),
            seed: o.seed,
            method: o.method.name().to_string(),
            iter,
            metric,
            value,
        };
        for point in &o.trajectory.points {
            for &metric in metrics {
                let value = match metric {
                    Metric::DistSqOpt => point.dist_sq_opt,
                    Metric::Objective => point.objective,
                    Metric::CorruptFlag => Some(if point.corrupt { 1.0 } else { 0.0 }),
                    Metric::GammaT => Some(point.gamma),
                    Metric::Diverged => None,
                };
                if let Some(v) = value {
                    records.push(row(point.iter, metric, v));
                }
            }
        }
        if let Some(at) = o.trajectory.diverged_at {
            records.push(row(at, Metric::Diverged, 1.0));
        }
    }
    sort_records(&mut records);
    records
}

/// Plan, execute, and flatten.
pub struct ExperimentOutput {
    pub echo: Vec<String>,
    pub outcomes: Vec<RunOutcome>,
    pub records: Vec<RunRecord>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let plan = plan_experiment(config)?;
    let outcomes = execute(&plan)?;
    let records = to_records(&outcomes, &config.metrics);
    Ok(ExperimentOutput {
        echo: plan.echo,
        outcomes,
        records,
    })
}
