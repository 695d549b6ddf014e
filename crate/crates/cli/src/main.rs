//! `nsm`: run corruption experiments and invariant suites.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nsm_core::harness::{
    aggregate, write_csv, write_rows, AdversarySpec, ExperimentConfig, ExperimentKind, Metric, ProbabilitySpec,
    ProblemSpec, Scale, ScheduleSpec, StartSpec, Statistic,
};
use nsm_core::optimizers::Method;
use nsm_core::{verify, NsmError, Result};

#[derive(Parser)]
#[command(name = "nsm", version, about = "Normalized subgradient method under probabilistic corruption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold sweep on the quartic toy problem.
    Toy(ExperimentArgs),
    /// Least squares on synthetic data with the worst-case adversary.
    Linreg(ExperimentArgs),
    /// Softmax regression on synthetic clusters.
    Logistic(ExperimentArgs),
    /// Any problem with every setting taken from flags.
    Custom(CustomArgs),
    /// Run the invariant suites.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Theorem,
    InverseT,
    Const,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregateArg {
    None,
    Mean,
    Median,
    Last,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Toy,
    Linreg,
    Logistic,
}

#[derive(Args)]
struct CustomArgs {
    /// Problem family.
    #[arg(long)]
    problem: ProblemArg,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Corruption probabilities: numbers or threshold expressions such as
    /// `thr`, `0.5*thr`, `thr-0.01`. Comma separated or repeated.
    #[arg(long = "p", value_delimiter = ',')]
    p: Vec<String>,
    /// Design probability for the theorem schedule.
    #[arg(long)]
    q: Option<String>,
    /// Number of iterations.
    #[arg(long = "T")]
    iterations: Option<usize>,
    /// Seed count `N` (seeds 0..N) or a comma-separated seed list.
    #[arg(long)]
    seeds: Option<String>,
    /// Step size scale for `inverse-t` (γ/t) or `const`.
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleArg>,
    /// `worst-case`, `opposite[:factor]`, `negate-iterate` or `fixed:value`.
    #[arg(long)]
    adversary: Option<String>,
    /// Comma list from nsm, gd, nag, adam, rmsprop, amsgrad.
    #[arg(long, value_delimiter = ',')]
    optimizers: Vec<String>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-seed statistic written instead of raw records.
    #[arg(long, value_enum, default_value = "none")]
    aggregate: AggregateArg,
    /// Preset size for linreg and logistic.
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
    /// Comma list from dist_sq_opt, objective, corrupt_flag, gamma_t.
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<String>,
    /// Record every k-th iterate.
    #[arg(long)]
    cadence: Option<usize>,
    /// Problem dimension d.
    #[arg(long)]
    d: Option<usize>,
    /// Sample count N.
    #[arg(long = "N")]
    samples: Option<usize>,
    /// Class count m.
    #[arg(long)]
    m: Option<usize>,
    /// Radius R: box bound for toy, weight radius and adversary scale for linreg.
    #[arg(long = "R")]
    radius: Option<f64>,
    /// Radius of the linreg feasible ball.
    #[arg(long)]
    set_radius: Option<f64>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
    /// Initial iterate `value·𝟙` before projection.
    #[arg(long)]
    x1: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    rms_decay: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Let baseline iterates leave the feasible set.
    #[arg(long)]
    no_project_baselines: bool,
}

fn config_err(msg: impl Into<String>) -> NsmError {
    NsmError::Config(msg.into())
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || config_err(format!("cannot parse --seeds '{s}'"));
    if s.contains(',') {
        s.split(',').map(|t| t.trim().parse::<u64>().map_err(|_| bad())).collect()
    } else {
        let n = s.trim().parse::<u64>().map_err(|_| bad())?;
        Ok((0..n).collect())
    }
}

fn apply_problem_flags(problem: &mut ProblemSpec, a: &ExperimentArgs) -> Result<()> {
    let unused = |flag: &str, name: &str| config_err(format!("--{flag} does not apply to {name}"));
    match problem {
        ProblemSpec::Toy { dim, bound } => {
            for (flag, set) in [
                ("N", a.samples.is_some()),
                ("m", a.m.is_some()),
                ("set-radius", a.set_radius.is_some()),
                ("noise-sd", a.noise_sd.is_some()),
                ("lambda", a.lambda.is_some()),
                ("separation", a.separation.is_some()),
            ] {
                if set {
                    return Err(unused(flag, "toy"));
                }
            }
            *dim = a.d.unwrap_or(*dim);
            *bound = a.radius.unwrap_or(*bound);
        }
        ProblemSpec::LinReg {
            dim,
            samples,
            radius,
            noise_sd,
            set_radius,
        } => {
            for (flag, set) in [
                ("m", a.m.is_some()),
                ("lambda", a.lambda.is_some()),
                ("separation", a.separation.is_some()),
            ] {
                if set {
                    return Err(unused(flag, "linreg"));
                }
            }
            *dim = a.d.unwrap_or(*dim);
            *samples = a.samples.unwrap_or(*samples);
            if let Some(r) = a.radius {
                *radius = r;
                *noise_sd = r / 4.0;
                *set_radius = 2.0 * r;
            }
            *noise_sd = a.noise_sd.unwrap_or(*noise_sd);
            *set_radius = a.set_radius.unwrap_or(*set_radius);
        }
        ProblemSpec::Logistic {
            dim,
            samples,
            classes,
            lambda,
            separation,
        } => {
            for (flag, set) in [
                ("R", a.radius.is_some()),
                ("set-radius", a.set_radius.is_some()),
                ("noise-sd", a.noise_sd.is_some()),
            ] {
                if set {
                    return Err(unused(flag, "logistic"));
                }
            }
            *dim = a.d.unwrap_or(*dim);
            *samples = a.samples.unwrap_or(*samples);
            *classes = a.m.unwrap_or(*classes);
            *lambda = a.lambda.unwrap_or(*lambda);
            *separation = a.separation.unwrap_or(*separation);
        }
    }
    Ok(())
}

fn build_config(mut cfg: ExperimentConfig, a: &ExperimentArgs) -> Result<ExperimentConfig> {
    apply_problem_flags(&mut cfg.problem, a)?;
    if !a.p.is_empty() {
        cfg.p_values = a.p.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if let Some(q) = &a.q {
        cfg.q = Some(q.parse::<ProbabilitySpec>()?);
    }
    if let Some(t) = a.iterations {
        cfg.iterations = t;
    }
    if let Some(s) = &a.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    let preset_gamma = match cfg.schedule {
        ScheduleSpec::InverseT(g) | ScheduleSpec::Constant(g) => Some(g),
        ScheduleSpec::Theorem => None,
    };
    cfg.schedule = match (a.schedule, a.gamma0) {
        (Some(ScheduleArg::Theorem), Some(_)) => {
            return Err(config_err("--gamma0 conflicts with --schedule theorem"));
        }
        (Some(ScheduleArg::Theorem), None) => ScheduleSpec::Theorem,
        (Some(ScheduleArg::InverseT), g) | (None, g @ Some(_)) => ScheduleSpec::InverseT(
            g.or(preset_gamma)
                .ok_or_else(|| config_err("--schedule inverse-t needs --gamma0"))?,
        ),
        (Some(ScheduleArg::Const), g) => ScheduleSpec::Constant(
            g.or(preset_gamma).ok_or_else(|| config_err("--schedule const needs --gamma0"))?,
        ),
        (None, None) => cfg.schedule,
    };
    if let Some(adv) = &a.adversary {
        cfg.adversary = adv.parse::<AdversarySpec>()?;
    }
    if !a.optimizers.is_empty() {
        cfg.optimizers = a.optimizers.iter().map(|s| s.parse::<Method>()).collect::<Result<_>>()?;
    }
    if !a.metrics.is_empty() {
        cfg.metrics = a.metrics.iter().map(|s| s.parse::<Metric>()).collect::<Result<_>>()?;
    }
    if a.cadence.is_some() {
        cfg.cadence = a.cadence;
    }
    if let Some(v) = a.x1 {
        cfg.start = StartSpec::Constant(v);
    }
    let h = &mut cfg.hyper;
    h.beta1 = a.beta1.unwrap_or(h.beta1);
    h.beta2 = a.beta2.unwrap_or(h.beta2);
    h.rms_decay = a.rms_decay.unwrap_or(h.rms_decay);
    h.momentum = a.momentum.unwrap_or(h.momentum);
    h.eps = a.eps.unwrap_or(h.eps);
    if a.no_project_baselines {
        cfg.project_baselines = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scale(a: &ExperimentArgs) -> Scale {
    match a.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Full => Scale::Full,
    }
}

fn run(cfg: &ExperimentConfig, a: &ExperimentArgs) -> Result<()> {
    let plan = nsm_core::harness::plan_experiment(cfg)?;
    let mut err = io::stderr().lock();
    for line in &plan.echo {
        let _ = writeln!(err, "# {line}");
    }
    drop(err);
    let outcomes = nsm_core::harness::execute(&plan)?;
    let diverged = outcomes.iter().filter(|o| o.trajectory.diverged_at.is_some()).count();
    if diverged > 0 {
        eprintln!("# {diverged} of {} runs diverged", outcomes.len());
    }
    let records = nsm_core::harness::to_records(&outcomes, &cfg.metrics);
    let statistic = match a.aggregate {
        AggregateArg::None => None,
        AggregateArg::Mean => Some(Statistic::Mean),
        AggregateArg::Median => Some(Statistic::Median),
        AggregateArg::Last => Some(Statistic::Last),
    };
    let stdout_err = |source| NsmError::Io {
        path: "<stdout>".into(),
        source,
    };
    match (statistic, &a.out) {
        (None, Some(path)) => write_csv(&records, path),
        (None, None) => write_rows(io::stdout().lock(), &records),
        (Some(stat), Some(path)) => write_csv(&aggregate(&records, stat)?, path),
        (Some(stat), None) => write_rows(io::stdout().lock(), &aggregate(&records, stat)?),
    }?;
    io::stdout().flush().map_err(stdout_err)
}

fn run_verify() -> bool {
    let results = verify::run_all();
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    results.iter().all(|r| r.passed)
}

fn dispatch(cli: Cli) -> Result<bool> {
    let (base, args) = match &cli.command {
        Command::Verify => return Ok(run_verify()),
        Command::Toy(a) => (ExperimentConfig::toy(), a),
        Command::Linreg(a) => (ExperimentConfig::linreg(scale(a)), a),
        Command::Logistic(a) => (ExperimentConfig::logistic(scale(a)), a),
        Command::Custom(c) => {
            let mut base = match c.problem {
                ProblemArg::Toy => ExperimentConfig::toy(),
                ProblemArg::Linreg => ExperimentConfig::linreg(scale(&c.common)),
                ProblemArg::Logistic => ExperimentConfig::logistic(scale(&c.common)),
            };
            base.kind = ExperimentKind::Custom;
            (base, &c.common)
        }
    };
    let cfg = build_config(base, args)?;
    run(&cfg, args)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
