use super::methods::{BaselineHyper, Method, OptimizerState};
use super::schedule::StepSchedule;
use crate::corruption::{CorruptionChannel, FeedbackContext};
use crate::error::{check_dim, NsmError, Result};
use crate::geometry::{all_finite, distance_sq_slice, FeasibleSet, RealVector};
use crate::problems::Objective;

/// Iterations above which metrics are thinned out.
pub const FULL_CADENCE_LIMIT: usize = 10_000;

/// Recording stride for a run of `iterations` steps.
pub fn default_cadence(iterations: usize) -> usize {
    if iterations <= FULL_CADENCE_LIMIT {
        1
    } else {
        iterations.div_ceil(FULL_CADENCE_LIMIT)
    }
}

/// Which per-iteration metrics to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MetricSet {
    pub dist_sq_opt: bool,
    pub objective: bool,
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub method: Method,
    pub hyper: BaselineHyper,
    pub schedule: StepSchedule,
    /// Number of updates `T`.
    pub iterations: usize,
    pub metrics: MetricSet,
    /// Record every `cadence`-th iterate (plus the last one).
    pub cadence: usize,
    /// Project baseline iterates onto the feasible set.
    pub project_baselines: bool,
    /// Scale `R` handed to adversaries that need one.
    pub adversary_radius: Option<f64>,
}

impl RunSettings {
    pub fn new(method: Method, schedule: StepSchedule, iterations: usize) -> Self {
        Self {
            method,
            hyper: BaselineHyper::default(),
            schedule,
            iterations,
            metrics: MetricSet {
                dist_sq_opt: true,
                objective: false,
            },
            cadence: default_cadence(iterations),
            project_baselines: true,
            adversary_radius: None,
        }
    }
}

/// State recorded for iterate `x_iter`. `corrupt` and `gamma` describe the
/// update that produced it (`false` and `0` for the initial point).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub iter: usize,
    pub dist_sq_opt: Option<f64>,
    pub objective: Option<f64>,
    pub corrupt: bool,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Iteration at which a non-finite value ended the run.
    pub diverged_at: Option<usize>,
    /// Last finite iterate.
    pub final_x: RealVector,
    pub corruptions: u64,
}

impl Trajectory {
    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }

    pub fn first(&self) -> Option<&TrajectoryPoint> {
        self.points.first()
    }
}

fn measure(
    objective: &dyn Objective,
    x: &[f64],
    metrics: MetricSet,
    iter: usize,
    corrupt: bool,
    gamma: f64,
) -> Option<TrajectoryPoint> {
    let dist_sq_opt = if metrics.dist_sq_opt {
        objective
            .nearest_optimum(x)
            .map(|opt| distance_sq_slice(x, opt.as_slice()))
    } else {
        None
    };
    let value = metrics.objective.then(|| objective.value(x));
    let finite = dist_sq_opt.is_none_or(f64::is_finite) && value.is_none_or(f64::is_finite);
    finite.then_some(TrajectoryPoint {
        iter,
        dist_sq_opt,
        objective: value,
        corrupt,
        gamma,
    })
}

/// Runs `settings.iterations` updates from `x1` (projected onto `set` first).
///
/// A non-finite gradient, iterate, or metric ends the run early with
/// `diverged_at` set; this is a recorded outcome rather than an error.
pub fn run(
    objective: &dyn Objective,
    set: &FeasibleSet,
    channel: &mut CorruptionChannel,
    x1: &RealVector,
    settings: &RunSettings,
) -> Result<Trajectory> {
    check_dim(objective.dim(), x1.dim())?;
    check_dim(objective.dim(), set.dim())?;
    if settings.iterations == 0 {
        return Err(NsmError::InvalidArgument("need T >= 1".into()));
    }
    if settings.cadence == 0 {
        return Err(NsmError::InvalidArgument("cadence must be >= 1".into()));
    }
    channel.adversary().validate(objective.dim())?;
    let start = set.project(x1)?;
    let mut state = OptimizerState::new(settings.method, start.clone());
    let t_max = settings.iterations;
    let mut points = Vec::with_capacity(t_max / settings.cadence + 2);
    let mut last_finite = start;
    let mut gradient = vec![0.0; objective.dim()];

    let record = |iter: usize| iter == t_max + 1 || (iter - 1).is_multiple_of(settings.cadence);

    let finish = |points, diverged_at, x: RealVector, ch: &CorruptionChannel| Trajectory {
        points,
        diverged_at,
        final_x: x,
        corruptions: ch.corruptions_made(),
    };

    match measure(objective, state.x(), settings.metrics, 1, false, 0.0) {
        Some(p) => points.push(p),
        None => return Ok(finish(points, Some(1), last_finite, channel)),
    }

    for t in 1..=t_max {
        let gamma = settings.schedule.gamma(t);
        objective.subgradient_into(state.x(), &mut gradient);
        if !all_finite(&gradient) {
            return Ok(finish(points, Some(t), last_finite, channel));
        }
        let ctx = FeedbackContext {
            x: state.x(),
            gradient: &gradient,
            gamma,
            optimum: objective.nearest_optimum(state.x()).map(RealVector::as_slice),
            radius: settings.adversary_radius,
        };
        let feedback = channel.next_feedback(&ctx)?;
        let stepped = state.step(&feedback.h, gamma, set, settings.project_baselines, &settings.hyper);
        match stepped {
            Ok(()) => {}
            Err(NsmError::NonFinite { .. }) => {
                return Ok(finish(points, Some(t + 1), last_finite, channel));
            }
            Err(e) => return Err(e),
        }
        if !all_finite(state.x()) {
            return Ok(finish(points, Some(t + 1), last_finite, channel));
        }
        last_finite = RealVector::from_vec_unchecked(state.x().to_vec());
        let iter = t + 1;
        if record(iter) {
            match measure(objective, state.x(), settings.metrics, iter, feedback.corrupt, gamma) {
                Some(p) => points.push(p),
                None => return Ok(finish(points, Some(iter), last_finite, channel)),
            }
        }
    }
    Ok(finish(points, None, last_finite, channel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::methods::nsm_step_in_place;
    use crate::corruption::Adversary;
    use crate::problems::{synth_linreg, LeastSquares, ToyQuartic};
    use rand::SeedableRng;
    use crate::geometry::DEFAULT_ZERO_TOL;
    use rand_chacha::ChaCha8Rng;

    fn toy_setup(d: usize, p: f64, seed: u64) -> (ToyQuartic, FeasibleSet, CorruptionChannel) {
        (
            ToyQuartic::new(d),
            FeasibleSet::diag_box(10.0, d).unwrap(),
            CorruptionChannel::new(p, Adversary::negate_iterate(d), seed).unwrap(),
        )
    }

    #[test]
    fn three_step_hand_trace() {
        // p = 0, d = 2: each step moves the diagonal value by −γ_t/d.
        let (f, set, mut ch) = toy_setup(2, 0.0, 0);
        let s = RunSettings::new(Method::Nsm, StepSchedule::inverse_t(1.0).unwrap(), 3);
        let traj = run(&f, &set, &mut ch, &RealVector::filled(2, 5.0), &s).unwrap();
        let expect = [5.0, 4.5, 4.25, 4.25 - 1.0 / 6.0];
        assert_eq!(traj.points.len(), 4);
        for (p, e) in traj.points.iter().zip(expect) {
            assert!((p.dist_sq_opt.unwrap() - 2.0 * e * e).abs() < 1e-12);
        }
        assert!((traj.final_x[0] - expect[3]).abs() < 1e-15);
        assert_eq!(traj.points[2].gamma, 0.5);
    }

    #[test]
    fn single_iteration_has_two_records() {
        let (f, set, mut ch) = toy_setup(3, 0.5, 1);
        let s = RunSettings::new(Method::Nsm, StepSchedule::inverse_t(1.0).unwrap(), 1);
        let traj = run(&f, &set, &mut ch, &RealVector::filled(3, 1.0), &s).unwrap();
        assert_eq!(traj.points.len(), 2);
        assert_eq!(traj.points[0].iter, 1);
        assert_eq!(traj.points[1].iter, 2);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let go = |seed| {
            let (f, set, mut ch) = toy_setup(10, 0.3, seed);
            let s = RunSettings::new(Method::Nsm, StepSchedule::inverse_t(200.0).unwrap(), 500);
            run(&f, &set, &mut ch, &RealVector::filled(10, 5.0), &s).unwrap()
        };
        assert_eq!(go(5), go(5));
        assert_ne!(go(5), go(6));
    }

    #[test]
    fn infeasible_start_is_projected() {
        let (f, set, mut ch) = toy_setup(2, 0.0, 0);
        let s = RunSettings::new(Method::Nsm, StepSchedule::inverse_t(1.0).unwrap(), 1);
        let traj = run(&f, &set, &mut ch, &RealVector::new(vec![30.0, 0.0]).unwrap(), &s).unwrap();
        assert_eq!(traj.points[0].dist_sq_opt, Some(2.0 * 100.0));
    }

    #[test]
    fn cadence_thins_long_runs() {
        assert_eq!(default_cadence(10_000), 1);
        assert_eq!(default_cadence(10_001), 2);
        assert_eq!(default_cadence(25_000), 3);
        let (f, set, mut ch) = toy_setup(2, 0.1, 3);
        let mut s = RunSettings::new(Method::Nsm, StepSchedule::inverse_t(1.0).unwrap(), 10);
        s.cadence = 4;
        let traj = run(&f, &set, &mut ch, &RealVector::filled(2, 1.0), &s).unwrap();
        let iters: Vec<_> = traj.points.iter().map(|p| p.iter).collect();
        assert_eq!(iters, vec![1, 5, 9, 11]);
    }

    #[test]
    fn unprojected_gd_divergence_is_recorded() {
        // Quartic with a huge constant step blows up without projection.
        let (f, set, mut ch) = toy_setup(1, 0.0, 0);
        let mut s = RunSettings::new(Method::Gd, StepSchedule::constant(10.0).unwrap(), 100);
        s.project_baselines = false;
        let free = FeasibleSet::unconstrained(1, None).unwrap();
        let traj = run(&f, &free, &mut ch, &RealVector::filled(1, 5.0), &s).unwrap();
        let at = traj.diverged_at.expect("should diverge");
        assert!(at <= 10);
        assert!(traj.final_x[0].is_finite());
        assert!(traj.points.last().unwrap().iter <= at);
        // The projected variant stays in the box.
        let traj = run(&f, &set, &mut ch, &RealVector::filled(1, 5.0), &RunSettings {
            project_baselines: true,
            ..s
        })
        .unwrap();
        assert!(traj.diverged_at.is_none());
    }

    #[test]
    fn nsm_stays_feasible_and_steps_exactly_gamma() {
        let d = 10;
        let set = FeasibleSet::diag_box(10.0, d).unwrap();
        let f = ToyQuartic::new(d);
        let mut ch = CorruptionChannel::new(0.3, Adversary::negate_iterate(d), 9).unwrap();
        let schedule = StepSchedule::inverse_t(200.0).unwrap();
        let mut x = set.project(&RealVector::filled(d, 5.0)).unwrap().into_vec();
        for t in 1..=2000 {
            let g = f.subgradient(&x);
            let ctx = FeedbackContext {
                x: &x,
                gradient: &g,
                gamma: schedule.gamma(t),
                optimum: None,
                radius: None,
            };
            let fb = ch.next_feedback(&ctx).unwrap();
            let len = nsm_step_in_place(&mut x, &fb.h, schedule.gamma(t), &set, DEFAULT_ZERO_TOL).unwrap();
            if len > 0.0 {
                assert!((len - schedule.gamma(t)).abs() <= 1e-12 * schedule.gamma(t).max(1.0));
            }
            assert!(set.contains(&x, 1e-12));
        }
    }

    proptest::proptest! {
        #[test]
        fn clean_toy_step_never_increases_distance_when_step_is_small(
            d in 1usize..40,
            s in -10.0f64..10.0,
            frac in 0.0f64..1.0,
        ) {
            // Whenever γ ≤ √d·|x₀| an uncorrupted NSM step on the toy cannot
            // move the iterate away from the origin.
            let gamma = frac * (d as f64).sqrt() * s.abs();
            proptest::prop_assume!(gamma > 0.0);
            let f = ToyQuartic::new(d);
            let set = FeasibleSet::diag_box(10.0, d).unwrap();
            let mut x = vec![s; d];
            let g = f.subgradient(&x);
            nsm_step_in_place(&mut x, &g, gamma, &set, DEFAULT_ZERO_TOL).unwrap();
            proptest::prop_assert!(x[0].abs() <= s.abs() + 1e-12);
        }
    }

    #[test]
    fn clean_gd_on_least_squares_descends_monotonically() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = synth_linreg(8, 60, 10.0, 2.5, &mut rng).unwrap();
        let beta = data.smoothness();
        let f = LeastSquares::new(data).unwrap();
        let set = FeasibleSet::ball(RealVector::zeros(8), 20.0).unwrap();
        let mut ch = CorruptionChannel::new(0.0, Adversary::WorstCaseDirectional, 0).unwrap();
        let s = RunSettings::new(Method::Gd, StepSchedule::constant(1.0 / beta).unwrap(), 300);
        let traj = run(&f, &set, &mut ch, &RealVector::zeros(8), &s).unwrap();
        for w in traj.points.windows(2) {
            assert!(w[1].dist_sq_opt.unwrap() <= w[0].dist_sq_opt.unwrap() + 1e-12);
        }
        assert!(traj.last().unwrap().dist_sq_opt.unwrap() < 1e-3 * traj.first().unwrap().dist_sq_opt.unwrap());
    }
}
