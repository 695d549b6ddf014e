//! Invariant suites run by `nsm verify` and the acceptance tests. Every
//! suite is seeded and deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analysis::{
    finite_diff_check, probe_curvature, sample_feasible, strongly_convex_gamma, theorem_gamma,
};
use crate::corruption::{Adversary, CorruptionChannel};
use crate::error::Result;
use crate::geometry::{distance_sq, dot, norm, normalize, FeasibleSet, RealVector, DEFAULT_ZERO_TOL};
use crate::harness::{run_experiment, to_csv_bytes, ExperimentConfig, Metric};
use crate::problems::{synth_classes, synth_linreg, LeastSquares, Logistic, Objective, ToyQuartic};

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }

    fn from_result(name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

pub const PROJECTION_CASES: usize = 1000;
pub const GRADIENT_POINTS: usize = 20;
pub const GRADIENT_TOL: f64 = 1e-5;
pub const GRADIENT_STEP: f64 = 1e-6;
pub const ANGLE_POINTS: usize = 1000;
pub const ANGLE_TOL: f64 = 1e-9;
pub const CURVATURE_PAIRS: usize = 100;
pub const CHANNEL_DRAWS: u64 = 100_000;
const GEOMETRY_TOL: f64 = 1e-12;

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x7665_7269_6679_0000 ^ tag)
}

fn gaussian(dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> RealVector {
    let v = (0..dim)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    RealVector::new(v).expect("finite gaussian sample")
}

fn test_sets(rng: &mut ChaCha8Rng) -> Vec<(&'static str, FeasibleSet)> {
    let center = gaussian(6, 2.0, rng);
    vec![
        ("ball", FeasibleSet::ball(center, 3.0).expect("valid ball")),
        ("diag_box", FeasibleSet::diag_box(10.0, 10).expect("valid box")),
        ("unconstrained", FeasibleSet::unconstrained(5, None).expect("valid set")),
    ]
}

/// Draws points well inside and well outside the set.
fn wild_point(set: &FeasibleSet, rng: &mut ChaCha8Rng) -> RealVector {
    let scale = set.diameter().unwrap_or(2.0) * rng.random_range(0.05..3.0);
    gaussian(set.dim(), scale, rng)
}

fn with_sets(
    name: &'static str,
    tag: u64,
    check: impl Fn(&FeasibleSet, &mut ChaCha8Rng) -> Result<Option<String>>,
) -> SuiteResult {
    let mut r = rng(tag);
    let mut failures = Vec::new();
    for (kind, set) in test_sets(&mut r) {
        for case in 0..PROJECTION_CASES {
            match check(&set, &mut r) {
                Ok(None) => {}
                Ok(Some(msg)) => {
                    failures.push(format!("{kind} case {case}: {msg}"));
                    break;
                }
                Err(e) => {
                    failures.push(format!("{kind} case {case}: error {e}"));
                    break;
                }
            }
        }
    }
    if failures.is_empty() {
        SuiteResult::new(name, true, format!("{PROJECTION_CASES} cases x 3 set kinds"))
    } else {
        SuiteResult::new(name, false, failures.join("; "))
    }
}

pub fn projection_idempotence() -> SuiteResult {
    with_sets("projection_idempotence", 1, |set, r| {
        let once = set.project(&wild_point(set, r))?;
        let twice = set.project(&once)?;
        let d = distance_sq(&once, &twice)?.sqrt();
        Ok((d > GEOMETRY_TOL).then(|| format!("moved by {d:e}")))
    })
}

pub fn projection_nonexpansive() -> SuiteResult {
    with_sets("projection_nonexpansive", 2, |set, r| {
        let a = wild_point(set, r);
        let b = wild_point(set, r);
        let pa = set.project(&a)?;
        let pb = set.project(&b)?;
        let lhs = distance_sq(&pa, &pb)?.sqrt();
        let rhs = distance_sq(&a, &b)?.sqrt();
        Ok((lhs > rhs + GEOMETRY_TOL).then(|| format!("{lhs:e} > {rhs:e}")))
    })
}

pub fn projection_feasible() -> SuiteResult {
    with_sets("projection_feasible", 3, |set, r| {
        let p = set.project(&wild_point(set, r))?;
        Ok((!set.contains(p.as_slice(), GEOMETRY_TOL)).then(|| "projection outside the set".to_string()))
    })
}

pub fn normalize_unit_norm() -> SuiteResult {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let mut zero_ok = true;
    for case in 0..PROJECTION_CASES {
        let dim = 1 + case % 12;
        let scale = 10f64.powf(r.random_range(-10.0..300.0));
        let v = gaussian(dim, scale, &mut r);
        match normalize(&v, DEFAULT_ZERO_TOL) {
            Ok(d) if !d.is_zero => worst = worst.max((d.direction.norm() - 1.0).abs()),
            Ok(d) => zero_ok &= d.direction.norm() == 0.0,
            Err(e) => return SuiteResult::new("normalize_unit_norm", false, format!("error: {e}")),
        }
    }
    let z = normalize(&RealVector::zeros(4), DEFAULT_ZERO_TOL);
    zero_ok &= z.is_ok_and(|d| d.is_zero && d.direction.norm() == 0.0);
    let passed = worst <= GEOMETRY_TOL && zero_ok;
    SuiteResult::new(
        "normalize_unit_norm",
        passed,
        format!("max |norm - 1| = {worst:e}, zero vector handled: {zero_ok}"),
    )
}

fn gradient_check(name: &'static str, objective: &dyn Objective, set: &FeasibleSet, tag: u64) -> SuiteResult {
    let mut r = rng(tag);
    let worst = (0..GRADIENT_POINTS)
        .map(|_| finite_diff_check(objective, &sample_feasible(set, &mut r), GRADIENT_STEP))
        .fold(0.0f64, f64::max);
    SuiteResult::new(
        name,
        worst < GRADIENT_TOL,
        format!("max relative error {worst:e} over {GRADIENT_POINTS} points"),
    )
}

fn linreg_fixture() -> Result<(LeastSquares, FeasibleSet)> {
    let data = synth_linreg(20, 200, 10.0, 2.5, &mut rng(5))?;
    let set = FeasibleSet::ball(RealVector::zeros(20), 20.0)?;
    Ok((LeastSquares::new(data)?, set))
}

pub fn gradient_toy() -> SuiteResult {
    let set = FeasibleSet::diag_box(10.0, 10).expect("valid box");
    gradient_check("gradient_toy", &ToyQuartic::new(10), &set, 6)
}

pub fn gradient_linreg() -> SuiteResult {
    match linreg_fixture() {
        Ok((obj, set)) => gradient_check("gradient_linreg", &obj, &set, 7),
        Err(e) => SuiteResult::new("gradient_linreg", false, format!("error: {e}")),
    }
}

pub fn gradient_logistic() -> SuiteResult {
    let built = synth_classes(10, 300, 3, 10.0, &mut rng(8)).and_then(|d| d.with_lambda(0.1));
    match built {
        Ok(data) => {
            let set = FeasibleSet::unconstrained(30, Some(2.0)).expect("valid set");
            gradient_check("gradient_logistic", &Logistic::new(data), &set, 9)
        }
        Err(e) => SuiteResult::new("gradient_logistic", false, format!("error: {e}")),
    }
}

/// Every sampled `x ≠ 0` on the diagonal segment has angle cosine `1/√d`.
pub fn toy_acute_angle() -> SuiteResult {
    let dim = 10;
    let set = FeasibleSet::diag_box(10.0, dim).expect("valid box");
    let obj = ToyQuartic::new(dim);
    let expected = 1.0 / (dim as f64).sqrt();
    let mut r = rng(10);
    let mut worst = 0.0f64;
    let mut used = 0;
    for _ in 0..ANGLE_POINTS {
        let x = sample_feasible(&set, &mut r);
        let g = obj.subgradient(&x);
        let (gn, xn) = (norm(&g), norm(&x));
        if gn == 0.0 || xn == 0.0 {
            continue;
        }
        worst = worst.max((dot(&g, &x) / (gn * xn) - expected).abs());
        used += 1;
    }
    SuiteResult::new(
        "toy_acute_angle",
        worst <= ANGLE_TOL && used > 0,
        format!("max |cos - 1/sqrt(d)| = {worst:e} over {used} points"),
    )
}

/// `μ‖Δx‖² ≤ ⟨Δg, Δx⟩ ≤ β‖Δx‖²` with `μ = 2σmin²`, `β = 2σmax²`.
pub fn curvature_bracket() -> SuiteResult {
    let run = || -> Result<(bool, String)> {
        let (obj, set) = linreg_fixture()?;
        let (mu, beta) = (obj.data().strong_convexity(), obj.data().smoothness());
        let probe = probe_curvature(&obj, &set, CURVATURE_PAIRS, &mut rng(11));
        let slack = 1e-9;
        let ok = probe.pairs == CURVATURE_PAIRS
            && probe.min_monotonicity >= mu * (1.0 - slack)
            && probe.max_monotonicity <= beta * (1.0 + slack);
        Ok((
            ok,
            format!(
                "mu={mu:.6e} <= [{:.6e}, {:.6e}] <= beta={beta:.6e} over {} pairs",
                probe.min_monotonicity, probe.max_monotonicity, probe.pairs
            ),
        ))
    };
    SuiteResult::from_result("curvature_bracket", run())
}

/// Corruption count within three binomial standard deviations.
pub fn channel_frequency() -> SuiteResult {
    let run = || -> Result<(bool, String)> {
        let p = 0.3;
        let mut ch = CorruptionChannel::new(p, Adversary::scaled_opposite(1.0)?, 12)?;
        let k = (0..CHANNEL_DRAWS).filter(|_| ch.draw()).count() as f64;
        let n = CHANNEL_DRAWS as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        let z = (k - n * p) / sigma;
        Ok((z.abs() <= 3.0, format!("{k} corruptions in {n} draws at p={p}, z={z:.3}")))
    };
    SuiteResult::from_result("channel_frequency", run())
}

/// `strongly_convex_gamma(R, κ, q) = theorem_gamma(R, 1/κ, q)`.
pub fn gamma_identity() -> SuiteResult {
    let mut r = rng(13);
    let mut worst = 0.0f64;
    for _ in 0..PROJECTION_CASES {
        let kappa = 10f64.powf(r.random_range(0.0..3.0));
        let diameter = r.random_range(0.1..100.0);
        let q = r.random_range(0.0..1.0) / (1.0 + kappa);
        let (a, b) = match (strongly_convex_gamma(diameter, kappa, q), theorem_gamma(diameter, 1.0 / kappa, q)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(_), Err(_)) => continue,
            _ => return SuiteResult::new("gamma_identity", false, format!("disagree at kappa={kappa} q={q}")),
        };
        worst = worst.max((a - b).abs() / a.abs());
    }
    SuiteResult::new("gamma_identity", worst <= 1e-12, format!("max relative difference {worst:e}"))
}

/// Two in-memory runs of the same configuration give identical CSV bytes.
pub fn csv_determinism() -> SuiteResult {
    let run = || -> Result<(bool, String)> {
        let mut cfg = ExperimentConfig::toy();
        cfg.iterations = 200;
        cfg.seeds = vec![0, 1, 2];
        cfg.metrics = vec![Metric::DistSqOpt, Metric::CorruptFlag, Metric::GammaT];
        let a = to_csv_bytes(&run_experiment(&cfg)?.records)?;
        let b = to_csv_bytes(&run_experiment(&cfg)?.records)?;
        Ok((a == b, format!("{} bytes per run", a.len())))
    };
    SuiteResult::from_result("csv_determinism", run())
}

/// Runs every suite in a fixed order.
pub fn run_all() -> Vec<SuiteResult> {
    vec![
        projection_idempotence(),
        projection_nonexpansive(),
        projection_feasible(),
        normalize_unit_norm(),
        gradient_toy(),
        gradient_linreg(),
        gradient_logistic(),
        toy_acute_angle(),
        curvature_bracket(),
        channel_frequency(),
        gamma_identity(),
        csv_determinism(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for s in run_all() {
            assert!(s.passed, "{}: {}", s.name, s.detail);
        }
    }

    #[test]
    fn a_wrong_gradient_is_caught() {
        struct Wrong;
        impl Objective for Wrong {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, x: &[f64]) -> f64 {
                x[0] * x[0] + x[1]
            }
            fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
                out[0] = x[0];
                out[1] = 1.0;
            }
        }
        let set = FeasibleSet::unconstrained(2, Some(4.0)).unwrap();
        assert!(!gradient_check("wrong", &Wrong, &set, 0).passed);
    }
}
