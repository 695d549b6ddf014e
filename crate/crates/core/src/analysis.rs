//! Step sizes, corruption thresholds and error bounds for the normalized
//! subgradient method, plus numerical probes of the conditions they rely on
//! (acute angle, strong convexity, smoothness, gradient correctness).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{NsmError, Result};
use crate::geometry::{distance_sq_slice, dot, norm, FeasibleSet};
use crate::problems::Objective;

/// Largest corruption probability under which NSM is guaranteed to converge:
/// `cos φ / (1 + cos φ)`.
pub fn threshold_probability(cos_phi: f64) -> Result<f64> {
    check_cos_phi(cos_phi)?;
    Ok(cos_phi / (1.0 + cos_phi))
}

fn check_cos_phi(cos_phi: f64) -> Result<()> {
    if cos_phi > 0.0 && cos_phi <= 1.0 {
        Ok(())
    } else {
        Err(NsmError::InvalidArgument(format!("cos phi must be in (0, 1], got {cos_phi}")))
    }
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(NsmError::InvalidArgument(format!("{name} must be in [0, 1], got {v}")))
    }
}

/// `γ = R / (2((1 − q) cos φ − q))`, the scale of the `γ/t` schedule.
pub fn theorem_gamma(diameter: f64, cos_phi: f64, q: f64) -> Result<f64> {
    check_cos_phi(cos_phi)?;
    check_probability("q", q)?;
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(NsmError::InvalidArgument(format!("diameter must be positive, got {diameter}")));
    }
    let threshold = cos_phi / (1.0 + cos_phi);
    let denom = (1.0 - q) * cos_phi - q;
    if q >= threshold || denom <= 0.0 {
        return Err(NsmError::AboveThreshold { q, threshold });
    }
    Ok(diameter / (2.0 * denom))
}

/// `γ = κR / (2((1 − q) − qκ))` for a strongly convex, smooth objective with
/// condition number `κ`; identical to `theorem_gamma(R, 1/κ, q)`.
pub fn strongly_convex_gamma(diameter: f64, kappa: f64, q: f64) -> Result<f64> {
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(NsmError::InvalidArgument(format!("kappa must be >= 1, got {kappa}")));
    }
    check_probability("q", q)?;
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(NsmError::InvalidArgument(format!("diameter must be positive, got {diameter}")));
    }
    let threshold = 1.0 / (1.0 + kappa);
    let denom = (1.0 - q) - q * kappa;
    if q >= threshold || denom <= 0.0 {
        return Err(NsmError::AboveThreshold { q, threshold });
    }
    Ok(kappa * diameter / (2.0 * denom))
}

/// Expected squared distance bound `γ²(1 + ln T)/T`.
pub fn bound_curve(gamma: f64, iterations: u64) -> f64 {
    assert!(iterations >= 1, "bound_curve needs T >= 1");
    let t = iterations as f64;
    gamma * gamma * (1.0 + t.ln()) / t
}

/// Constants of a `γ/t` run with a convergence guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub cos_phi: f64,
    /// Condition number when `cos_phi` was derived as `1/κ`.
    pub kappa: Option<f64>,
    /// Diameter of the feasible set.
    pub diameter: f64,
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
}

impl TheoryConstants {
    /// Requires `p ≤ q < threshold(cos φ)`.
    pub fn new(cos_phi: f64, diameter: f64, p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        if q < p {
            return Err(NsmError::InvalidArgument(format!("need q >= p, got q={q} p={p}")));
        }
        let gamma = theorem_gamma(diameter, cos_phi, q)?;
        Ok(Self {
            cos_phi,
            kappa: None,
            diameter,
            p,
            q,
            gamma,
        })
    }

    /// Strongly convex case with `cos φ = 1/κ`.
    pub fn from_condition_number(kappa: f64, diameter: f64, p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        if q < p {
            return Err(NsmError::InvalidArgument(format!("need q >= p, got q={q} p={p}")));
        }
        let gamma = strongly_convex_gamma(diameter, kappa, q)?;
        Ok(Self {
            cos_phi: 1.0 / kappa,
            kappa: Some(kappa),
            diameter,
            p,
            q,
            gamma,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.cos_phi / (1.0 + self.cos_phi)
    }

    pub fn bound(&self, iterations: u64) -> f64 {
        bound_curve(self.gamma, iterations)
    }
}

/// Draws a point from the set: uniform for a ball or the diagonal segment,
/// standard normal (scaled by half the declared diameter, if any) for an
/// unconstrained set.
pub fn sample_feasible<R: Rng + ?Sized>(set: &FeasibleSet, rng: &mut R) -> Vec<f64> {
    match set {
        FeasibleSet::Ball { center, radius } => {
            let offset = crate::problems::sample_ball_point(center.dim(), *radius, rng);
            offset.iter().zip(center.as_slice()).map(|(o, c)| o + c).collect()
        }
        FeasibleSet::DiagBox { bound, dim } => {
            let s = rng.random_range(-*bound..=*bound);
            vec![s; *dim]
        }
        FeasibleSet::Unconstrained { dim, diameter } => {
            let scale = diameter.map_or(1.0, |r| r / 2.0);
            (0..*dim)
                .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect()
        }
    }
}

/// Minimum over `samples` feasible points of
/// `⟨g(x), x − x*(x)⟩ / (‖g(x)‖ ‖x − x*(x)‖)`.
///
/// This is a sampled lower estimate of `cos φ`, not a certificate. Points
/// within `1e-9` of the optimum and points with a zero subgradient are
/// skipped.
pub fn estimate_cos_phi<R: Rng + ?Sized>(
    objective: &dyn Objective,
    set: &FeasibleSet,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    let mut used = 0usize;
    for _ in 0..samples {
        let x = sample_feasible(set, rng);
        let opt = objective.nearest_optimum(&x).ok_or(NsmError::InvalidArgument(
            "cos phi estimation needs a known optimum".into(),
        ))?;
        let diff: Vec<f64> = x.iter().zip(opt.as_slice()).map(|(a, b)| a - b).collect();
        let dn = norm(&diff);
        if dn <= 1e-9 {
            continue;
        }
        let g = objective.subgradient(&x);
        let gn = norm(&g);
        if gn == 0.0 {
            continue;
        }
        best = best.min(dot(&g, &diff) / (gn * dn));
        used += 1;
    }
    if used == 0 {
        return Err(NsmError::InvalidArgument("no valid samples for cos phi estimate".into()));
    }
    Ok(best)
}

/// Central-difference gradient check with per-coordinate step
/// `step·(1 + |xᵢ|)`. Returns `max_i |fdᵢ − gᵢ| / max(1, ‖g‖)`.
pub fn finite_diff_check(objective: &dyn Objective, x: &[f64], step: f64) -> f64 {
    let g = objective.subgradient(x);
    finite_diff_error(|y| objective.value(y), &g, x, step)
}

/// [`finite_diff_check`] against an arbitrary candidate gradient.
pub fn finite_diff_error(value: impl Fn(&[f64]) -> f64, gradient: &[f64], x: &[f64], step: f64) -> f64 {
    let denom = norm(gradient).max(1.0);
    let mut y = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let h = step * (1.0 + x[i].abs());
        y[i] = x[i] + h;
        let fp = value(&y);
        y[i] = x[i] - h;
        let fm = value(&y);
        y[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - gradient[i]).abs() / denom);
    }
    worst
}

/// Curvature ratios `⟨Δg, Δx⟩/‖Δx‖²` and `‖Δg‖/‖Δx‖` over random feasible
/// pairs: the minimum of the first lower-estimates strong convexity μ, the
/// maximum of the second lower-estimates the smoothness constant β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureProbe {
    pub min_monotonicity: f64,
    pub max_monotonicity: f64,
    pub max_lipschitz: f64,
    pub pairs: usize,
}

pub fn probe_curvature<R: Rng + ?Sized>(
    objective: &dyn Objective,
    set: &FeasibleSet,
    pairs: usize,
    rng: &mut R,
) -> CurvatureProbe {
    let mut probe = CurvatureProbe {
        min_monotonicity: f64::INFINITY,
        max_monotonicity: f64::NEG_INFINITY,
        max_lipschitz: 0.0,
        pairs: 0,
    };
    for _ in 0..pairs {
        let a = sample_feasible(set, rng);
        let b = sample_feasible(set, rng);
        let dx_sq = distance_sq_slice(&a, &b);
        if dx_sq == 0.0 {
            continue;
        }
        let ga = objective.subgradient(&a);
        let gb = objective.subgradient(&b);
        let dg: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| x - y).collect();
        let dx: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mono = dot(&dg, &dx) / dx_sq;
        probe.min_monotonicity = probe.min_monotonicity.min(mono);
        probe.max_monotonicity = probe.max_monotonicity.max(mono);
        probe.max_lipschitz = probe.max_lipschitz.max(norm(&dg) / dx_sq.sqrt());
        probe.pairs += 1;
    }
    probe
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RealVector;
    use crate::problems::{synth_linreg, LeastSquares, Quadratic, ToyQuartic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_probability(1.0).unwrap(), 0.5);
        let thr = threshold_probability(1.0 / 10f64.sqrt()).unwrap();
        assert!((thr - 0.2403).abs() < 5e-5);
        assert!((thr - 1.0 / (1.0 + 10f64.sqrt())).abs() < 1e-15);
        assert!(threshold_probability(1e-12).unwrap() < 1e-11);
        assert!(threshold_probability(0.0).is_err());
        assert!(threshold_probability(1.1).is_err());
    }

    #[test]
    fn threshold_is_increasing() {
        let vals: Vec<f64> = (1..=1000)
            .map(|i| threshold_probability(i as f64 / 1000.0).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn theorem_gamma_examples() {
        assert_eq!(theorem_gamma(10.0, 1.0, 0.0).unwrap(), 5.0);
        let c = 1.0 / 10f64.sqrt();
        let g = theorem_gamma(10.0, c, 0.0).unwrap();
        // Independent evaluation: 10 / (2/√10) = 5√10.
        assert!((g - 5.0 * 10f64.sqrt()).abs() < 1e-12);
        assert!((g - 15.811).abs() < 1e-3);
        let thr = threshold_probability(c).unwrap();
        assert!(theorem_gamma(10.0, c, thr - 1e-9).unwrap() > 1e6);
        assert!(matches!(theorem_gamma(10.0, c, thr), Err(NsmError::AboveThreshold { .. })));
        assert!(theorem_gamma(10.0, c, 0.3).is_err());
    }

    #[test]
    fn theorem_gamma_increases_in_q() {
        let c = 0.4;
        let thr = threshold_probability(c).unwrap();
        let vals: Vec<f64> = (0..1000)
            .map(|i| theorem_gamma(3.0, c, thr * i as f64 / 1000.0).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn strongly_convex_examples() {
        assert_eq!(strongly_convex_gamma(10.0, 1.0, 0.0).unwrap(), 5.0);
        // 32 / (2·(0.9 − 0.4)) = 32
        assert!((strongly_convex_gamma(8.0, 4.0, 0.1).unwrap() - 32.0).abs() < 1e-12);
        assert!(strongly_convex_gamma(8.0, 4.0, 0.2).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let kappa = rng.random_range(1.0..50.0);
            let r = rng.random_range(0.1..100.0);
            let q = rng.random_range(0.0..0.999) / (1.0 + kappa);
            let a = strongly_convex_gamma(r, kappa, q).unwrap();
            let b = theorem_gamma(r, 1.0 / kappa, q).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn bound_curve_examples() {
        assert_eq!(bound_curve(3.0, 1), 9.0);
        // γ = 1 at T = e gives 2/e; check on integer T via the closed form.
        let t = std::f64::consts::E;
        assert!(((1.0 + t.ln()) / t - 2.0 / t).abs() < 1e-15);
        let mut prev = bound_curve(2.0, 3);
        for t in 4..=1_000_000u64 {
            let b = bound_curve(2.0, t);
            assert!(b < prev, "not decreasing at T={t}");
            prev = b;
        }
    }

    #[test]
    fn theory_constants_validate_q() {
        let c = TheoryConstants::new(1.0 / 10f64.sqrt(), 10.0, 0.1, 0.2).unwrap();
        assert!(c.gamma > 0.0);
        assert!(TheoryConstants::new(0.5, 10.0, 0.2, 0.1).is_err());
        let k = TheoryConstants::from_condition_number(2.0, 10.0, 0.1, 0.2).unwrap();
        assert_eq!(k.cos_phi, 0.5);
        assert!((k.threshold() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn toy_cos_phi_is_exact() {
        for d in [1usize, 2, 10, 37] {
            let f = ToyQuartic::new(d);
            let set = FeasibleSet::diag_box(10.0, d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
            for n in [1usize, 10, 500] {
                let est = estimate_cos_phi(&f, &set, n, &mut rng).unwrap();
                assert!((est - 1.0 / (d as f64).sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn radial_gradient_has_cos_one() {
        let f = Quadratic::new(RealVector::zeros(4));
        let set = FeasibleSet::unconstrained(4, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((estimate_cos_phi(&f, &set, 200, &mut rng).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn least_squares_cos_phi_respects_condition_number() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = synth_linreg(6, 40, 10.0, 2.5, &mut rng).unwrap();
        let kappa_hessian = data.kappa() * data.kappa();
        let f = LeastSquares::new(data).unwrap();
        let set = FeasibleSet::ball(RealVector::zeros(6), 20.0).unwrap();
        let est = estimate_cos_phi(&f, &set, 2000, &mut rng).unwrap();
        assert!(est >= 1.0 / kappa_hessian - 1e-9);
        assert!(est <= 1.0);
    }

    #[test]
    fn cos_phi_needs_optimum() {
        struct NoOpt;
        impl Objective for NoOpt {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, x: &[f64]) -> f64 {
                x[0]
            }
            fn subgradient_into(&self, _x: &[f64], out: &mut [f64]) {
                out[0] = 1.0;
            }
        }
        let set = FeasibleSet::diag_box(1.0, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(estimate_cos_phi(&NoOpt, &set, 5, &mut rng).is_err());
    }

    #[test]
    fn finite_difference_examples() {
        let q = Quadratic::new(RealVector::zeros(3));
        assert!(finite_diff_check(&q, &[0.3, -1.2, 4.0], 1e-6) < 1e-8);
        let toy = ToyQuartic::new(5);
        assert!(finite_diff_check(&toy, &[2.0; 5], 1e-6) < 1e-6);
        let x = [0.3, -1.2, 4.0];
        let wrong: Vec<f64> = q.subgradient(&x).iter().map(|g| g + 1.0).collect();
        assert!(finite_diff_error(|y| q.value(y), &wrong, &x, 1e-6) > 0.1);
    }

    #[test]
    fn curvature_bracket_for_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data = synth_linreg(5, 30, 10.0, 2.5, &mut rng).unwrap();
        let (mu, beta) = (data.strong_convexity(), data.smoothness());
        let f = LeastSquares::new(data).unwrap();
        let set = FeasibleSet::ball(RealVector::zeros(5), 20.0).unwrap();
        let probe = probe_curvature(&f, &set, 100, &mut rng);
        assert_eq!(probe.pairs, 100);
        assert!(probe.min_monotonicity >= mu * (1.0 - 1e-9));
        assert!(probe.max_monotonicity <= beta * (1.0 + 1e-9));
        assert!(probe.max_lipschitz <= beta * (1.0 + 1e-9));
    }
}
