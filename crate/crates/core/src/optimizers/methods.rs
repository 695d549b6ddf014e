use std::fmt;
use std::str::FromStr;

use crate::error::{NsmError, Result};
use crate::geometry::{all_finite, normalize_slice, FeasibleSet, RealVector};

/// First-order methods supported by the run loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Nsm,
    Gd,
    Nag,
    Adam,
    RmsProp,
    AmsGrad,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Nsm,
        Method::Gd,
        Method::Nag,
        Method::Adam,
        Method::RmsProp,
        Method::AmsGrad,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Nsm => "nsm",
            Method::Gd => "gd",
            Method::Nag => "nag",
            Method::Adam => "adam",
            Method::RmsProp => "rmsprop",
            Method::AmsGrad => "amsgrad",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = NsmError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| NsmError::InvalidArgument(format!("unknown optimizer '{s}'")))
    }
}

/// Hyperparameters of the baseline methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineHyper {
    /// Adam/AMSGrad first-moment decay.
    pub beta1: f64,
    /// Adam/AMSGrad second-moment decay.
    pub beta2: f64,
    /// RMSprop second-moment decay.
    pub rms_decay: f64,
    /// NAG momentum coefficient.
    pub momentum: f64,
    pub eps: f64,
}

impl Default for BaselineHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            rms_decay: 0.9,
            momentum: 0.9,
            eps: 1e-8,
        }
    }
}

/// One projected NSM update: `Π(x − γ h/‖h‖)`, or `x` unchanged when `h`
/// is (numerically) zero.
pub fn nsm_step(x: &RealVector, h: &RealVector, gamma: f64, set: &FeasibleSet) -> Result<RealVector> {
    let mut out = x.as_slice().to_vec();
    nsm_step_in_place(&mut out, h.as_slice(), gamma, set, crate::geometry::DEFAULT_ZERO_TOL)?;
    Ok(RealVector::from_vec_unchecked(out))
}

/// Returns the norm of the pre-projection displacement (0 when `h` is zero).
pub(crate) fn nsm_step_in_place(
    x: &mut [f64],
    h: &[f64],
    gamma: f64,
    set: &FeasibleSet,
    zero_tol: f64,
) -> Result<f64> {
    crate::error::check_dim(x.len(), h.len())?;
    crate::error::check_dim(set.dim(), x.len())?;
    if !(gamma > 0.0) {
        return Err(NsmError::InvalidArgument(format!("step size must be > 0, got {gamma}")));
    }
    let (dir, is_zero) = normalize_slice(h, zero_tol)?;
    if is_zero {
        return Ok(0.0);
    }
    let mut step_sq = 0.0;
    for (xi, di) in x.iter_mut().zip(&dir) {
        let before = *xi;
        *xi -= gamma * di;
        step_sq += (*xi - before) * (*xi - before);
    }
    set.project_in_place(x)?;
    Ok(step_sq.sqrt())
}

/// Iterate plus method-specific accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    method: Method,
    x: Vec<f64>,
    /// NAG velocity.
    velocity: Vec<f64>,
    /// First moment (Adam, AMSGrad).
    first: Vec<f64>,
    /// Second moment (Adam, AMSGrad, RMSprop).
    second: Vec<f64>,
    /// Running entrywise max of the second moment (AMSGrad).
    second_max: Vec<f64>,
    /// Index of the next step, starting at 1.
    t: u64,
}

impl OptimizerState {
    pub fn new(method: Method, x: RealVector) -> Self {
        let d = x.dim();
        Self {
            method,
            x: x.into_vec(),
            velocity: vec![0.0; d],
            first: vec![0.0; d],
            second: vec![0.0; d],
            second_max: vec![0.0; d],
            t: 1,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second
    }

    pub fn second_moment_max(&self) -> &[f64] {
        &self.second_max
    }

    /// Applies one update of the state's method. Baselines are projected onto
    /// `set` when it is given; NSM always needs a set.
    pub fn step(&mut self, h: &[f64], gamma: f64, set: &FeasibleSet, project: bool, hyper: &BaselineHyper) -> Result<()> {
        match self.method {
            Method::Nsm => {
                nsm_step_in_place(&mut self.x, h, gamma, set, crate::geometry::DEFAULT_ZERO_TOL)?;
                self.t += 1;
                Ok(())
            }
            _ => self.baseline_step(h, gamma, if project { Some(set) } else { None }, hyper),
        }
    }

    /// Standard update for the baseline methods, optionally followed by a
    /// projection. Fails on NSM state or on a non-finite result.
    pub fn baseline_step(
        &mut self,
        h: &[f64],
        gamma: f64,
        set: Option<&FeasibleSet>,
        hyper: &BaselineHyper,
    ) -> Result<()> {
        crate::error::check_dim(self.x.len(), h.len())?;
        if !all_finite(h) {
            return Err(NsmError::NonFinite {
                context: format!("{} feedback at step {}", self.method, self.t),
            });
        }
        let t = self.t as i32;
        match self.method {
            Method::Nsm => {
                return Err(NsmError::InvalidArgument(
                    "baseline_step called on NSM state".into(),
                ))
            }
            Method::Gd => {
                for (xi, hi) in self.x.iter_mut().zip(h) {
                    *xi -= gamma * hi;
                }
            }
            Method::Nag => {
                // Nesterov momentum in the look-ahead reparametrization:
                // v ← ηv + h, x ← x − γ(h + ηv).
                let eta = hyper.momentum;
                for ((xi, vi), hi) in self.x.iter_mut().zip(&mut self.velocity).zip(h) {
                    *vi = eta * *vi + hi;
                    *xi -= gamma * (hi + eta * *vi);
                }
            }
            Method::RmsProp => {
                let rho = hyper.rms_decay;
                for ((xi, si), hi) in self.x.iter_mut().zip(&mut self.second).zip(h) {
                    *si = rho * *si + (1.0 - rho) * hi * hi;
                    *xi -= gamma * hi / (si.sqrt() + hyper.eps);
                }
            }
            Method::Adam | Method::AmsGrad => {
                let (b1, b2) = (hyper.beta1, hyper.beta2);
                let c1 = 1.0 - b1.powi(t);
                let c2 = 1.0 - b2.powi(t);
                let amsgrad = self.method == Method::AmsGrad;
                for i in 0..self.x.len() {
                    let hi = h[i];
                    self.first[i] = b1 * self.first[i] + (1.0 - b1) * hi;
                    self.second[i] = b2 * self.second[i] + (1.0 - b2) * hi * hi;
                    let second = if amsgrad {
                        self.second_max[i] = self.second_max[i].max(self.second[i]);
                        self.second_max[i]
                    } else {
                        self.second[i]
                    };
                    let m_hat = self.first[i] / c1;
                    let v_hat = second / c2;
                    self.x[i] -= gamma * m_hat / (v_hat.sqrt() + hyper.eps);
                }
            }
        }
        if !all_finite(&self.x)
            || !all_finite(&self.velocity)
            || !all_finite(&self.first)
            || !all_finite(&self.second)
        {
            return Err(NsmError::NonFinite {
                context: format!("{} update at step {}", self.method, self.t),
            });
        }
        if let Some(set) = set {
            set.project_in_place(&mut self.x)?;
        }
        self.t += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(x: &[f64]) -> RealVector {
        RealVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn nsm_zero_feedback_keeps_iterate() {
        let set = FeasibleSet::unconstrained(2, None).unwrap();
        let x = rv(&[1.0, -2.0]);
        assert_eq!(nsm_step(&x, &rv(&[0.0, 0.0]), 1.0, &set).unwrap(), x);
    }

    #[test]
    fn nsm_unit_step() {
        let set = FeasibleSet::unconstrained(2, None).unwrap();
        let x = nsm_step(&rv(&[0.0, 0.0]), &rv(&[3.0, 4.0]), 1.0, &set).unwrap();
        assert!((x[0] + 0.6).abs() < 1e-15 && (x[1] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn nsm_corrupt_step_on_diagonal() {
        let d = 10;
        let set = FeasibleSet::diag_box(10.0, d).unwrap();
        let gamma = 0.7;
        let x = nsm_step(&RealVector::filled(d, 2.0), &RealVector::filled(d, -1.0), gamma, &set).unwrap();
        let expect = 2.0 + gamma / (d as f64).sqrt();
        assert!(x.as_slice().iter().all(|v| (v - expect).abs() < 1e-14));
    }

    #[test]
    fn nsm_displacement_equals_step() {
        let set = FeasibleSet::ball(RealVector::zeros(3), 1.0).unwrap();
        let mut x = vec![0.2, 0.1, -0.3];
        let len = nsm_step_in_place(&mut x, &[5.0, -1.0, 2.0], 0.37, &set, 1e-12).unwrap();
        assert!((len - 0.37).abs() < 1e-12);
        assert!(set.contains(&x, 1e-12));
    }

    #[test]
    fn gd_step() {
        let mut s = OptimizerState::new(Method::Gd, rv(&[1.0, 1.0]));
        s.baseline_step(&[2.0, 0.0], 0.5, None, &BaselineHyper::default()).unwrap();
        assert_eq!(s.x(), &[0.0, 1.0]);
        assert_eq!(s.t(), 2);
    }

    #[test]
    fn adam_first_step() {
        // m̂ = h, v̂ = h²: x' = −γ·h/(|h| + ε).
        let mut s = OptimizerState::new(Method::Adam, rv(&[0.0]));
        s.baseline_step(&[2.0], 0.1, None, &BaselineHyper::default()).unwrap();
        let expect = -0.1 * 2.0 / (2.0 + 1e-8);
        assert!((s.x()[0] - expect).abs() < 1e-15);
        assert!((s.x()[0] + 0.09999999).abs() < 1e-8);
    }

    #[test]
    fn rmsprop_zero_gradient() {
        let hyper = BaselineHyper::default();
        let mut s = OptimizerState::new(Method::RmsProp, rv(&[3.0]));
        s.baseline_step(&[2.0], 0.1, None, &hyper).unwrap();
        let x = s.x()[0];
        let v = s.second_moment()[0];
        s.baseline_step(&[0.0], 0.1, None, &hyper).unwrap();
        assert_eq!(s.x()[0], x);
        assert!((s.second_moment()[0] - hyper.rms_decay * v).abs() < 1e-15);
    }

    #[test]
    fn nag_accumulates_velocity() {
        let hyper = BaselineHyper::default();
        let mut s = OptimizerState::new(Method::Nag, rv(&[0.0]));
        s.baseline_step(&[1.0], 0.1, None, &hyper).unwrap();
        // v = 1, x = −0.1·(1 + 0.9·1)
        assert!((s.x()[0] + 0.19).abs() < 1e-15);
        s.baseline_step(&[1.0], 0.1, None, &hyper).unwrap();
        // v = 1.9, x = −0.19 − 0.1·(1 + 0.9·1.9)
        assert!((s.x()[0] + 0.19 + 0.271).abs() < 1e-14);
    }

    #[test]
    fn amsgrad_max_is_monotone() {
        let hyper = BaselineHyper::default();
        let mut s = OptimizerState::new(Method::AmsGrad, rv(&[0.0, 0.0]));
        let mut prev = s.second_moment_max().to_vec();
        for k in 0..200 {
            let h = if k % 7 == 0 { [50.0, -1.0] } else { [0.1, 0.0] };
            s.baseline_step(&h, 0.01, None, &hyper).unwrap();
            for (a, b) in s.second_moment_max().iter().zip(&prev) {
                assert!(a >= b);
            }
            prev = s.second_moment_max().to_vec();
        }
    }

    #[test]
    fn baselines_project_when_asked() {
        let set = FeasibleSet::ball(RealVector::zeros(2), 1.0).unwrap();
        let mut s = OptimizerState::new(Method::Gd, rv(&[0.0, 0.0]));
        s.baseline_step(&[-100.0, 0.0], 1.0, Some(&set), &BaselineHyper::default()).unwrap();
        assert_eq!(s.x(), &[1.0, 0.0]);
    }

    #[test]
    fn non_finite_updates_are_reported() {
        let mut s = OptimizerState::new(Method::Gd, rv(&[0.0]));
        let err = s.baseline_step(&[f64::MAX], 10.0, None, &BaselineHyper::default());
        assert!(matches!(err, Err(NsmError::NonFinite { .. })));
        let mut n = OptimizerState::new(Method::Nsm, rv(&[0.0]));
        assert!(n.baseline_step(&[1.0], 1.0, None, &BaselineHyper::default()).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("sgd".parse::<Method>().is_err());
    }
}
