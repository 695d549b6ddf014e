use super::linalg::{Cholesky, Matrix, SingularValues};
use super::Objective;
use crate::error::{check_dim, NsmError, Result};
use crate::geometry::{dot, norm, RealVector};

/// Minimum admissible `σ_min(A)` for a design matrix.
pub const MIN_SINGULAR_VALUE: f64 = 1e-10;

/// Regression data `y = A w + ξ`.
#[derive(Debug, Clone)]
pub struct LinRegData {
    a: Matrix,
    y: Vec<f64>,
    w_true: RealVector,
    noise_sd: f64,
    singular: SingularValues,
}

impl LinRegData {
    /// Validates shapes and that `A` has full column rank.
    pub fn new(a: Matrix, y: Vec<f64>, w_true: RealVector, noise_sd: f64) -> Result<Self> {
        if a.rows() < a.cols() {
            return Err(NsmError::InvalidArgument(format!(
                "need N >= d, got N={} d={}",
                a.rows(),
                a.cols()
            )));
        }
        check_dim(a.rows(), y.len())?;
        check_dim(a.cols(), w_true.dim())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NsmError::NonFinite {
                context: "regression targets".into(),
            });
        }
        if !(noise_sd >= 0.0) {
            return Err(NsmError::InvalidArgument(format!("noise_sd must be >= 0, got {noise_sd}")));
        }
        let singular = SingularValues::of(&a)?;
        if !(singular.min > MIN_SINGULAR_VALUE) {
            return Err(NsmError::InvalidArgument(format!(
                "design matrix is rank deficient (sigma_min = {:e})",
                singular.min
            )));
        }
        Ok(Self {
            a,
            y,
            w_true,
            noise_sd,
            singular,
        })
    }

    pub fn design(&self) -> &Matrix {
        &self.a
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn w_true(&self) -> &RealVector {
        &self.w_true
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn singular_values(&self) -> SingularValues {
        self.singular
    }

    /// `σ_max(A)/σ_min(A)`, the condition number used by the regression
    /// experiment's corruption probability and step size.
    pub fn kappa(&self) -> f64 {
        self.singular.ratio()
    }

    /// Strong convexity modulus of `‖y − Ax‖²`: `2σ_min²`.
    pub fn strong_convexity(&self) -> f64 {
        2.0 * self.singular.min * self.singular.min
    }

    /// Smoothness constant of `‖y − Ax‖²`: `2σ_max²`.
    pub fn smoothness(&self) -> f64 {
        2.0 * self.singular.max * self.singular.max
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }
}

/// Solves the normal equations `(AᵀA) x = Aᵀy` by Cholesky factorization.
pub fn least_squares_optimum(data: &LinRegData) -> Result<RealVector> {
    let gram = data.a.gram();
    let aty = data.a.tr_mul_vec(&data.y);
    solve_normal_equations(&gram, &aty)
}

fn solve_normal_equations(gram: &Matrix, aty: &[f64]) -> Result<RealVector> {
    let x = Cholesky::factor(gram)?.solve(aty);
    let r: Vec<f64> = gram.mul_vec(&x).iter().zip(aty).map(|(a, b)| a - b).collect();
    let residual = norm(&r);
    let bound = 1e-8 * norm(aty);
    if residual > bound {
        return Err(NsmError::ResidualCheck { residual, bound });
    }
    RealVector::new(x)
}

/// `f(x) = ‖y − Ax‖²` with gradient `2Aᵀ(Ax − y)`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    data: LinRegData,
    gram: Matrix,
    aty: Vec<f64>,
    optimum: RealVector,
}

impl LeastSquares {
    pub fn new(data: LinRegData) -> Result<Self> {
        let gram = data.a.gram();
        let aty = data.a.tr_mul_vec(&data.y);
        let optimum = solve_normal_equations(&gram, &aty)?;
        Ok(Self {
            data,
            gram,
            aty,
            optimum,
        })
    }

    pub fn data(&self) -> &LinRegData {
        &self.data
    }

    pub fn optimum(&self) -> &RealVector {
        &self.optimum
    }
}

impl Objective for LeastSquares {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.data
            .a
            .mul_vec(x)
            .iter()
            .zip(&self.data.y)
            .map(|(ax, y)| (y - ax) * (y - ax))
            .sum()
    }

    fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let gi = dot(&self.gram.row(i)[..n], x);
            *o = 2.0 * (gi - self.aty[i]);
        }
    }

    fn nearest_optimum(&self, _x: &[f64]) -> Option<&RealVector> {
        Some(&self.optimum)
    }
}
