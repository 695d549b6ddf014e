//! Small dense linear algebra: row-major matrices, Cholesky factorization of
//! SPD matrices, and extreme singular values via power / inverse iteration.

use crate::error::{NsmError, Result};
use crate::geometry::{dot, norm};

/// Relative pivot threshold below which a Cholesky factorization is rejected.
pub const PIVOT_REL_TOL: f64 = 1e-12;
/// Relative residual tolerance used by the eigenvalue iterations.
pub const EIG_REL_TOL: f64 = 1e-10;
/// Iteration cap for the eigenvalue iterations.
pub const EIG_MAX_ITER: usize = 10_000;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(NsmError::InvalidArgument("matrix must be non-empty".into()));
        }
        if data.len() != rows * cols {
            return Err(NsmError::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NsmError::NonFinite {
                context: "matrix entries".into(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NsmError::InvalidArgument("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `Aᵀ y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, yr) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * yr;
            }
        }
        out
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = vec![0.0; n * n];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ri = row[i];
                for j in i..n {
                    g[i * n + j] += ri * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i];
            }
        }
        Matrix {
            rows: n,
            cols: n,
            data: g,
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factorizes a symmetric positive-definite matrix. Fails when a pivot
    /// drops below `PIVOT_REL_TOL · max diagonal`.
    pub fn factor(m: &Matrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(NsmError::DimensionMismatch {
                expected: m.rows,
                actual: m.cols,
            });
        }
        let n = m.rows;
        let max_diag = (0..n).map(|i| m.get(i, i)).fold(0.0f64, f64::max);
        let threshold = PIVOT_REL_TOL * max_diag;
        let mut l = vec![0.0; n * n];
        let mut smallest = (f64::INFINITY, 0usize);
        for j in 0..n {
            let mut diag = m.get(j, j);
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if diag < smallest.0 {
                smallest = (diag, j);
            }
            if !(diag > threshold) || max_diag <= 0.0 {
                return Err(NsmError::NotPositiveDefinite {
                    pivot: smallest.0,
                    column: smallest.1,
                });
            }
            let ljj = diag.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, lower: l })
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        y
    }
}

fn unit_start(n: usize) -> Vec<f64> {
    // Non-symmetric start so no eigenvector of a structured matrix is missed.
    let v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i as f64 + 1.0).sqrt()).collect();
    let nv = norm(&v);
    v.into_iter().map(|x| x / nv).collect()
}

fn sym_mul(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.mul_vec(v)
}

/// Iterates `v ← apply(v)/‖apply(v)‖` until the Rayleigh quotient of `m`
/// has residual `‖m v − λ v‖ ≤ EIG_REL_TOL · λ`.
fn rayleigh_iteration(
    m: &Matrix,
    method: &'static str,
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
) -> Result<f64> {
    let mut v = unit_start(m.rows);
    let mut residual = f64::INFINITY;
    for _ in 0..EIG_MAX_ITER {
        let w = apply(&v);
        let nw = norm(&w);
        if !(nw > 0.0 && nw.is_finite()) {
            return Err(NsmError::NoConvergence {
                method,
                iterations: 0,
                residual: f64::NAN,
            });
        }
        v = w.into_iter().map(|x| x / nw).collect();
        let mv = sym_mul(m, &v);
        let lambda = dot(&v, &mv);
        residual = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= EIG_REL_TOL * lambda.abs() {
            return Ok(lambda);
        }
    }
    Err(NsmError::NoConvergence {
        method,
        iterations: EIG_MAX_ITER,
        residual,
    })
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix.
pub fn largest_eigenvalue(m: &Matrix) -> Result<f64> {
    rayleigh_iteration(m, "power iteration", |v| sym_mul(m, v))
}

/// Smallest eigenvalue of a symmetric positive-definite matrix.
pub fn smallest_eigenvalue(m: &Matrix) -> Result<f64> {
    let chol = Cholesky::factor(m)?;
    rayleigh_iteration(m, "inverse iteration", |v| chol.solve(v))
}

/// Extreme singular values of a tall matrix with full column rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularValues {
    pub max: f64,
    pub min: f64,
}

impl SingularValues {
    pub fn of(a: &Matrix) -> Result<Self> {
        let g = a.gram();
        let max = largest_eigenvalue(&g)?.sqrt();
        let min = smallest_eigenvalue(&g)?.sqrt();
        Ok(Self { max, min })
    }

    pub fn ratio(&self) -> f64 {
        self.max / self.min
    }
}

/// `σ_max(A) / σ_min(A)`.
pub fn condition_number(a: &Matrix) -> Result<f64> {
    Ok(SingularValues::of(a)?.ratio())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cyclic Jacobi eigenvalue sweep for symmetric matrices, used only as an
    /// independent oracle.
    fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
        let n = m.rows();
        let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_row_major(rows, cols, data).unwrap()
    }

    #[test]
    fn identity_and_diagonal_condition_numbers() {
        assert!((condition_number(&Matrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        assert!((condition_number(&Matrix::diagonal(&[2.0, 1.0])).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn singular_values_match_jacobi_oracle() {
        for seed in 0..10 {
            let a = random_matrix(8, 4, seed);
            let eig = jacobi_eigenvalues(&a.gram());
            let oracle_max = eig[3].sqrt();
            let oracle_min = eig[0].sqrt();
            let sv = SingularValues::of(&a).unwrap();
            assert!(((sv.max - oracle_max) / oracle_max).abs() < 1e-8, "seed {seed}");
            assert!(((sv.min - oracle_min) / oracle_min).abs() < 1e-8, "seed {seed}");
            let k = condition_number(&a).unwrap();
            assert!(((k - oracle_max / oracle_min) / k).abs() < 1e-8);
        }
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = random_matrix(10, 5, 42);
        let g = a.gram();
        let chol = Cholesky::factor(&g).unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let x = chol.solve(&b);
        let r = g.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_reports_rank_deficiency() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        match Cholesky::factor(&a.gram()) {
            Err(NsmError::NotPositiveDefinite { column, pivot }) => {
                assert_eq!(column, 1);
                assert!(pivot.abs() < 1e-9);
            }
            other => panic!("expected factorization failure, got {other:?}"),
        }
    }

    #[test]
    fn gram_matches_explicit_product() {
        let a = random_matrix(6, 3, 7);
        let g = a.gram();
        for i in 0..3 {
            for j in 0..3 {
                let explicit: f64 = (0..6).map(|r| a.get(r, i) * a.get(r, j)).sum();
                assert!((g.get(i, j) - explicit).abs() < 1e-14);
            }
        }
    }
}
