use super::linalg::Matrix;
use super::Objective;
use crate::error::{check_dim, NsmError, Result};
use crate::geometry::dot;

/// Labelled features for multinomial classification.
#[derive(Debug, Clone)]
pub struct ClassData {
    features: Matrix,
    labels: Vec<usize>,
    classes: usize,
    lambda: f64,
}

impl ClassData {
    pub fn new(features: Matrix, labels: Vec<usize>, classes: usize, lambda: f64) -> Result<Self> {
        check_dim(features.rows(), labels.len())?;
        if classes == 0 {
            return Err(NsmError::InvalidArgument("need at least one class".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(NsmError::InvalidArgument(format!("label {bad} out of range 0..{classes}")));
        }
        let mut seen = vec![false; classes];
        labels.iter().for_each(|&l| seen[l] = true);
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(NsmError::InvalidArgument(format!("class {missing} has no samples")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(NsmError::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            features,
            labels,
            classes,
            lambda,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(NsmError::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        self.lambda = lambda;
        Ok(self)
    }
}

/// L2-regularized softmax cross-entropy. The decision variable is the
/// `m × d` weight matrix flattened row-major, one row per class.
#[derive(Debug, Clone)]
pub struct Logistic {
    data: ClassData,
}

impl Logistic {
    pub fn new(data: ClassData) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &ClassData {
        &self.data
    }

    fn feature_dim(&self) -> usize {
        self.data.features.cols()
    }

    fn scores(&self, x: &[f64], sample: &[f64], out: &mut [f64]) {
        let d = self.feature_dim();
        for (j, s) in out.iter_mut().enumerate() {
            *s = dot(&x[j * d..(j + 1) * d], sample);
        }
    }
}

/// Log-sum-exp with max subtraction; overwrites `scores` with softmax weights
/// and returns the log normalizer.
fn softmax_in_place(scores: &mut [f64]) -> f64 {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    scores.iter_mut().for_each(|s| *s /= total);
    max + total.ln()
}

impl Objective for Logistic {
    fn dim(&self) -> usize {
        self.data.classes * self.feature_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.data.labels.len();
        let mut scores = vec![0.0; self.data.classes];
        let mut loss = 0.0;
        for (i, &label) in self.data.labels.iter().enumerate() {
            self.scores(x, self.data.features.row(i), &mut scores);
            let target = scores[label];
            loss += softmax_in_place(&mut scores) - target;
        }
        loss / n as f64 + self.data.lambda * dot(x, x)
    }

    fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.feature_dim();
        let n = self.data.labels.len() as f64;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = 2.0 * self.data.lambda * xi;
        }
        let mut probs = vec![0.0; self.data.classes];
        for (i, &label) in self.data.labels.iter().enumerate() {
            let sample = self.data.features.row(i);
            self.scores(x, sample, &mut probs);
            softmax_in_place(&mut probs);
            probs[label] -= 1.0;
            for (j, pj) in probs.iter().enumerate() {
                let w = pj / n;
                for (o, a) in out[j * d..(j + 1) * d].iter_mut().zip(sample) {
                    *o += w * a;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(lambda: f64) -> Logistic {
        let a = Matrix::from_rows(&[
            vec![1.0, 0.5],
            vec![-0.3, 2.0],
            vec![0.7, -1.2],
            vec![-1.5, -0.4],
        ])
        .unwrap();
        Logistic::new(ClassData::new(a, vec![0, 1, 2, 1], 3, lambda).unwrap())
    }

    #[test]
    fn zero_weights_give_log_m() {
        let f = small(0.0);
        assert!((f.value(&[0.0; 6]) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn per_sample_gradient_at_zero() {
        // With one class the softmax is identically 1 and the gradient vanishes.
        let a = Matrix::from_rows(&[vec![2.0, -1.0]]).unwrap();
        let f = Logistic::new(ClassData::new(a, vec![0], 1, 0.0).unwrap());
        assert_eq!(f.subgradient(&[0.0, 0.0]), vec![0.0, 0.0]);

        // Every class must be present, so use one sample per class; the
        // gradient is the mean of the per-sample rows (1/m − 1{j=yᵢ})·Aᵢ.
        let rows = [[2.0, -1.0], [1.0, 1.0], [0.5, 3.0]];
        let labels = [1usize, 0, 2];
        let a = Matrix::from_rows(&rows.map(|r| r.to_vec())).unwrap();
        let f = Logistic::new(ClassData::new(a, labels.to_vec(), 3, 0.0).unwrap());
        let g = f.subgradient(&[0.0; 6]);
        for j in 0..3 {
            for k in 0..2 {
                let expect: f64 = rows
                    .iter()
                    .zip(&labels)
                    .map(|(r, &y)| (1.0 / 3.0 - if y == j { 1.0 } else { 0.0 }) * r[k])
                    .sum::<f64>()
                    / 3.0;
                assert!((g[2 * j + k] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let f = small(0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = f.subgradient(&x);
            for i in 0..6 {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
                assert!((fd - g[i]).abs() / g[i].abs().max(1e-3) < 1e-6, "coord {i}");
            }
        }
    }

    #[test]
    fn stable_for_large_scores() {
        let f = small(0.0);
        let x = [500.0, 500.0, -500.0, 800.0, 0.0, 0.0];
        assert!(f.value(&x).is_finite());
        assert!(f.subgradient(&x).iter().all(|g| g.is_finite()));
    }

    #[test]
    fn rejects_missing_class_and_bad_labels() {
        let a = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(ClassData::new(a.clone(), vec![0, 0], 2, 0.0).is_err());
        assert!(ClassData::new(a.clone(), vec![0, 5], 2, 0.0).is_err());
        assert!(ClassData::new(a, vec![0, 1], 2, -1.0).is_err());
    }
}
