use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::least_squares::LinRegData;
use super::linalg::Matrix;
use super::logistic::ClassData;
use crate::error::{NsmError, Result};
use crate::geometry::{dot, norm, RealVector};

fn gaussian_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform sample from the interior of the `d`-ball of the given radius
/// (Gaussian direction, radius `R·u^{1/d}`).
pub(crate) fn sample_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let dir = loop {
        let g = gaussian_vec(dim, rng);
        let n = norm(&g);
        if n > 0.0 {
            break g.into_iter().map(|v| v / n).collect::<Vec<_>>();
        }
    };
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    dir.into_iter().map(|v| v * r).collect()
}

/// Gaussian design `A ∈ ℝ^{N×d}`, true weights uniform in the radius-`R`
/// ball, and targets `y = A w + ξ` with `ξᵢ ~ N(0, noise_sd²)`.
pub fn synth_linreg<R: Rng + ?Sized>(
    dim: usize,
    samples: usize,
    radius: f64,
    noise_sd: f64,
    rng: &mut R,
) -> Result<LinRegData> {
    if dim == 0 || samples < dim {
        return Err(NsmError::InvalidArgument(format!(
            "need N >= d >= 1, got N={samples} d={dim}"
        )));
    }
    if !(radius > 0.0) || !(noise_sd >= 0.0) {
        return Err(NsmError::InvalidArgument(format!(
            "need R > 0 and noise_sd >= 0, got R={radius} noise_sd={noise_sd}"
        )));
    }
    let a = Matrix::from_row_major(samples, dim, gaussian_vec(samples * dim, rng))?;
    let w = sample_ball(dim, radius, rng);
    let noise = Normal::new(0.0, noise_sd).map_err(|e| NsmError::InvalidArgument(e.to_string()))?;
    let y = a
        .mul_vec(&w)
        .into_iter()
        .map(|v| v + noise.sample(rng))
        .collect();
    LinRegData::new(a, y, RealVector::new(w)?, noise_sd)
}

/// `m` Gaussian clusters with unit-variance noise around means of length
/// `separation`. When `m <= d` the mean directions are orthonormalized
/// random vectors; when `m > d` they fall back to independent random unit
/// vectors. Labels are assigned round-robin so classes are balanced. The
/// returned data has `λ = 0`; set it with [`ClassData::with_lambda`].
pub fn synth_classes<R: Rng + ?Sized>(
    dim: usize,
    samples: usize,
    classes: usize,
    separation: f64,
    rng: &mut R,
) -> Result<ClassData> {
    if dim == 0 || classes == 0 || samples < classes {
        return Err(NsmError::InvalidArgument(format!(
            "need d >= 1 and N >= m >= 1, got d={dim} N={samples} m={classes}"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(NsmError::InvalidArgument(format!("separation must be >= 0, got {separation}")));
    }
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(classes);
    while means.len() < classes {
        let mut v = gaussian_vec(dim, rng);
        if classes <= dim {
            for m in &means {
                let c = dot(&v, m);
                v.iter_mut().zip(m).for_each(|(vi, mi)| *vi -= c * mi);
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            means.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    let mut data = Vec::with_capacity(samples * dim);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let label = i % classes;
        labels.push(label);
        for k in 0..dim {
            let noise: f64 = StandardNormal.sample(rng);
            data.push(separation * means[label][k] + noise);
        }
    }
    ClassData::new(Matrix::from_row_major(samples, dim, data)?, labels, classes, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{least_squares_optimum, Logistic, Objective};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_regression_recovers_truth() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = synth_linreg(10, 50, 10.0, 0.0, &mut rng).unwrap();
            let opt = least_squares_optimum(&data).unwrap();
            for (a, b) in opt.as_slice().iter().zip(data.w_true().as_slice()) {
                assert!((a - b).abs() < 1e-8);
            }
            assert!(data.w_true().norm() < 10.0);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let gen = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            synth_linreg(5, 20, 10.0, 2.5, &mut rng).unwrap()
        };
        let (a, b) = (gen(3), gen(3));
        assert_eq!(a.design(), b.design());
        assert_eq!(a.targets(), b.targets());
        assert_ne!(gen(4).targets(), a.targets());

        let cls = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            synth_classes(4, 30, 3, 5.0, &mut rng).unwrap()
        };
        assert_eq!(cls(9).features(), cls(9).features());
        assert_eq!(cls(9).labels(), cls(9).labels());
    }

    #[test]
    fn full_scale_instance_builds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let data = synth_linreg(100, 1000, 10.0, 2.5, &mut rng).unwrap();
        assert_eq!(data.design().rows(), 1000);
        assert_eq!(data.dim(), 100);
        assert!(data.kappa() > 1.0);
    }

    #[test]
    fn class_labels_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = synth_classes(10, 300, 3, 10.0, &mut rng).unwrap();
        for c in 0..3 {
            assert_eq!(data.labels().iter().filter(|&&l| l == c).count(), 100);
        }
        // m > d falls back to random unit means.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(synth_classes(2, 50, 5, 3.0, &mut rng).is_ok());
        assert!(synth_classes(2, 3, 5, 3.0, &mut rng).is_err());
    }

    fn clean_gd_cost(separation: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Logistic::new(synth_classes(10, 300, 3, separation, &mut rng).unwrap());
        let mut x = vec![0.0; f.dim()];
        for _ in 0..500 {
            let g = f.subgradient(&x);
            x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= 0.1 * gi);
        }
        f.value(&x)
    }

    #[test]
    fn separated_classes_are_learnable() {
        // Oracle: uncorrupted gradient descent, constant step 0.1, λ = 0.
        for seed in 0..3 {
            assert!(clean_gd_cost(10.0, seed) < 0.2 * 3f64.ln(), "seed {seed}");
        }
    }

    #[test]
    fn zero_separation_has_no_signal() {
        for seed in 0..3 {
            let cost = clean_gd_cost(0.0, seed);
            assert!(cost > 0.9 * 3f64.ln(), "seed {seed}: {cost}");
        }
    }
}
