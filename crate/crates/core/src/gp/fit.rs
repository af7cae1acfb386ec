use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::kernel::KernelFamily;
use super::model::{lml_and_gradient, FitMetadata, GpModel, Hyperparameters, Standardizer};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Noise variance assigned to the constant-target fallback model.
const FLOOR_NOISE: f64 = 1e-6;

/// Hyperparameter optimization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub family: KernelFamily,
    pub iters: usize,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl FitOptions {
    pub fn new(family: KernelFamily) -> Self {
        Self {
            family,
            iters: 50,
            step_size: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn iters(mut self, iters: usize) -> Self {
        self.iters = iters;
        self
    }
}

/// Fits a GP by Adam ascent on the log marginal likelihood in log-parameter
/// space, returning the best parameters seen.
///
/// Inputs are z-scored per dimension; lengthscales start at 1, the signal
/// variance at the target variance, the noise at 1% of it and the mean at the
/// target average.
pub fn fit<T: Real>(data: &Dataset<T>, opts: &FitOptions) -> Result<GpModel<T>> {
    if data.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 training rows, got {}",
            data.len()
        )));
    }
    if opts.iters == 0 {
        return Err(Error::InvalidInput("iters must be >= 1".into()));
    }
    let d = data.dim();
    let standardizer = Standardizer::fit(&data.inputs);
    let mean = data.target_mean();
    let var = data.target_variance();

    if !(var > T::zero()) {
        let hyper = Hyperparameters {
            family: opts.family,
            lengthscales: vec![T::one(); d],
            signal_variance: T::one(),
            noise_variance: T::lit(FLOOR_NOISE),
            constant_mean: data.targets[0],
        };
        let model = GpModel::new(hyper, standardizer, data.inputs.clone(), data.targets.clone())?;
        return Ok(model.with_metadata(FitMetadata {
            degenerate: true,
            ..FitMetadata::default()
        }));
    }

    let z = standardizer.apply_matrix(&data.inputs);
    let init = Hyperparameters {
        family: opts.family,
        lengthscales: vec![T::one(); d],
        signal_variance: var,
        noise_variance: var * T::lit(1e-2),
        constant_mean: mean,
    };
    let mut theta = init.to_vector();
    let (initial, mut grad) = lml_and_gradient(&z, &data.targets, &init)?;
    let mut best = (initial, theta.clone(), 0usize);

    let lr = T::lit(opts.step_size);
    let (b1, b2, eps) = (T::lit(opts.beta1), T::lit(opts.beta2), T::lit(opts.epsilon));
    let mut m1 = vec![T::zero(); theta.len()];
    let mut m2 = vec![T::zero(); theta.len()];
    let mut done = 0;
    for t in 1..=opts.iters {
        let tt = t as i32;
        let c1 = T::one() - b1.powi(tt);
        let c2 = T::one() - b2.powi(tt);
        for i in 0..theta.len() {
            m1[i] = b1 * m1[i] + (T::one() - b1) * grad[i];
            m2[i] = b2 * m2[i] + (T::one() - b2) * grad[i] * grad[i];
            // ascent
            theta[i] = theta[i] + lr * (m1[i] / c1) / ((m2[i] / c2).sqrt() + eps);
        }
        let hp = Hyperparameters::from_vector(opts.family, &theta);
        match lml_and_gradient(&z, &data.targets, &hp) {
            Ok((value, g)) if value.is_finite() && g.iter().all(|v| v.is_finite()) => {
                if value > best.0 {
                    best = (value, theta.clone(), t);
                }
                grad = g;
                done = t;
            }
            // Numerically unusable region: keep the best parameters so far.
            _ => break,
        }
    }

    let hyper = Hyperparameters::from_vector(opts.family, &best.1);
    let model = GpModel::new(hyper, standardizer, data.inputs.clone(), data.targets.clone())?;
    Ok(model.with_metadata(FitMetadata {
        degenerate: false,
        initial_log_likelihood: initial.to_f64_lossy(),
        best_log_likelihood: best.0.to_f64_lossy(),
        best_iteration: best.2,
        iterations: done,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{evaluate_mae, TargetKind};
    use crate::linalg::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wave(n: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Matrix<f64> = Matrix::from_fn(n, 2, |_, _| rng.gen_range(0.0..4.0));
        let y = (0..n).map(|i| x.get(i, 0).sin() + 0.3 * x.get(i, 1)).collect();
        Dataset::new(x, y, TargetKind::Ce).unwrap()
    }

    #[test]
    fn constant_targets_give_constant_model() {
        let mut d = wave(10, 1);
        d.targets = vec![3.25; 10];
        let m = fit(&d, &FitOptions::new(KernelFamily::Matern32)).unwrap();
        assert!(m.metadata().degenerate);
        for x in [[0.0, 0.0], [1.5, 2.5], [9.0, -3.0]] {
            assert!((m.predict_mean(&x).unwrap() - 3.25).abs() < 1e-6);
        }
    }

    #[test]
    fn likelihood_never_decreases() {
        let d = wave(60, 2);
        let m = fit(&d, &FitOptions::new(KernelFamily::Matern52)).unwrap();
        let meta = m.metadata();
        assert!(meta.best_log_likelihood >= meta.initial_log_likelihood);
        let (v, _) = m.log_marginal_likelihood().unwrap();
        assert!((v - meta.best_log_likelihood).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let d = wave(40, 3);
        let o = FitOptions::new(KernelFamily::Matern32);
        let a = fit(&d, &o).unwrap();
        let b = fit(&d, &o).unwrap();
        assert_eq!(a.hyperparameters(), b.hyperparameters());
    }

    #[test]
    fn beats_constant_baseline() {
        let d = wave(200, 4);
        let (train, test) = d.split(150, 0);
        let m = fit(&train, &FitOptions::new(KernelFamily::Matern52)).unwrap();
        let mae = evaluate_mae(&m, &test).unwrap();
        let mu = train.target_mean();
        let base = test.targets.iter().map(|y| (y - mu).abs()).sum::<f64>() / test.len() as f64;
        assert!(mae < 0.2 * base, "mae {mae} baseline {base}");
    }

    #[test]
    fn rejects_tiny_datasets() {
        let d = wave(1, 5);
        assert!(fit(&d, &FitOptions::new(KernelFamily::Matern32)).is_err());
        let d = wave(5, 5);
        assert!(fit(&d, &FitOptions::new(KernelFamily::Matern32).iters(0)).is_err());
    }
}
