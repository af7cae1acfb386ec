use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::kernel::{KernelFamily, KernelSpec};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Real;

const MIN_JITTER: f64 = 1e-8;
const MAX_JITTER: f64 = 1e-4;

/// Per-dimension z-score transform applied before the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![T::zero(); dim],
            scale: vec![T::one(); dim],
        }
    }

    /// Column statistics; constant columns keep unit scale.
    pub fn fit(inputs: &Matrix<T>) -> Self {
        let (n, d) = (inputs.rows(), inputs.cols());
        let nf = T::from_usize(n.max(1)).unwrap();
        let mut mean = vec![T::zero(); d];
        for i in 0..n {
            for (m, &v) in mean.iter_mut().zip(inputs.row(i)) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / nf);
        let mut var = vec![T::zero(); d];
        for i in 0..n {
            for ((s, &v), &m) in var.iter_mut().zip(inputs.row(i)).zip(&mean) {
                *s = *s + (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / nf).sqrt();
                if sd > T::epsilon() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    }

    pub fn apply_matrix(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut out = x.clone();
        for i in 0..x.rows() {
            let z = self.apply(x.row(i));
            out.row_mut(i).copy_from_slice(&z);
        }
        out
    }
}

/// Kernel, noise and mean in the unconstrained parameterization used for
/// optimization: `[log l_0 .. log l_{d-1}, log sigma^2, log noise, mean]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters<T> {
    pub family: KernelFamily,
    pub lengthscales: Vec<T>,
    pub signal_variance: T,
    pub noise_variance: T,
    pub constant_mean: T,
}

impl<T: Real> Hyperparameters<T> {
    pub fn to_vector(&self) -> Vec<T> {
        let mut v: Vec<T> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.noise_variance.ln());
        v.push(self.constant_mean);
        v
    }

    pub fn from_vector(family: KernelFamily, v: &[T]) -> Self {
        let d = v.len() - 3;
        Self {
            family,
            lengthscales: v[..d].iter().map(|l| l.exp()).collect(),
            signal_variance: v[d].exp(),
            noise_variance: v[d + 1].exp(),
            constant_mean: v[d + 2],
        }
    }

    pub fn kernel(&self) -> Result<KernelSpec<T>> {
        KernelSpec::new(self.family, self.lengthscales.clone(), self.signal_variance)
    }

    fn validate(&self) -> Result<()> {
        self.kernel()?;
        if !(self.noise_variance > T::zero()) || !self.noise_variance.is_finite() {
            return Err(Error::InvalidKernel("noise variance must be positive".into()));
        }
        if !self.constant_mean.is_finite() {
            return Err(Error::InvalidKernel("mean must be finite".into()));
        }
        Ok(())
    }
}

/// Bookkeeping from [`fit`](super::fit).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    /// Targets had zero variance; the model is the constant mean.
    pub degenerate: bool,
    pub initial_log_likelihood: f64,
    pub best_log_likelihood: f64,
    /// Adam step after which the best parameters were seen (0 = initial).
    pub best_iteration: usize,
    pub iterations: usize,
}

/// Factorized system for one hyperparameter setting.
struct Factorized<T> {
    chol: Cholesky<T>,
    alpha: Vec<T>,
    residual: Vec<T>,
}

/// Lengthscale-scaled copy of the standardized inputs.
fn scaled_inputs<T: Real>(z: &Matrix<T>, lengthscales: &[T]) -> Matrix<T> {
    let mut s = z.clone();
    for i in 0..s.rows() {
        for (v, &l) in s.row_mut(i).iter_mut().zip(lengthscales) {
            *v = *v / l;
        }
    }
    s
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn factorize<T: Real>(z: &Matrix<T>, targets: &[T], hp: &Hyperparameters<T>) -> Result<Factorized<T>> {
    let n = z.rows();
    let s = scaled_inputs(z, &hp.lengthscales);
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        let si = s.row(i);
        for j in 0..i {
            let v = hp.signal_variance * hp.family.correlation(sq_dist(si, s.row(j)).sqrt());
            k.set(i, j, v);
            k.set(j, i, v);
        }
        k.set(i, i, hp.signal_variance + hp.noise_variance);
    }
    let chol = Cholesky::with_jitter(k, MIN_JITTER, MAX_JITTER)?;
    let residual: Vec<T> = targets.iter().map(|&y| y - hp.constant_mean).collect();
    let alpha = chol.solve(&residual);
    Ok(Factorized { chol, alpha, residual })
}

fn lml_value<T: Real>(f: &Factorized<T>) -> T {
    let n = T::from_usize(f.alpha.len()).unwrap();
    let fit: T = f.residual.iter().zip(&f.alpha).map(|(&r, &a)| r * a).sum();
    let half = T::lit(0.5);
    -half * fit - half * f.chol.log_det() - half * n * (T::lit(2.0) * T::PI()).ln()
}

/// Log marginal likelihood and its gradient in the [`Hyperparameters`]
/// vector parameterization, for standardized inputs `z`.
pub(crate) fn lml_and_gradient<T: Real>(
    z: &Matrix<T>,
    targets: &[T],
    hp: &Hyperparameters<T>,
) -> Result<(T, Vec<T>)> {
    let f = factorize(z, targets, hp)?;
    let value = lml_value(&f);

    let n = z.rows();
    let d = z.cols();
    let kinv = f.chol.inverse();
    let s = scaled_inputs(z, &hp.lengthscales);
    let half = T::lit(0.5);

    // W = alpha alpha^T - K^-1; dL/dtheta = 1/2 tr(W dK/dtheta).
    let mut grad_ls = vec![T::zero(); d];
    let mut grad_sig = T::zero();
    let mut trace_w = T::zero();
    for i in 0..n {
        let si = s.row(i);
        let kinv_i = kinv.row(i);
        let ai = f.alpha[i];
        for j in 0..i {
            let sj = s.row(j);
            let w = ai * f.alpha[j] - kinv_i[j];
            let r = sq_dist(si, sj).sqrt();
            let corr = hp.family.correlation(r);
            // off-diagonal pairs counted twice, halved by the 1/2 factor
            grad_sig = grad_sig + w * corr;
            let c = w * hp.family.radial_derivative(r);
            for ((g, &a), &b) in grad_ls.iter_mut().zip(si).zip(sj) {
                *g = *g + c * (a - b) * (a - b);
            }
        }
        let wii = ai * ai - kinv_i[i];
        trace_w = trace_w + wii;
        grad_sig = grad_sig + half * wii;
    }
    let mut grad: Vec<T> = grad_ls.into_iter().map(|g| g * hp.signal_variance).collect();
    grad.push(grad_sig * hp.signal_variance);
    grad.push(half * hp.noise_variance * trace_w);
    grad.push(f.alpha.iter().copied().sum());
    Ok((value, grad))
}

/// Exact GP regressor with a constant mean and a Matérn ARD kernel on
/// standardized inputs.
#[derive(Debug, Clone)]
pub struct GpModel<T> {
    hyper: Hyperparameters<T>,
    standardizer: Standardizer<T>,
    train_inputs: Matrix<T>,
    train_targets: Vec<T>,
    std_inputs: Matrix<T>,
    chol: Cholesky<T>,
    alpha: Vec<T>,
    metadata: FitMetadata,
}

impl<T: Real> GpModel<T> {
    /// Conditions a GP with fixed hyperparameters on `inputs`/`targets`.
    pub fn new(
        hyper: Hyperparameters<T>,
        standardizer: Standardizer<T>,
        train_inputs: Matrix<T>,
        train_targets: Vec<T>,
    ) -> Result<Self> {
        hyper.validate()?;
        let n = train_inputs.rows();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if train_targets.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: train_targets.len(),
            });
        }
        let d = train_inputs.cols();
        for len in [hyper.lengthscales.len(), standardizer.mean.len(), standardizer.scale.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, found: len });
            }
        }
        let std_inputs = standardizer.apply_matrix(&train_inputs);
        let f = factorize(&std_inputs, &train_targets, &hyper)?;
        Ok(Self {
            hyper,
            standardizer,
            train_inputs,
            train_targets,
            std_inputs,
            chol: f.chol,
            alpha: f.alpha,
            metadata: FitMetadata::default(),
        })
    }

    pub fn with_metadata(mut self, metadata: FitMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn hyperparameters(&self) -> &Hyperparameters<T> {
        &self.hyper
    }

    pub fn kernel(&self) -> KernelSpec<T> {
        self.hyper.kernel().expect("validated at construction")
    }

    pub fn noise_variance(&self) -> T {
        self.hyper.noise_variance
    }

    pub fn constant_mean(&self) -> T {
        self.hyper.constant_mean
    }

    pub fn standardizer(&self) -> &Standardizer<T> {
        &self.standardizer
    }

    pub fn train_inputs(&self) -> &Matrix<T> {
        &self.train_inputs
    }

    pub fn train_targets(&self) -> &[T] {
        &self.train_targets
    }

    pub fn factor(&self) -> &Matrix<T> {
        self.chol.factor()
    }

    pub fn jitter(&self) -> T {
        self.chol.jitter()
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn metadata(&self) -> &FitMetadata {
        &self.metadata
    }

    pub fn dim(&self) -> usize {
        self.train_inputs.cols()
    }

    /// Noisy training covariance `K + noise I` (plus any jitter).
    pub fn train_covariance(&self) -> Matrix<T> {
        let kernel = self.kernel();
        let n = self.std_inputs.rows();
        let extra = self.hyper.noise_variance + self.chol.jitter();
        Matrix::from_fn(n, n, |i, j| {
            let v = kernel.eval_unchecked(self.std_inputs.row(i), self.std_inputs.row(j));
            if i == j {
                v + extra
            } else {
                v
            }
        })
    }

    /// Posterior mean and latent variance at `x`.
    pub fn predict(&self, x: &[T]) -> Result<(T, T)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let z = self.standardizer.apply(x);
        let kernel = self.kernel();
        let kstar: Vec<T> = (0..self.std_inputs.rows())
            .map(|i| kernel.eval_unchecked(&z, self.std_inputs.row(i)))
            .collect();
        let mean = self.hyper.constant_mean + kstar.iter().zip(&self.alpha).map(|(&k, &a)| k * a).sum::<T>();
        let v = self.chol.solve_lower(&kstar);
        let var = self.hyper.signal_variance - v.iter().map(|&e| e * e).sum::<T>();
        Ok((mean, var.max(T::zero())))
    }

    pub fn predict_mean(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let z = self.standardizer.apply(x);
        let kernel = self.kernel();
        let dot = (0..self.std_inputs.rows())
            .map(|i| kernel.eval_unchecked(&z, self.std_inputs.row(i)) * self.alpha[i])
            .sum::<T>();
        Ok(self.hyper.constant_mean + dot)
    }

    /// Row-wise [`predict`](Self::predict).
    pub fn predict_batch(&self, xs: &Matrix<T>) -> Result<Vec<(T, T)>> {
        (0..xs.rows()).map(|i| self.predict(xs.row(i))).collect()
    }

    /// Log marginal likelihood and gradient at the model's hyperparameters.
    pub fn log_marginal_likelihood(&self) -> Result<(T, Vec<T>)> {
        lml_and_gradient(&self.std_inputs, &self.train_targets, &self.hyper)
    }
}

/// Mean absolute error of `model` on `test`.
pub fn evaluate_mae<T: Real>(model: &GpModel<T>, test: &Dataset<T>) -> Result<T> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if test.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: test.dim(),
        });
    }
    let mut total = T::zero();
    for (i, &y) in test.targets.iter().enumerate() {
        total = total + (model.predict_mean(test.inputs.row(i))? - y).abs();
    }
    Ok(total / T::from_usize(test.len()).unwrap())
}
