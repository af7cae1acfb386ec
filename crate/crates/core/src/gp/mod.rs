//! Exact Gaussian-process regression with Matérn ARD kernels.

mod dataset;
mod fit;
mod kernel;
mod model;

pub use dataset::{Dataset, TargetKind};
pub use fit::{fit, FitOptions};
pub use kernel::{kernel_eval, KernelFamily, KernelSpec};
pub use model::{evaluate_mae, FitMetadata, GpModel, Hyperparameters, Standardizer};

/// [`GpModel::log_marginal_likelihood`] as a free function.
pub fn log_marginal_likelihood<T: crate::Real>(model: &GpModel<T>) -> crate::Result<(T, Vec<T>)> {
    model.log_marginal_likelihood()
}
