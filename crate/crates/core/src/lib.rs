//! Hardware-aware neural architecture search on a joint
//! architecture / FPGA-accelerator design space.
//!
//! The pipeline: sample designs and score them with the analytic
//! [`oracle`], fit Matérn-kernel [`gp`] surrogates for loss, latency and
//! power, search with the penalized genetic algorithm in [`explorer`], and
//! check the result against the brute-force frontier in [`pareto`].

pub mod design_space;
pub mod error;
pub mod explorer;
pub mod gp;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod pareto;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision GP model, the type the pipeline uses.
pub type GpModel = gp::GpModel<f64>;
pub type GpModel32 = gp::GpModel<f32>;
pub type KernelSpec = gp::KernelSpec<f64>;
pub type KernelSpec32 = gp::KernelSpec<f32>;
pub type Dataset = gp::Dataset<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type Objectives = pareto::Objectives<f64>;
