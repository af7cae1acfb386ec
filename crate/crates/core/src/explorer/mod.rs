//! Genetic-algorithm search over co-design points, minimizing a weighted sum
//! of predicted loss, latency and power plus a resource penalty.

mod fitness;
mod ga;
mod predictors;

pub use fitness::{fitness, fitness_breakdown, resource_penalty, FitnessBreakdown, FitnessWeights, Preset};
pub use ga::{run_ga, GaConfig, GaResult, GenerationStats};
pub use predictors::{OraclePredictors, Predictors, SurrogatePredictors};
