use crate::design_space::{encode16, encode19, CodesignPoint};
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::oracle::Oracle;
use crate::pareto::Objectives;

/// Source of (loss, latency, energy) estimates for a design.
///
/// Implementations must be free of side effects: the GA calls them from
/// several threads and relies on repeated calls agreeing.
pub trait Predictors: Sync {
    fn predict(&self, point: &CodesignPoint) -> Result<Objectives<f64>>;
}

/// Ground truth straight from the analytic oracle.
#[derive(Debug, Clone)]
pub struct OraclePredictors<'a> {
    pub oracle: &'a Oracle,
}

impl<'a> OraclePredictors<'a> {
    pub fn new(oracle: &'a Oracle) -> Self {
        Self { oracle }
    }
}

impl Predictors for OraclePredictors<'_> {
    fn predict(&self, point: &CodesignPoint) -> Result<Objectives<f64>> {
        let e = self.oracle.evaluate(point)?;
        Ok(Objectives::new(e.ce, e.latency_ms, e.power_w))
    }
}

/// GP mean predictions: the loss model reads the 16-dim architecture
/// encoding, latency and power models the 19-dim joint encoding.
#[derive(Debug, Clone)]
pub struct SurrogatePredictors {
    pub ce: GpModel<f64>,
    pub latency: GpModel<f64>,
    pub power: GpModel<f64>,
}

impl SurrogatePredictors {
    pub fn new(ce: GpModel<f64>, latency: GpModel<f64>, power: GpModel<f64>) -> Result<Self> {
        for (name, model, dim) in [("ce", &ce, 16), ("latency", &latency, 19), ("power", &power, 19)] {
            if model.dim() != dim {
                return Err(Error::Predictor(format!(
                    "{name} model expects {} inputs, need {dim}",
                    model.dim()
                )));
            }
        }
        Ok(Self { ce, latency, power })
    }
}

impl Predictors for SurrogatePredictors {
    fn predict(&self, point: &CodesignPoint) -> Result<Objectives<f64>> {
        let a = encode16(&point.arch);
        let p = encode19(point);
        Ok(Objectives::new(
            self.ce.predict_mean(&a)?,
            self.latency.predict_mean(&p)?,
            self.power.predict_mean(&p)?,
        ))
    }
}
