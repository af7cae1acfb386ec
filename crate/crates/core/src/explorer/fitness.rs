use serde::{Deserialize, Serialize};

use super::predictors::Predictors;
use crate::design_space::{arch_to_layers, BackboneSpec, CodesignPoint};
use crate::error::{Error, Result};
use crate::oracle::mem_usage;

/// The three weightings of (loss, latency, energy) used to steer the search
/// towards different regions of the frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// 1.0 / 0.2 / 0.001: latency-heavy.
    A,
    /// 1.0 / 0.1 / 0.001.
    B,
    /// 1.0 / 0.05 / 0.001: accuracy-heavy.
    C,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::A, Preset::B, Preset::C];

    /// `(eta, mu, lambda)`.
    pub fn weights(self) -> (f64, f64, f64) {
        match self {
            Preset::A => (1.0, 0.2, 0.001),
            Preset::B => (1.0, 0.1, 0.001),
            Preset::C => (1.0, 0.05, 0.001),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Preset::A),
            "B" | "b" => Ok(Preset::B),
            "C" | "c" => Ok(Preset::C),
            other => Err(Error::InvalidWeights(format!("unknown preset {other:?} (A, B or C)"))),
        }
    }
}

/// Objective weights and the resource budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    pub eta: f64,
    pub mu: f64,
    pub lambda: f64,
    /// Penalty added when a budget is exceeded.
    pub gamma: f64,
    pub dsp_avl: u64,
    /// Bytes.
    pub mem_avl: u64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self::from_preset(Preset::B)
    }
}

impl FitnessWeights {
    pub const DEFAULT_GAMMA: f64 = 1000.0;
    pub const DEFAULT_DSP: u64 = 1518;
    pub const DEFAULT_MEM: u64 = 4 << 20;

    pub fn new(eta: f64, mu: f64, lambda: f64) -> Self {
        Self {
            eta,
            mu,
            lambda,
            gamma: Self::DEFAULT_GAMMA,
            dsp_avl: Self::DEFAULT_DSP,
            mem_avl: Self::DEFAULT_MEM,
        }
    }

    pub fn from_preset(p: Preset) -> Self {
        let (eta, mu, lambda) = p.weights();
        Self::new(eta, mu, lambda)
    }

    pub fn with_budgets(mut self, dsp_avl: u64, mem_avl: u64) -> Self {
        self.dsp_avl = dsp_avl;
        self.mem_avl = mem_avl;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.eta, self.mu, self.lambda];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeights("eta, mu, lambda must be non-negative".into()));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidWeights("at least one of eta, mu, lambda must be positive".into()));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidWeights("gamma must be positive".into()));
        }
        Ok(())
    }
}

/// `gamma` if the design needs more DSPs than `dsp_avl` or more buffer than
/// the smaller of `mem_avl` and the configuration's own capacity; else 0.
pub fn resource_penalty(point: &CodesignPoint, weights: &FitnessWeights, backbone: &BackboneSpec) -> Result<f64> {
    let layers = arch_to_layers(&point.arch, backbone)?;
    let r = mem_usage(&layers, &point.hw, backbone.dw)?;
    let mem_budget = weights.mem_avl.min(point.hw.mem);
    if r.dsp_used <= weights.dsp_avl && r.mem_used <= mem_budget {
        Ok(0.0)
    } else {
        Ok(weights.gamma)
    }
}

/// Terms of the scalarized objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub ce: f64,
    pub latency_ms: f64,
    pub energy: f64,
    pub penalty: f64,
    pub total: f64,
}

pub fn fitness_breakdown(
    point: &CodesignPoint,
    predictors: &dyn Predictors,
    weights: &FitnessWeights,
    backbone: &BackboneSpec,
) -> Result<FitnessBreakdown> {
    let o = predictors.predict(point)?;
    let penalty = resource_penalty(point, weights, backbone)?;
    Ok(FitnessBreakdown {
        ce: o.ce,
        latency_ms: o.latency_ms,
        energy: o.energy,
        penalty,
        total: weights.eta * o.ce + weights.mu * o.latency_ms + weights.lambda * o.energy + penalty,
    })
}

/// `eta * CE + mu * latency + lambda * energy + penalty`.
pub fn fitness(
    point: &CodesignPoint,
    predictors: &dyn Predictors,
    weights: &FitnessWeights,
    backbone: &BackboneSpec,
) -> Result<f64> {
    Ok(fitness_breakdown(point, predictors, weights, backbone)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_space::{canonicalize, HwConfig, Ratio};
    use crate::oracle::{dsp_usage, Oracle, OracleConfig};
    use crate::pareto::Objectives;

    struct Fixed(Objectives<f64>);

    impl Predictors for Fixed {
        fn predict(&self, _: &CodesignPoint) -> Result<Objectives<f64>> {
            Ok(self.0)
        }
    }

    fn point() -> (CodesignPoint, BackboneSpec) {
        let b = BackboneSpec::resnet50();
        let arch = canonicalize(&[Ratio::Half; 16], &b).unwrap();
        let hw = HwConfig { pf: 8, pc: 8, pv: 4, bw: 64, mem: 4 << 20 };
        (CodesignPoint { arch, hw }, b)
    }

    #[test]
    fn weighted_sum() {
        let (p, b) = point();
        let pred = Fixed(Objectives::new(2.0, 4.0, 40.0));
        let w = FitnessWeights::new(1.0, 0.1, 0.001).with_budgets(u64::MAX, u64::MAX);
        assert!((fitness(&p, &pred, &w, &b).unwrap() - 2.44).abs() < 1e-12);
        let w = w.with_budgets(0, 0).with_gamma(1000.0);
        assert!((fitness(&p, &pred, &w, &b).unwrap() - 1002.44).abs() < 1e-9);
    }

    #[test]
    fn budget_boundary_is_inclusive() {
        let (p, b) = point();
        let oracle = Oracle::new(b.clone(), OracleConfig::default());
        let r = oracle.resources(&p).unwrap();
        assert_eq!(r.dsp_used, dsp_usage(&p.hw));
        let exact = FitnessWeights::default().with_budgets(r.dsp_used, r.mem_used);
        assert_eq!(resource_penalty(&p, &exact, &b).unwrap(), 0.0);
        let both = exact.with_budgets(r.dsp_used - 1, r.mem_used - 1);
        assert_eq!(resource_penalty(&p, &both, &b).unwrap(), 1000.0);
        let dsp_only = exact.with_budgets(r.dsp_used - 1, r.mem_used);
        assert_eq!(resource_penalty(&p, &dsp_only, &b).unwrap(), 1000.0);
        let mem_only = exact.with_budgets(r.dsp_used, r.mem_used - 1);
        assert_eq!(resource_penalty(&p, &mem_only, &b).unwrap(), 1000.0);
    }

    #[test]
    fn hardware_buffer_caps_memory_budget() {
        let (mut p, b) = point();
        let oracle = Oracle::new(b.clone(), OracleConfig::default());
        let r = oracle.resources(&p).unwrap();
        let w = FitnessWeights::default().with_budgets(u64::MAX, u64::MAX);
        p.hw.mem = r.mem_used - 1;
        assert_eq!(resource_penalty(&p, &w, &b).unwrap(), w.gamma);
    }

    #[test]
    fn presets() {
        assert_eq!(Preset::A.weights(), (1.0, 0.2, 0.001));
        assert_eq!(Preset::B.weights(), (1.0, 0.1, 0.001));
        assert_eq!(Preset::C.weights(), (1.0, 0.05, 0.001));
        assert_eq!("b".parse::<Preset>().unwrap(), Preset::B);
        for p in Preset::ALL {
            FitnessWeights::from_preset(p).validate().unwrap();
        }
    }

    #[test]
    fn weight_validation() {
        assert!(FitnessWeights::new(0.0, 0.0, 0.0).validate().is_err());
        assert!(FitnessWeights::new(-1.0, 0.1, 0.0).validate().is_err());
        assert!(FitnessWeights::new(1.0, 0.0, 0.0).with_gamma(0.0).validate().is_err());
    }
}
