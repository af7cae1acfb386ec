//! TOML run configuration. Every field has a default, so an empty file (or no
//! file) describes the full ResNet-50 space with the 300-point hardware domain.

use std::path::{Path, PathBuf};

use codesign_core::design_space::{BackboneSpec, HwDomain};
use codesign_core::explorer::{FitnessWeights, GaConfig, Preset};
use codesign_core::gp::KernelFamily;
use codesign_core::oracle::{Oracle, OracleConfig};
use codesign_core::pareto::{DEFAULT_CAP, DEFAULT_EPSILON};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backbone: BackboneConfig,
    pub hw: HwDomain,
    pub oracle: OracleConfig,
    pub sample: SampleConfig,
    pub gp: GpConfig,
    pub ga: GaConfig,
    pub weights: WeightsConfig,
    pub pareto: ParetoConfig,
    pub paths: PathsConfig,
}

/// A prefix of the ResNet-50 stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackboneConfig {
    pub blocks: usize,
    pub max_units: u32,
    pub min_units: u32,
    /// Bytes per element.
    pub dw: u32,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        Self {
            blocks: 4,
            max_units: 4,
            min_units: 2,
            dw: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub n_loss: usize,
    pub n_perf: usize,
    pub seed: u64,
    /// External loss samples to use instead of the synthetic loss.
    pub loss_input: Option<PathBuf>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n_loss: 2000,
            n_perf: 4600,
            seed: 0,
            loss_input: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    /// Overrides the per-target default kernel.
    pub family: Option<KernelFamily>,
    pub iters: usize,
    pub step_size: f64,
    /// Seed of the train/test shuffle.
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            family: None,
            iters: 50,
            step_size: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsConfig {
    pub preset: Preset,
    /// Explicit `[eta, mu, lambda]`; wins over `preset`.
    pub custom: Option<[f64; 3]>,
    pub gamma: f64,
    pub dsp_budget: u64,
    pub mem_budget: u64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self {
            preset: Preset::B,
            custom: None,
            gamma: FitnessWeights::DEFAULT_GAMMA,
            dsp_budget: FitnessWeights::DEFAULT_DSP,
            mem_budget: FitnessWeights::DEFAULT_MEM,
        }
    }
}

impl WeightsConfig {
    pub fn fitness_weights(&self) -> FitnessWeights {
        let base = match self.custom {
            Some([eta, mu, lambda]) => FitnessWeights::new(eta, mu, lambda),
            None => FitnessWeights::from_preset(self.preset),
        };
        base.with_gamma(self.gamma).with_budgets(self.dsp_budget, self.mem_budget)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParetoConfig {
    /// Largest space `pareto` will enumerate.
    pub cap: u64,
    pub epsilon: f64,
}

impl Default for ParetoConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Default file locations, relative to the working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub loss_samples: PathBuf,
    pub perf_samples: PathBuf,
    pub model_ce: PathBuf,
    pub model_latency: PathBuf,
    pub model_power: PathBuf,
    pub explore_result: PathBuf,
    pub frontier: PathBuf,
    pub plot_data: PathBuf,
    pub report: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            loss_samples: "loss_samples.csv".into(),
            perf_samples: "perf_samples.csv".into(),
            model_ce: "model_ce.json".into(),
            model_latency: "model_latency_ms.json".into(),
            model_power: "model_power_w.json".into(),
            explore_result: "explore.json".into(),
            frontier: "frontier.csv".into(),
            plot_data: "plot_data.csv".into(),
            report: "report.json".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid_input(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::invalid_input(format!("{}: {e}", path.display())))
    }

    /// Applies `--seed` to every seeded stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sample.seed = seed;
        self.gp.seed = seed;
        self.ga.rng_seed = seed;
        self
    }

    pub fn backbone(&self) -> Result<BackboneSpec, CliError> {
        let b = &self.backbone;
        if !(1..=4).contains(&b.blocks) {
            return Err(CliError::invalid_input(format!(
                "backbone.blocks must be 1..=4, got {}",
                b.blocks
            )));
        }
        if b.dw == 0 {
            return Err(CliError::invalid_input("backbone.dw must be >= 1"));
        }
        let mut spec = BackboneSpec::resnet50_prefix(b.blocks, b.max_units, b.min_units);
        spec.dw = b.dw;
        spec.validate()?;
        Ok(spec)
    }

    pub fn oracle(&self) -> Result<Oracle, CliError> {
        let c = &self.oracle;
        if !(c.clock_mhz > 0.0 && c.p_static_w >= 0.0 && c.p_dsp_w >= 0.0) {
            return Err(CliError::invalid_input("oracle constants must be positive"));
        }
        Ok(Oracle::new(self.backbone()?, *c))
    }
}
