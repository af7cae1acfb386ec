//! Deterministic stand-ins for the physical accelerator.
//!
//! The DSP and buffer formulas are the accelerator's resource model. Latency
//! is a per-layer roofline of the single sequential Conv engine, power is a
//! static floor plus utilization-weighted DSP power, and the loss is a fixed
//! closed form in the architecture's capacity.

use serde::{Deserialize, Serialize};

use crate::design_space::{arch_to_layers, ArchEncoding, BackboneSpec, CodesignPoint, HwConfig, LayerShape};
use crate::error::{Error, Result};

/// Oracle constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub clock_mhz: f64,
    pub p_static_w: f64,
    pub p_dsp_w: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            clock_mhz: 200.0,
            p_static_w: 20.0,
            p_dsp_w: 0.015,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub dsp_used: u64,
    pub mem_in: u64,
    pub mem_weight: u64,
    pub mem_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub latency_ms: f64,
    pub power_w: f64,
    pub per_layer_cycles: Vec<u64>,
}

/// `(PC * PF * PV) / 2`.
pub fn dsp_usage(hw: &HwConfig) -> u64 {
    hw.pc as u64 * hw.pf as u64 * hw.pv as u64 / 2
}

/// Buffer footprint: the largest conv input map plus `PF` filters of the
/// widest conv, doubled for ping-pong buffering.
pub fn mem_usage(layers: &[LayerShape], hw: &HwConfig, dw: u32) -> Result<ResourceReport> {
    let convs = layers.iter().filter(|l| l.is_conv());
    let (mut mem_in, mut mem_weight, mut any) = (0u64, 0u64, false);
    for l in convs {
        any = true;
        mem_in = mem_in.max(l.input_elems());
        mem_weight = mem_weight.max(l.c_in as u64 * hw.pf as u64 * (l.k as u64).pow(2));
    }
    if !any {
        return Err(Error::InvalidInput("layer list has no conv layers".into()));
    }
    let (mem_in, mem_weight) = (mem_in * dw as u64, mem_weight * dw as u64);
    Ok(ResourceReport {
        dsp_used: dsp_usage(hw),
        mem_in,
        mem_weight,
        mem_used: 2 * (mem_in + mem_weight),
    })
}

/// Cycle split of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerCycles {
    pub compute: u64,
    pub memory: u64,
}

impl LayerCycles {
    pub fn total(&self) -> u64 {
        self.compute.max(self.memory)
    }
}

pub fn layer_cycles(layer: &LayerShape, hw: &HwConfig, dw: u32) -> LayerCycles {
    let pv = hw.pv as u64;
    if !layer.is_conv() {
        // Pool/shortcut/fc units sit beside the Conv engine, PV lanes wide.
        let c = layer.output_elems().div_ceil(pv);
        return LayerCycles { compute: c, memory: 0 };
    }
    let spatial = layer.h_out as u64 * layer.w_out as u64;
    let compute = (layer.c_out as u64).div_ceil(hw.pf as u64)
        * (layer.c_in as u64).div_ceil(hw.pc as u64)
        * spatial.div_ceil(pv)
        * (layer.k as u64).pow(2);
    let bytes = (layer.input_elems() + layer.weight_elems() + layer.output_elems()) * dw as u64;
    let memory = (bytes * 8).div_ceil(hw.bw as u64);
    LayerCycles { compute, memory }
}

fn cycles_to_ms(cycles: u64, clock_mhz: f64) -> f64 {
    cycles as f64 / (clock_mhz * 1000.0)
}

/// Latency of running `layers` back to back on the Conv engine.
pub fn latency(layers: &[LayerShape], hw: &HwConfig, dw: u32, clock_mhz: f64) -> (f64, Vec<u64>) {
    let per_layer: Vec<u64> = layers.iter().map(|l| layer_cycles(l, hw, dw).total()).collect();
    let total: u64 = per_layer.iter().sum();
    (cycles_to_ms(total, clock_mhz), per_layer)
}

/// `P_static + P_dsp * DSP * utilization`, utilization being the compute
/// share of all cycles.
pub fn power(layers: &[LayerShape], hw: &HwConfig, dw: u32, cfg: &OracleConfig) -> f64 {
    let (mut compute, mut total) = (0u64, 0u64);
    for l in layers {
        let c = layer_cycles(l, hw, dw);
        compute += c.compute;
        total += c.total();
    }
    let utilization = if total == 0 { 0.0 } else { compute as f64 / total as f64 };
    cfg.p_static_w + cfg.p_dsp_w * dsp_usage(hw) as f64 * utilization
}

pub fn perf_report(layers: &[LayerShape], hw: &HwConfig, dw: u32, cfg: &OracleConfig) -> PerfReport {
    let (latency_ms, per_layer_cycles) = latency(layers, hw, dw, cfg.clock_mhz);
    PerfReport {
        latency_ms,
        power_w: power(layers, hw, dw, cfg),
        per_layer_cycles,
    }
}

/// Closed-form loss: `1 + 2.5 exp(-S/5) + 0.1 sigma_u`, with `S` the ratio sum
/// and `sigma_u` the population standard deviation of per-block unit counts.
pub fn synthetic_ce(arch: &ArchEncoding, backbone: &BackboneSpec) -> f64 {
    let s: f64 = arch.ratios().iter().map(|r| r.value()).sum();
    let units = arch.units_per_block(backbone);
    let n = units.len().max(1) as f64;
    let mean = units.iter().sum::<usize>() as f64 / n;
    let var = units.iter().map(|&u| (u as f64 - mean).powi(2)).sum::<f64>() / n;
    1.0 + 2.5 * (-s / 5.0).exp() + 0.1 * var.sqrt()
}

/// All oracle quantities for one design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEval {
    pub ce: f64,
    pub latency_ms: f64,
    pub power_w: f64,
    pub resources: ResourceReport,
}

/// Bundles a backbone with the oracle constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    pub backbone: BackboneSpec,
    pub config: OracleConfig,
}

impl Oracle {
    pub fn new(backbone: BackboneSpec, config: OracleConfig) -> Self {
        Self { backbone, config }
    }

    pub fn evaluate(&self, point: &CodesignPoint) -> Result<OracleEval> {
        let layers = arch_to_layers(&point.arch, &self.backbone)?;
        let dw = self.backbone.dw;
        let (latency_ms, _) = latency(&layers, &point.hw, dw, self.config.clock_mhz);
        Ok(OracleEval {
            ce: synthetic_ce(&point.arch, &self.backbone),
            latency_ms,
            power_w: power(&layers, &point.hw, dw, &self.config),
            resources: mem_usage(&layers, &point.hw, dw)?,
        })
    }

    pub fn resources(&self, point: &CodesignPoint) -> Result<ResourceReport> {
        let layers = arch_to_layers(&point.arch, &self.backbone)?;
        mem_usage(&layers, &point.hw, self.backbone.dw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_space::{canonicalize, random_arch, LayerKind, Ratio};

    fn hw(pf: u32, pc: u32, pv: u32, bw: u32) -> HwConfig {
        HwConfig { pf, pc, pv, bw, mem: 4 << 20 }
    }

    fn uniform(b: &BackboneSpec, units: usize, r: Ratio) -> ArchEncoding {
        let mut raw = vec![Ratio::Skip; b.total_cells()];
        for range in b.block_ranges() {
            raw[range.start..range.start + units].fill(r);
        }
        canonicalize(&raw, b).unwrap()
    }

    #[test]
    fn dsp_formula() {
        assert_eq!(dsp_usage(&hw(8, 8, 4, 32)), 128);
        assert_eq!(dsp_usage(&hw(128, 128, 16, 32)), 131_072);
        assert_eq!(dsp_usage(&hw(64, 32, 8, 32)), 8192);
    }

    #[test]
    fn mem_single_layer() {
        let l = LayerShape::new(LayerKind::Conv, 64, 64, 56, 56, 3, 1);
        let r = mem_usage(&[l], &hw(32, 8, 4, 64), 1).unwrap();
        assert_eq!((r.mem_in, r.mem_weight, r.mem_used), (200_704, 18_432, 438_272));
        let r = mem_usage(&[l], &hw(64, 8, 4, 64), 1).unwrap();
        assert_eq!(r.mem_weight, 36_864);
    }

    #[test]
    fn mem_needs_a_conv() {
        let l = LayerShape::new(LayerKind::Pool, 64, 64, 56, 56, 3, 2);
        assert!(mem_usage(&[l], &hw(8, 8, 4, 64), 1).is_err());
    }

    #[test]
    fn hand_evaluated_layer() {
        let l = LayerShape::new(LayerKind::Conv, 8, 8, 4, 4, 1, 1);
        let c = layer_cycles(&l, &hw(8, 8, 4, 64), 1);
        assert_eq!(c.compute, 4);
        // (128 + 64 + 128) bytes * 8 / 64
        assert_eq!(c.memory, 40);
        assert_eq!(c.total(), 40);
    }

    #[test]
    fn doubling_pf_halves_compute() {
        let l = LayerShape::new(LayerKind::Conv, 64, 128, 28, 28, 3, 1);
        let a = layer_cycles(&l, &hw(16, 8, 4, 64), 1).compute;
        let b = layer_cycles(&l, &hw(32, 8, 4, 64), 1).compute;
        assert_eq!(a, 2 * b);
    }

    #[test]
    fn unbounded_bandwidth_is_compute_bound() {
        let l = LayerShape::new(LayerKind::Conv, 64, 128, 28, 28, 3, 1);
        let wide = HwConfig { bw: u32::MAX, ..hw(8, 8, 4, 64) };
        let c = layer_cycles(&l, &wide, 1);
        assert_eq!(c.total(), c.compute);
    }

    #[test]
    fn latency_consistent_with_cycles() {
        let b = BackboneSpec::resnet50();
        let layers = arch_to_layers(&random_arch(3, &b), &b).unwrap();
        let r = perf_report(&layers, &hw(32, 16, 8, 128), 1, &OracleConfig::default());
        let total: u64 = r.per_layer_cycles.iter().sum();
        assert_eq!(r.latency_ms, total as f64 / 200_000.0);
        assert!(r.latency_ms > 0.0);
        assert!(r.power_w >= 20.0);
    }

    #[test]
    fn power_at_full_utilization() {
        // compute-bound single layer: utilization exactly 1
        let l = LayerShape::new(LayerKind::Conv, 64, 64, 56, 56, 3, 1);
        let h = hw(8, 8, 4, 256);
        let c = layer_cycles(&l, &h, 1);
        assert!(c.compute > c.memory);
        let p = power(&[l], &h, 1, &OracleConfig::default());
        assert!((p - 21.92).abs() < 1e-12);

        let bigger = hw(16, 8, 4, 256);
        assert!(layer_cycles(&l, &bigger, 1).compute > layer_cycles(&l, &bigger, 1).memory);
        assert!(power(&[l], &bigger, 1, &OracleConfig::default()) > p);
    }

    #[test]
    fn memory_bound_power_near_floor() {
        // 1x1 conv with huge maps and tiny bandwidth
        let l = LayerShape::new(LayerKind::Conv, 8, 8, 224, 224, 1, 1);
        let p = power(&[l], &hw(8, 8, 16, 32), 1, &OracleConfig::default());
        assert!(p > 20.0 && p < 20.2, "{p}");
    }

    #[test]
    fn synthetic_ce_closed_forms() {
        let b = BackboneSpec::resnet50();
        let min = uniform(&b, 2, Ratio::Half);
        assert!((synthetic_ce(&min, &b) - (1.0 + 2.5 * (-0.8f64).exp())).abs() < 1e-12);
        assert!((synthetic_ce(&min, &b) - 2.1233).abs() < 1e-4);
        let max = uniform(&b, 4, Ratio::Full);
        assert!((synthetic_ce(&max, &b) - 1.1019).abs() < 1e-4);
    }

    #[test]
    fn synthetic_ce_penalizes_unbalanced_depth() {
        let b = BackboneSpec::resnet50();
        let mut raw = vec![Ratio::Half; 16];
        raw[14] = Ratio::Skip;
        raw[15] = Ratio::Skip;
        let arch = canonicalize(&raw, &b).unwrap();
        // units (4,4,4,2): sigma = sqrt(0.75)
        let s: f64 = 14.0 * 0.5;
        let expected = 1.0 + 2.5 * (-s / 5.0).exp() + 0.1 * 0.75f64.sqrt();
        assert!((synthetic_ce(&arch, &b) - expected).abs() < 1e-12);
    }
}
