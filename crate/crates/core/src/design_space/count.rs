use serde::{Deserialize, Serialize};

use super::backbone::BackboneSpec;
use super::hw::HwDomain;
use crate::error::{Error, Result};

/// How architectures are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// `3^cells`: every cell picks one of three ratios, depth fixed.
    RatioOnly,
    /// Canonical architectures with per-block unit counts in `[min, U]`.
    DepthAware,
}

const LIMIT: u64 = i64::MAX as u64;

fn mul(a: u64, b: u64) -> Result<u64> {
    a.checked_mul(b).filter(|&v| v <= LIMIT).ok_or(Error::CountOverflow)
}

fn pow3(e: u32) -> Result<u64> {
    (0..e).try_fold(1u64, |acc, _| mul(acc, 3))
}

/// Number of architectures under `mode`.
pub fn count_arch_space(backbone: &BackboneSpec, mode: CountMode) -> Result<u64> {
    backbone.validate()?;
    match mode {
        CountMode::RatioOnly => pow3(backbone.total_cells() as u32),
        CountMode::DepthAware => backbone.blocks.iter().try_fold(1u64, |acc, b| {
            let per_block = (b.min_units..=b.max_units).try_fold(0u64, |s, u| {
                s.checked_add(pow3(u)?).filter(|&v| v <= LIMIT).ok_or(Error::CountOverflow)
            })?;
            mul(acc, per_block)
        }),
    }
}

/// Architectures times hardware configurations.
pub fn count_space(backbone: &BackboneSpec, domain: &HwDomain, mode: CountMode) -> Result<u64> {
    mul(count_arch_space(backbone, mode)?, domain.size()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_space::enumerate_archs;

    #[test]
    fn ratio_only_counts() {
        let b = BackboneSpec::resnet50();
        assert_eq!(count_arch_space(&b, CountMode::RatioOnly).unwrap(), 43_046_721);
        assert_eq!(
            count_space(&b, &HwDomain::default(), CountMode::RatioOnly).unwrap(),
            12_914_016_300
        );
    }

    #[test]
    fn depth_aware_single_block() {
        let b = BackboneSpec::resnet50_prefix(1, 2, 2);
        let one = HwDomain { pf: vec![8], pc: vec![8], pv: vec![4], bw: vec![32], mem: vec![1] };
        assert_eq!(count_space(&b, &one, CountMode::DepthAware).unwrap(), 9);
    }

    #[test]
    fn depth_aware_default_backbone() {
        // (3^2 + 3^3 + 3^4)^4
        let b = BackboneSpec::resnet50();
        assert_eq!(count_arch_space(&b, CountMode::DepthAware).unwrap(), 117u64.pow(4));
    }

    #[test]
    fn depth_aware_matches_enumeration() {
        for (blocks, units) in [(1, 2), (1, 5), (2, 3), (3, 2), (1, 6)] {
            let b = BackboneSpec::resnet50_prefix(blocks, units, 2);
            let counted = count_arch_space(&b, CountMode::DepthAware).unwrap();
            assert_eq!(counted, enumerate_archs(&b).len() as u64, "{blocks}x{units}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(pow3(40), Err(Error::CountOverflow)));
        assert_eq!(pow3(39).unwrap(), 3u64.pow(39));
    }
}
