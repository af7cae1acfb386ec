use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backbone::BackboneSpec;
use super::hw::HwConfig;
use crate::error::{Error, Result};

/// Number of architecture slots in the numeric encoding.
pub const ENCODED_CELLS: usize = 16;
/// Architecture slots plus PF, PC, PV.
pub const ENCODED_POINT_DIM: usize = ENCODED_CELLS + 3;

/// Expansion ratio of a cell; `Skip` removes the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ratio {
    Skip,
    Half,
    ThreeQuarters,
    Full,
}

impl Ratio {
    pub const ALL: [Ratio; 4] = [Ratio::Skip, Ratio::Half, Ratio::ThreeQuarters, Ratio::Full];
    pub const ACTIVE: [Ratio; 3] = [Ratio::Half, Ratio::ThreeQuarters, Ratio::Full];

    pub fn value(self) -> f64 {
        match self {
            Ratio::Skip => 0.0,
            Ratio::Half => 0.5,
            Ratio::ThreeQuarters => 0.75,
            Ratio::Full => 1.0,
        }
    }

    /// Exact inverse of [`value`](Self::value).
    pub fn from_value(v: f64) -> Option<Ratio> {
        Ratio::ALL.into_iter().find(|r| r.value() == v)
    }

    pub fn is_active(self) -> bool {
        self != Ratio::Skip
    }
}

/// Per-cell expansion ratios of a sub-network, in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ArchEncoding {
    ratios: Vec<Ratio>,
}

impl TryFrom<Vec<f64>> for ArchEncoding {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        let ratios = values
            .iter()
            .map(|&v| {
                Ratio::from_value(v)
                    .ok_or_else(|| Error::InvalidArch(format!("{v} is not an expansion ratio")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ratios })
    }
}

impl From<ArchEncoding> for Vec<f64> {
    fn from(a: ArchEncoding) -> Self {
        a.ratios.iter().map(|r| r.value()).collect()
    }
}

impl ArchEncoding {
    /// Validates `ratios` against `backbone` without repairing them.
    pub fn new(ratios: Vec<Ratio>, backbone: &BackboneSpec) -> Result<Self> {
        let arch = Self { ratios };
        arch.validate(backbone)?;
        Ok(arch)
    }

    pub fn ratios(&self) -> &[Ratio] {
        &self.ratios
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    /// Active cells per block.
    pub fn units_per_block(&self, backbone: &BackboneSpec) -> Vec<usize> {
        backbone
            .block_ranges()
            .into_iter()
            .map(|r| self.ratios[r].iter().filter(|c| c.is_active()).count())
            .collect()
    }

    pub fn validate(&self, backbone: &BackboneSpec) -> Result<()> {
        if self.ratios.len() != backbone.total_cells() {
            return Err(Error::InvalidArch(format!(
                "{} cells given, backbone has {}",
                self.ratios.len(),
                backbone.total_cells()
            )));
        }
        for (i, (block, range)) in backbone.blocks.iter().zip(backbone.block_ranges()).enumerate() {
            let cells = &self.ratios[range];
            let active = cells.iter().take_while(|c| c.is_active()).count();
            if cells[active..].iter().any(|c| c.is_active()) {
                return Err(Error::InvalidArch(format!(
                    "block {i}: skipped cells must trail the active ones"
                )));
            }
            if active < block.min_units as usize {
                return Err(Error::InvalidArch(format!(
                    "block {i}: {active} active cells, need at least {}",
                    block.min_units
                )));
            }
        }
        Ok(())
    }
}

/// A joint architecture + accelerator design.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodesignPoint {
    pub arch: ArchEncoding,
    pub hw: HwConfig,
}

impl CodesignPoint {
    pub fn validate(&self, backbone: &BackboneSpec) -> Result<()> {
        self.arch.validate(backbone)?;
        self.hw.validate()
    }
}

/// Repairs a raw cell vector into canonical form: active cells compacted to
/// the front of each block, and blocks short of `min_units` padded with 0.5.
pub fn canonicalize(raw: &[Ratio], backbone: &BackboneSpec) -> Result<ArchEncoding> {
    if raw.len() != backbone.total_cells() {
        return Err(Error::InvalidArch(format!(
            "{} cells given, backbone has {}",
            raw.len(),
            backbone.total_cells()
        )));
    }
    let mut ratios = Vec::with_capacity(raw.len());
    for (block, range) in backbone.blocks.iter().zip(backbone.block_ranges()) {
        let cells = &raw[range.clone()];
        let mut slice: Vec<Ratio> = cells.iter().copied().filter(|c| c.is_active()).collect();
        while slice.len() < block.min_units as usize {
            slice.push(Ratio::Half);
        }
        slice.resize(range.len(), Ratio::Skip);
        ratios.extend(slice);
    }
    Ok(ArchEncoding { ratios })
}

/// Samples an architecture: unit counts uniform in `[min_units, max_units]`,
/// active ratios uniform over {0.5, 0.75, 1.0}.
pub fn random_arch_with<R: Rng + ?Sized>(rng: &mut R, backbone: &BackboneSpec) -> ArchEncoding {
    let mut ratios = Vec::with_capacity(backbone.total_cells());
    for block in &backbone.blocks {
        let units = rng.gen_range(block.min_units..=block.max_units);
        for u in 0..block.max_units {
            if u < units {
                ratios.push(*Ratio::ACTIVE.choose(rng).expect("non-empty"));
            } else {
                ratios.push(Ratio::Skip);
            }
        }
    }
    ArchEncoding { ratios }
}

pub fn random_arch(seed: u64, backbone: &BackboneSpec) -> ArchEncoding {
    random_arch_with(&mut ChaCha8Rng::seed_from_u64(seed), backbone)
}

/// 16-slot numeric encoding; cells beyond the backbone are zero.
pub fn encode16(arch: &ArchEncoding) -> [f64; ENCODED_CELLS] {
    let mut out = [0.0; ENCODED_CELLS];
    for (o, r) in out.iter_mut().zip(arch.ratios()) {
        *o = r.value();
    }
    out
}

pub fn decode16(values: &[f64], backbone: &BackboneSpec) -> Result<ArchEncoding> {
    let cells = backbone.total_cells();
    if values.len() < cells {
        return Err(Error::DimensionMismatch {
            expected: cells,
            found: values.len(),
        });
    }
    if values[cells..].iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidArch("non-zero value past the backbone's cells".into()));
    }
    let arch = ArchEncoding::try_from(values[..cells].to_vec())?;
    arch.validate(backbone)?;
    Ok(arch)
}

/// 19-dimensional encoding: [`encode16`] followed by PF, PC, PV. BW and MEM
/// are not part of it.
pub fn encode19(point: &CodesignPoint) -> [f64; ENCODED_POINT_DIM] {
    let mut out = [0.0; ENCODED_POINT_DIM];
    out[..ENCODED_CELLS].copy_from_slice(&encode16(&point.arch));
    out[ENCODED_CELLS] = point.hw.pf as f64;
    out[ENCODED_CELLS + 1] = point.hw.pc as f64;
    out[ENCODED_CELLS + 2] = point.hw.pv as f64;
    out
}

/// Inverse of [`encode19`] given the BW and MEM the encoding drops.
pub fn decode19(values: &[f64], backbone: &BackboneSpec, bw: u32, mem: u64) -> Result<CodesignPoint> {
    if values.len() != ENCODED_POINT_DIM {
        return Err(Error::DimensionMismatch {
            expected: ENCODED_POINT_DIM,
            found: values.len(),
        });
    }
    let arch = decode16(&values[..ENCODED_CELLS], backbone)?;
    let as_u32 = |v: f64| -> Result<u32> {
        if v.fract() == 0.0 && v > 0.0 && v <= u32::MAX as f64 {
            Ok(v as u32)
        } else {
            Err(Error::InvalidHwConfig(format!("{v} is not a parallelism level")))
        }
    };
    let hw = HwConfig {
        pf: as_u32(values[ENCODED_CELLS])?,
        pc: as_u32(values[ENCODED_CELLS + 1])?,
        pv: as_u32(values[ENCODED_CELLS + 2])?,
        bw,
        mem,
    };
    hw.validate()?;
    Ok(CodesignPoint { arch, hw })
}

/// Every canonical architecture of `backbone`, blocks varying slowest-first.
pub fn enumerate_archs(backbone: &BackboneSpec) -> Vec<ArchEncoding> {
    let per_block: Vec<Vec<Vec<Ratio>>> = backbone
        .blocks
        .iter()
        .map(|b| {
            let mut slices = Vec::new();
            for units in b.min_units..=b.max_units {
                let combos = 3usize.pow(units);
                for code in 0..combos {
                    // base-3 digits, first cell most significant
                    let mut s = vec![Ratio::Skip; b.max_units as usize];
                    let mut rest = code;
                    for cell in (0..units as usize).rev() {
                        s[cell] = Ratio::ACTIVE[rest % 3];
                        rest /= 3;
                    }
                    slices.push(s);
                }
            }
            slices
        })
        .collect();

    let mut out = vec![Vec::new()];
    for slices in &per_block {
        let mut next = Vec::with_capacity(out.len() * slices.len());
        for prefix in &out {
            for s in slices {
                let mut v: Vec<Ratio> = prefix.clone();
                v.extend_from_slice(s);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(|ratios| ArchEncoding { ratios }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_space::HwConfig;
    use Ratio::*;

    fn one_block(units: u32) -> BackboneSpec {
        BackboneSpec::resnet50_prefix(1, units, 2)
    }

    #[test]
    fn compacts_active_cells() {
        let b = one_block(4);
        let a = canonicalize(&[Half, Skip, ThreeQuarters, Skip], &b).unwrap();
        assert_eq!(a.ratios(), &[Half, ThreeQuarters, Skip, Skip]);
    }

    #[test]
    fn repairs_empty_block_with_half() {
        let b = one_block(4);
        let a = canonicalize(&[Skip; 4], &b).unwrap();
        assert_eq!(a.ratios(), &[Half, Half, Skip, Skip]);
        let a = canonicalize(&[Skip, Skip, Full, Skip], &b).unwrap();
        assert_eq!(a.ratios(), &[Full, Half, Skip, Skip]);
    }

    #[test]
    fn canonical_input_unchanged() {
        let b = BackboneSpec::resnet50();
        let a = random_arch(11, &b);
        assert_eq!(canonicalize(a.ratios(), &b).unwrap(), a);
    }

    #[test]
    fn random_arch_is_deterministic() {
        let b = BackboneSpec::resnet50();
        assert_eq!(random_arch(7, &b), random_arch(7, &b));
    }

    #[test]
    fn random_arch_respects_min_units() {
        let b = BackboneSpec::resnet50();
        for seed in 0..200 {
            let a = random_arch(seed, &b);
            assert!(a.units_per_block(&b).iter().all(|&u| u >= 2));
        }
    }

    #[test]
    fn validate_rejects_interior_skip() {
        let b = one_block(3);
        assert!(ArchEncoding::new(vec![Half, Skip, Half], &b).is_err());
        assert!(ArchEncoding::new(vec![Half, Skip, Skip], &b).is_err());
        assert!(ArchEncoding::new(vec![Half, Full, Skip], &b).is_ok());
    }

    #[test]
    fn encode16_layout() {
        let b = BackboneSpec::resnet50();
        let all_half = ArchEncoding::new(vec![Half; 16], &b).unwrap();
        assert_eq!(encode16(&all_half), [0.5; 16]);

        let mut raw = vec![Full; 16];
        raw[..4].copy_from_slice(&[Half, ThreeQuarters, Skip, Skip]);
        let a = ArchEncoding::new(raw, &b).unwrap();
        assert_eq!(&encode16(&a)[..4], &[0.5, 0.75, 0.0, 0.0]);
        assert_eq!(decode16(&encode16(&a), &b).unwrap(), a);
    }

    #[test]
    fn encode16_pads_small_backbones() {
        let b = one_block(3);
        let a = ArchEncoding::new(vec![Full, Half, Skip], &b).unwrap();
        let e = encode16(&a);
        assert_eq!(&e[..3], &[1.0, 0.5, 0.0]);
        assert!(e[3..].iter().all(|&v| v == 0.0));
        assert_eq!(decode16(&e, &b).unwrap(), a);
    }

    #[test]
    fn encode19_layout_ignores_bw_and_mem() {
        let b = BackboneSpec::resnet50();
        let arch = ArchEncoding::new(vec![Half; 16], &b).unwrap();
        let hw = HwConfig { pf: 64, pc: 32, pv: 8, bw: 64, mem: 1 << 22 };
        let p = CodesignPoint { arch: arch.clone(), hw };
        let e = encode19(&p);
        assert!(e[..16].iter().all(|&v| v == 0.5));
        assert_eq!(&e[16..], &[64.0, 32.0, 8.0]);

        let q = CodesignPoint { arch, hw: HwConfig { bw: 256, mem: 1 << 20, ..hw } };
        assert_eq!(encode19(&q), e);
        assert_eq!(decode19(&e, &b, 64, 1 << 22).unwrap(), p);
    }

    #[test]
    fn enumerate_single_block() {
        let b = one_block(2);
        let all = enumerate_archs(&b);
        assert_eq!(all.len(), 9);
        let b = one_block(3);
        assert_eq!(enumerate_archs(&b).len(), 9 + 27);
        for a in enumerate_archs(&b) {
            a.validate(&b).unwrap();
        }
    }

    #[test]
    fn serde_uses_ratio_values() {
        let b = one_block(2);
        let a = ArchEncoding::new(vec![Half, Full], &b).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[0.5,1.0]");
        let back: ArchEncoding = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<ArchEncoding>("[0.6,1.0]").is_err());
    }
}
