use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed PF and PC values.
pub const PARALLELISM_CHOICES: [u32; 5] = [8, 16, 32, 64, 128];
pub const PV_CHOICES: [u32; 3] = [4, 8, 16];
/// Off-chip bandwidth choices, bits per cycle.
pub const BW_CHOICES: [u32; 4] = [32, 64, 128, 256];

/// Default on-chip buffer capacity, bytes.
pub const DEFAULT_MEM: u64 = 4 << 20;

/// Accelerator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HwConfig {
    /// Filter parallelism.
    pub pf: u32,
    /// Channel parallelism.
    pub pc: u32,
    /// Vector (spatial) parallelism.
    pub pv: u32,
    /// Off-chip bandwidth, bits per cycle.
    pub bw: u32,
    /// On-chip buffer capacity, bytes.
    pub mem: u64,
}

impl HwConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: u32, allowed: &[u32]| {
            if allowed.contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidHwConfig(format!("{name}={v} not in {allowed:?}")))
            }
        };
        check("pf", self.pf, &PARALLELISM_CHOICES)?;
        check("pc", self.pc, &PARALLELISM_CHOICES)?;
        check("pv", self.pv, &PV_CHOICES)?;
        check("bw", self.bw, &BW_CHOICES)?;
        if self.mem == 0 {
            return Err(Error::InvalidHwConfig("mem must be positive".into()));
        }
        Ok(())
    }
}

/// Candidate values per hardware field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HwDomain {
    pub pf: Vec<u32>,
    pub pc: Vec<u32>,
    pub pv: Vec<u32>,
    pub bw: Vec<u32>,
    pub mem: Vec<u64>,
}

impl Default for HwDomain {
    /// 5 x 5 x 3 x 4 = 300 configurations with a single buffer size.
    fn default() -> Self {
        Self {
            pf: PARALLELISM_CHOICES.to_vec(),
            pc: PARALLELISM_CHOICES.to_vec(),
            pv: PV_CHOICES.to_vec(),
            bw: BW_CHOICES.to_vec(),
            mem: vec![DEFAULT_MEM],
        }
    }
}

fn sorted_unique<T: Ord + Copy>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

impl HwDomain {
    /// Sorted, de-duplicated copy after checking every value is legal.
    pub fn normalized(&self) -> Result<Self> {
        let fields: [(&str, &[u32], &[u32]); 4] = [
            ("pf", &self.pf, &PARALLELISM_CHOICES),
            ("pc", &self.pc, &PARALLELISM_CHOICES),
            ("pv", &self.pv, &PV_CHOICES),
            ("bw", &self.bw, &BW_CHOICES),
        ];
        for (name, values, allowed) in fields {
            if values.is_empty() {
                return Err(Error::InvalidDomain(format!("{name} has no candidate values")));
            }
            if let Some(v) = values.iter().find(|v| !allowed.contains(v)) {
                return Err(Error::InvalidDomain(format!("{name}={v} not in {allowed:?}")));
            }
        }
        if self.mem.is_empty() {
            return Err(Error::InvalidDomain("mem has no candidate values".into()));
        }
        if self.mem.contains(&0) {
            return Err(Error::InvalidDomain("mem must be positive".into()));
        }
        Ok(Self {
            pf: sorted_unique(&self.pf),
            pc: sorted_unique(&self.pc),
            pv: sorted_unique(&self.pv),
            bw: sorted_unique(&self.bw),
            mem: sorted_unique(&self.mem),
        })
    }

    /// Number of distinct configurations.
    pub fn size(&self) -> Result<u64> {
        let d = self.normalized()?;
        Ok([d.pf.len(), d.pc.len(), d.pv.len(), d.bw.len(), d.mem.len()]
            .iter()
            .map(|&n| n as u64)
            .product())
    }

    /// Uniform draw, one field at a time. Assumes a normalized domain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HwConfig {
        HwConfig {
            pf: *self.pf.choose(rng).expect("non-empty"),
            pc: *self.pc.choose(rng).expect("non-empty"),
            pv: *self.pv.choose(rng).expect("non-empty"),
            bw: *self.bw.choose(rng).expect("non-empty"),
            mem: *self.mem.choose(rng).expect("non-empty"),
        }
    }
}

/// Cartesian product in lexicographic (pf, pc, pv, bw, mem) order.
pub fn enumerate_hw_configs(domain: &HwDomain) -> Result<Vec<HwConfig>> {
    let d = domain.normalized()?;
    let mut out = Vec::with_capacity(d.pf.len() * d.pc.len() * d.pv.len() * d.bw.len() * d.mem.len());
    for &pf in &d.pf {
        for &pc in &d.pc {
            for &pv in &d.pv {
                for &bw in &d.bw {
                    for &mem in &d.mem {
                        out.push(HwConfig { pf, pc, pv, bw, mem });
                    }
                }
            }
        }
    }
    Ok(out)
}
