//! Random design samples scored by the oracle: the training data for the
//! surrogates.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::design_space::{encode16, encode19, random_arch_with, ArchEncoding, CodesignPoint, HwDomain};
use crate::error::Result;
use crate::gp::{Dataset, TargetKind};
use crate::linalg::Matrix;
use crate::oracle::{synthetic_ce, Oracle};

/// One row of a loss-sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSample {
    pub encoding: [f64; 16],
    pub ce: f64,
}

/// One row of a perf-sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfSample {
    pub point: CodesignPoint,
    pub latency_ms: f64,
    pub power_w: f64,
}

pub fn sample_loss<R: Rng + ?Sized>(rng: &mut R, oracle: &Oracle, n: usize) -> Vec<LossSample> {
    (0..n)
        .map(|_| {
            let arch: ArchEncoding = random_arch_with(rng, &oracle.backbone);
            LossSample {
                encoding: encode16(&arch),
                ce: synthetic_ce(&arch, &oracle.backbone),
            }
        })
        .collect()
}

pub fn sample_perf<R: Rng + ?Sized>(
    rng: &mut R,
    oracle: &Oracle,
    domain: &HwDomain,
    n: usize,
) -> Result<Vec<PerfSample>> {
    let domain = domain.normalized()?;
    (0..n)
        .map(|_| {
            let arch = random_arch_with(rng, &oracle.backbone);
            let hw = domain.sample(rng);
            let point = CodesignPoint { arch, hw };
            let e = oracle.evaluate(&point)?;
            Ok(PerfSample {
                point,
                latency_ms: e.latency_ms,
                power_w: e.power_w,
            })
        })
        .collect()
}

/// Loss and perf samples drawn from one seeded stream, loss first.
pub fn sample_both(
    oracle: &Oracle,
    domain: &HwDomain,
    n_loss: usize,
    n_perf: usize,
    seed: u64,
) -> Result<(Vec<LossSample>, Vec<PerfSample>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loss = sample_loss(&mut rng, oracle, n_loss);
    let perf = sample_perf(&mut rng, oracle, domain, n_perf)?;
    Ok((loss, perf))
}

pub fn loss_dataset(samples: &[LossSample]) -> Result<Dataset<f64>> {
    let flat: Vec<f64> = samples.iter().flat_map(|s| s.encoding).collect();
    let x = Matrix::from_rows(samples.len(), 16, flat)?;
    Dataset::new(x, samples.iter().map(|s| s.ce).collect(), TargetKind::Ce)
}

/// 19-dimensional dataset for `target` (latency or power).
///
/// Samples that differ only in BW or MEM share an encoding; each such group
/// becomes one row carrying the group's mean target, at the position of its
/// first member.
pub fn perf_dataset(samples: &[PerfSample], target: TargetKind) -> Result<Dataset<f64>> {
    let mut groups: Vec<([f64; 19], f64, usize)> = Vec::new();
    let mut index: HashMap<[u64; 19], usize> = HashMap::new();
    for s in samples {
        let x = encode19(&s.point);
        let y = match target {
            TargetKind::PowerW => s.power_w,
            _ => s.latency_ms,
        };
        match index.entry(x.map(f64::to_bits)) {
            Entry::Occupied(e) => {
                let g = &mut groups[*e.get()];
                g.1 += y;
                g.2 += 1;
            }
            Entry::Vacant(e) => {
                e.insert(groups.len());
                groups.push((x, y, 1));
            }
        }
    }
    let flat: Vec<f64> = groups.iter().flat_map(|g| g.0).collect();
    let x = Matrix::from_rows(groups.len(), 19, flat)?;
    let y = groups.iter().map(|g| g.1 / g.2 as f64).collect();
    Dataset::new(x, y, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_space::{BackboneSpec, HwConfig};
    use crate::oracle::OracleConfig;

    #[test]
    fn sampling_is_seeded() {
        let o = Oracle::new(BackboneSpec::resnet50(), OracleConfig::default());
        let a = sample_both(&o, &HwDomain::default(), 5, 7, 11).unwrap();
        let b = sample_both(&o, &HwDomain::default(), 5, 7, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.0.len(), a.1.len()), (5, 7));
        assert_ne!(a, sample_both(&o, &HwDomain::default(), 5, 7, 12).unwrap());
    }

    #[test]
    fn bandwidth_twins_are_averaged() {
        let o = Oracle::new(BackboneSpec::resnet50(), OracleConfig::default());
        let arch = crate::design_space::random_arch(1, &o.backbone);
        let hw = HwConfig { pf: 8, pc: 8, pv: 4, bw: 32, mem: 4 << 20 };
        let twin = HwConfig { bw: 256, ..hw };
        let mk = |hw: HwConfig, lat: f64| PerfSample {
            point: CodesignPoint { arch: arch.clone(), hw },
            latency_ms: lat,
            power_w: 20.0,
        };
        let d = perf_dataset(&[mk(hw, 3.0), mk(twin, 5.0)], TargetKind::LatencyMs).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.targets, vec![4.0]);
    }
}
