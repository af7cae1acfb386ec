use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::KernelFamily;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Quantity a surrogate predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Ce,
    LatencyMs,
    PowerW,
}

impl TargetKind {
    pub const ALL: [TargetKind; 3] = [TargetKind::Ce, TargetKind::LatencyMs, TargetKind::PowerW];

    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Ce => "ce",
            TargetKind::LatencyMs => "latency_ms",
            TargetKind::PowerW => "power_w",
        }
    }

    /// Matérn 3/2 for the loss, 5/2 for latency and power.
    pub fn default_family(self) -> KernelFamily {
        match self {
            TargetKind::Ce => KernelFamily::Matern32,
            TargetKind::LatencyMs | TargetKind::PowerW => KernelFamily::Matern52,
        }
    }

    /// Training rows out of `n`: 1500 of 2000 for the loss, 3000 of 4600
    /// for latency/power, scaled proportionally.
    pub fn train_count(self, n: usize) -> usize {
        match self {
            TargetKind::Ce => n * 3 / 4,
            TargetKind::LatencyMs | TargetKind::PowerW => n * 15 / 23,
        }
    }

    /// Input dimensionality of the encoding the surrogate consumes.
    pub fn input_dim(self) -> usize {
        match self {
            TargetKind::Ce => crate::design_space::ENCODED_CELLS,
            TargetKind::LatencyMs | TargetKind::PowerW => crate::design_space::ENCODED_POINT_DIM,
        }
    }
}

impl std::str::FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TargetKind::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown target {s:?}")))
    }
}

/// Regression inputs and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub inputs: Matrix<T>,
    pub targets: Vec<T>,
    pub target: TargetKind,
}

impl<T: Real> Dataset<T> {
    pub fn new(inputs: Matrix<T>, targets: Vec<T>, target: TargetKind) -> Result<Self> {
        if inputs.rows() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.rows(),
                found: targets.len(),
            });
        }
        if !inputs.as_slice().iter().chain(&targets).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in dataset".into()));
        }
        let mut seen: HashMap<Vec<u64>, T> = HashMap::new();
        for (i, &y) in targets.iter().enumerate() {
            let key: Vec<u64> = inputs.row(i).iter().map(|v| v.to_f64_lossy().to_bits()).collect();
            if let Some(&prev) = seen.get(&key) {
                if prev != y {
                    return Err(Error::InvalidInput(format!(
                        "row {i} duplicates an earlier input with a different target"
                    )));
                }
            } else {
                seen.insert(key, y);
            }
        }
        Ok(Self { inputs, targets, target })
    }

    pub fn from_rows(rows: &[Vec<T>], targets: Vec<T>, target: TargetKind) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        let flat = rows.iter().flatten().copied().collect();
        Self::new(Matrix::from_rows(rows.len(), d, flat)?, targets, target)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let d = self.dim();
        let mut flat = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            flat.extend_from_slice(self.inputs.row(i));
        }
        Self {
            inputs: Matrix::from_rows(idx.len(), d, flat).expect("consistent shape"),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            target: self.target,
        }
    }

    /// Seeded shuffle, then the first `train` rows train and the rest test.
    pub fn split(&self, train: usize, seed: u64) -> (Self, Self) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let train = train.min(idx.len());
        (self.subset(&idx[..train]), self.subset(&idx[train..]))
    }

    pub fn target_mean(&self) -> T {
        if self.is_empty() {
            return T::zero();
        }
        self.targets.iter().copied().sum::<T>() / T::from_usize(self.len()).unwrap()
    }

    /// Population variance of the targets.
    pub fn target_variance(&self) -> T {
        if self.is_empty() {
            return T::zero();
        }
        let m = self.target_mean();
        self.targets.iter().map(|&y| (y - m) * (y - m)).sum::<T>() / T::from_usize(self.len()).unwrap()
    }
}
