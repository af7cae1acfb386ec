use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Matérn smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Matern32,
    Matern52,
}

impl KernelFamily {
    /// `k(r) / sigma^2` for scaled distance `r`.
    pub fn correlation<T: Real>(self, r: T) -> T {
        match self {
            KernelFamily::Matern32 => {
                let a = T::lit(3f64.sqrt()) * r;
                (T::one() + a) * (-a).exp()
            }
            KernelFamily::Matern52 => {
                let a = T::lit(5f64.sqrt()) * r;
                (T::one() + a + T::lit(5.0 / 3.0) * r * r) * (-a).exp()
            }
        }
    }

    /// `-(dk/dr) / (r sigma^2)`, finite at `r = 0`. The derivative of `k`
    /// with respect to `log l_d` is `sigma^2 * this * (dx_d / l_d)^2`.
    pub fn radial_derivative<T: Real>(self, r: T) -> T {
        match self {
            KernelFamily::Matern32 => T::lit(3.0) * (-(T::lit(3f64.sqrt()) * r)).exp(),
            KernelFamily::Matern52 => {
                let a = T::lit(5f64.sqrt()) * r;
                T::lit(5.0 / 3.0) * (T::one() + a) * (-a).exp()
            }
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matern32" => Ok(KernelFamily::Matern32),
            "matern52" => Ok(KernelFamily::Matern52),
            other => Err(Error::InvalidKernel(format!("unknown family {other:?}"))),
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
        })
    }
}

/// Stationary Matérn kernel with one lengthscale per input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<T> {
    pub family: KernelFamily,
    pub lengthscales: Vec<T>,
    pub signal_variance: T,
}

impl<T: Real> KernelSpec<T> {
    pub fn new(family: KernelFamily, lengthscales: Vec<T>, signal_variance: T) -> Result<Self> {
        let spec = Self {
            family,
            lengthscales,
            signal_variance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn isotropic(family: KernelFamily, dim: usize, lengthscale: T, signal_variance: T) -> Result<Self> {
        Self::new(family, vec![lengthscale; dim], signal_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if self.lengthscales.is_empty() {
            return Err(Error::InvalidKernel("no lengthscales".into()));
        }
        if !self.lengthscales.iter().all(|&l| positive(l)) {
            return Err(Error::InvalidKernel("lengthscales must be positive".into()));
        }
        if !positive(self.signal_variance) {
            return Err(Error::InvalidKernel("signal variance must be positive".into()));
        }
        Ok(())
    }

    /// ARD-scaled Euclidean distance.
    pub fn scaled_distance(&self, x: &[T], x2: &[T]) -> T {
        x.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((&a, &b), &l)| {
                let s = (a - b) / l;
                s * s
            })
            .sum::<T>()
            .sqrt()
    }

    /// Covariance without validation; callers guarantee matching dimensions.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[T], x2: &[T]) -> T {
        self.signal_variance * self.family.correlation(self.scaled_distance(x, x2))
    }
}

/// Covariance `k(x, x2)`.
pub fn kernel_eval<T: Real>(spec: &KernelSpec<T>, x: &[T], x2: &[T]) -> Result<T> {
    spec.validate()?;
    if x.len() != spec.dim() || x2.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: if x.len() != spec.dim() { x.len() } else { x2.len() },
        });
    }
    Ok(spec.eval_unchecked(x, x2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(family: KernelFamily, d: usize) -> KernelSpec<f64> {
        KernelSpec::isotropic(family, d, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_distance_gives_signal_variance() {
        let k = KernelSpec::new(KernelFamily::Matern52, vec![0.3, 2.0], 2.5).unwrap();
        assert_eq!(kernel_eval(&k, &[1.0, -4.0], &[1.0, -4.0]).unwrap(), 2.5);
    }

    #[test]
    fn unit_distance_closed_forms() {
        // r = 1 along one axis
        let m32 = kernel_eval(&unit(KernelFamily::Matern32, 3), &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        let s3 = 3f64.sqrt();
        assert!((m32 - (1.0 + s3) * (-s3).exp()).abs() < 1e-15);
        assert!((m32 - 0.48335).abs() < 1e-5);

        let m52 = kernel_eval(&unit(KernelFamily::Matern52, 3), &[0.0, 0.0, 0.0], &[0.6, 0.8, 0.0]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((m52 - (1.0 + s5 + 5.0 / 3.0) * (-s5).exp()).abs() < 1e-15);
        assert!((m52 - 0.52399).abs() < 1e-5);
    }

    #[test]
    fn symmetric_and_bounded() {
        let k = KernelSpec::new(KernelFamily::Matern32, vec![0.5, 1.5], 3.0).unwrap();
        let (a, b) = ([0.1, 0.7], [-1.2, 2.0]);
        let kab = kernel_eval(&k, &a, &b).unwrap();
        assert_eq!(kab, kernel_eval(&k, &b, &a).unwrap());
        assert!(kab < 3.0 && kab > 0.0);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(KernelSpec::<f64>::new(KernelFamily::Matern32, vec![1.0, 0.0], 1.0).is_err());
        assert!(KernelSpec::<f64>::new(KernelFamily::Matern32, vec![1.0], -1.0).is_err());
        let k = unit(KernelFamily::Matern32, 2);
        assert!(kernel_eval(&k, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn radial_derivative_matches_finite_difference() {
        for family in [KernelFamily::Matern32, KernelFamily::Matern52] {
            for &r in &[0.05f64, 0.5, 1.3, 4.0] {
                let h = 1e-6;
                let dk = (family.correlation(r + h) - family.correlation(r - h)) / (2.0 * h);
                let g = family.radial_derivative(r);
                assert!((-dk / r - g).abs() < 1e-7, "{family} r={r}");
            }
        }
    }

    #[test]
    fn single_precision_kernel() {
        let k = KernelSpec::<f32>::isotropic(KernelFamily::Matern32, 1, 1.0, 1.0).unwrap();
        let v = kernel_eval(&k, &[0.0], &[1.0]).unwrap();
        assert!((v - 0.48335).abs() < 1e-5);
    }
}
