//! The joint architecture + accelerator design space.
//!
//! An architecture is a ResNet-style backbone whose residual cells each carry
//! an expansion ratio (or are skipped); a hardware configuration fixes the
//! Conv-engine parallelism, the off-chip bandwidth and the buffer capacity.

mod arch;
mod backbone;
mod count;
mod hw;
mod layers;

pub use arch::{
    canonicalize, decode16, decode19, encode16, encode19, enumerate_archs, random_arch,
    random_arch_with, ArchEncoding, CodesignPoint, Ratio, ENCODED_CELLS, ENCODED_POINT_DIM,
};
pub use backbone::{BackboneSpec, BlockSpec};
pub use count::{count_arch_space, count_space, CountMode};
pub use hw::{enumerate_hw_configs, HwConfig, HwDomain, BW_CHOICES, PARALLELISM_CHOICES, PV_CHOICES};
pub use layers::{arch_to_layers, LayerKind, LayerShape};
