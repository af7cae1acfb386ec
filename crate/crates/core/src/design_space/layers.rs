use serde::{Deserialize, Serialize};

use super::arch::{ArchEncoding, Ratio};
use super::backbone::BackboneSpec;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    ShortcutAdd,
    Pool,
    Fc,
}

/// Tensor geometry of one lowered layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerShape {
    pub kind: LayerKind,
    pub c_in: u32,
    pub c_out: u32,
    pub h_in: u32,
    pub w_in: u32,
    pub h_out: u32,
    pub w_out: u32,
    pub k: u32,
    pub stride: u32,
}

impl LayerShape {
    /// Builds a layer with `h_out = ceil(h_in / stride)`.
    pub fn new(kind: LayerKind, c_in: u32, c_out: u32, h_in: u32, w_in: u32, k: u32, stride: u32) -> Self {
        Self {
            kind,
            c_in,
            c_out,
            h_in,
            w_in,
            h_out: h_in.div_ceil(stride),
            w_out: w_in.div_ceil(stride),
            k,
            stride,
        }
    }

    pub fn is_conv(&self) -> bool {
        self.kind == LayerKind::Conv
    }

    pub fn input_elems(&self) -> u64 {
        self.c_in as u64 * self.h_in as u64 * self.w_in as u64
    }

    pub fn output_elems(&self) -> u64 {
        self.c_out as u64 * self.h_out as u64 * self.w_out as u64
    }

    pub fn weight_elems(&self) -> u64 {
        self.c_in as u64 * self.c_out as u64 * (self.k as u64).pow(2)
    }
}

/// Bottleneck middle width `round(E * out / 4)`.
pub(crate) fn bottleneck_width(ratio: Ratio, out_channels: u32) -> u32 {
    (ratio.value() * out_channels as f64 / 4.0).round() as u32
}

/// Lowers an architecture to the sequential layer list the accelerator runs:
/// stem, one bottleneck unit (1x1, 3x3, 1x1 conv + shortcut add) per active
/// cell, global pool, classifier.
pub fn arch_to_layers(arch: &ArchEncoding, backbone: &BackboneSpec) -> Result<Vec<LayerShape>> {
    arch.validate(backbone)?;
    let mut layers = backbone.stem_layers.clone();
    let mut channels = backbone.stem_out_channels();
    let (mut h, mut w) = backbone.stem_out_hw();
    for (block, range) in backbone.blocks.iter().zip(backbone.block_ranges()) {
        let cells = &arch.ratios()[range];
        for (u, &ratio) in cells.iter().enumerate() {
            if !ratio.is_active() {
                continue;
            }
            let mid = bottleneck_width(ratio, block.out_channels);
            let stride = if u == 0 { block.first_unit_stride } else { 1 };
            let reduce = LayerShape::new(LayerKind::Conv, channels, mid, h, w, 1, 1);
            let spatial = LayerShape::new(LayerKind::Conv, mid, mid, h, w, 3, stride);
            let (ho, wo) = (spatial.h_out, spatial.w_out);
            let expand = LayerShape::new(LayerKind::Conv, mid, block.out_channels, ho, wo, 1, 1);
            let add = LayerShape::new(
                LayerKind::ShortcutAdd,
                block.out_channels,
                block.out_channels,
                ho,
                wo,
                1,
                1,
            );
            layers.extend([reduce, spatial, expand, add]);
            channels = block.out_channels;
            h = ho;
            w = wo;
        }
    }
    // Global average pool collapses the remaining map to 1x1.
    layers.push(LayerShape {
        kind: LayerKind::Pool,
        c_in: channels,
        c_out: channels,
        h_in: h,
        w_in: w,
        h_out: 1,
        w_out: 1,
        k: h.max(w),
        stride: h.max(w),
    });
    layers.push(LayerShape::new(LayerKind::Fc, channels, backbone.num_classes, 1, 1, 1, 1));
    Ok(layers)
}
