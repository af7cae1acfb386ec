use serde::{Deserialize, Serialize};

use super::layers::{LayerKind, LayerShape};
use crate::error::{Error, Result};

/// One residual stage of the backbone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    /// Number of searchable cells (`U_i`).
    pub max_units: u32,
    pub min_units: u32,
    pub out_channels: u32,
    pub feature_h: u32,
    pub feature_w: u32,
    pub first_unit_stride: u32,
}

/// Fixed skeleton of the searchable network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneSpec {
    pub blocks: Vec<BlockSpec>,
    pub stem_layers: Vec<LayerShape>,
    pub input_resolution: u32,
    /// Bytes per element on the accelerator.
    pub dw: u32,
    pub num_classes: u32,
}

const RESNET50_OUT: [u32; 4] = [256, 512, 1024, 2048];
const RESNET50_FEATURE: [u32; 4] = [56, 28, 14, 7];
const RESNET50_STRIDE: [u32; 4] = [1, 2, 2, 2];

impl Default for BackboneSpec {
    fn default() -> Self {
        Self::resnet50()
    }
}

impl BackboneSpec {
    /// ResNet-50-style skeleton: 224 px input, 7x7/2 stem conv, 3x3/2 pool and
    /// four stages of four cells each.
    pub fn resnet50() -> Self {
        Self::resnet50_prefix(4, 4, 2)
    }

    /// The first `n_blocks` stages of [`resnet50`](Self::resnet50) with
    /// `max_units`/`min_units` cells per stage. Used for exhaustively
    /// enumerable spaces.
    pub fn resnet50_prefix(n_blocks: usize, max_units: u32, min_units: u32) -> Self {
        let n = n_blocks.min(4);
        let blocks = (0..n)
            .map(|i| BlockSpec {
                max_units,
                min_units,
                out_channels: RESNET50_OUT[i],
                feature_h: RESNET50_FEATURE[i],
                feature_w: RESNET50_FEATURE[i],
                first_unit_stride: RESNET50_STRIDE[i],
            })
            .collect();
        Self {
            blocks,
            stem_layers: vec![
                LayerShape::new(LayerKind::Conv, 3, 64, 224, 224, 7, 2),
                LayerShape::new(LayerKind::Pool, 64, 64, 112, 112, 3, 2),
            ],
            input_resolution: 224,
            dw: 1,
            num_classes: 1000,
        }
    }

    pub fn total_cells(&self) -> usize {
        self.blocks.iter().map(|b| b.max_units as usize).sum()
    }

    /// Cell index range owned by each block.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|b| {
                let r = start..start + b.max_units as usize;
                start = r.end;
                r
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidBackbone(m));
        if self.blocks.is_empty() {
            return bad("no blocks".into());
        }
        if self.total_cells() > super::ENCODED_CELLS {
            return bad(format!(
                "{} cells exceed the {}-slot encoding",
                self.total_cells(),
                super::ENCODED_CELLS
            ));
        }
        if self.dw == 0 {
            return bad("data width must be positive".into());
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.min_units < 2 || b.min_units > b.max_units {
                return bad(format!(
                    "block {i}: need 2 <= min_units <= max_units, got {}..{}",
                    b.min_units, b.max_units
                ));
            }
            if !matches!(b.first_unit_stride, 1 | 2) {
                return bad(format!("block {i}: stride must be 1 or 2"));
            }
            if b.out_channels == 0 || b.feature_h == 0 || b.feature_w == 0 {
                return bad(format!("block {i}: zero-sized stage"));
            }
        }
        for (i, w) in self.blocks.windows(2).enumerate() {
            if w[1].feature_h > w[0].feature_h || w[1].feature_w > w[0].feature_w {
                return bad(format!("block {}: feature size increases", i + 1));
            }
            if w[1].out_channels <= w[0].out_channels {
                return bad(format!("block {}: channels must strictly increase", i + 1));
            }
        }
        // Spatial sizes must chain through stem and block strides.
        let (mut h, mut w) = match self.stem_layers.last() {
            Some(l) => (l.h_out, l.w_out),
            None => (self.input_resolution, self.input_resolution),
        };
        if let Some(first) = self.stem_layers.first() {
            if first.h_in != self.input_resolution || first.w_in != self.input_resolution {
                return bad("stem input does not match input resolution".into());
            }
        }
        for (i, b) in self.blocks.iter().enumerate() {
            h = h.div_ceil(b.first_unit_stride);
            w = w.div_ceil(b.first_unit_stride);
            if h != b.feature_h || w != b.feature_w {
                return bad(format!(
                    "block {i}: feature map {}x{} does not follow from strides ({h}x{w})",
                    b.feature_h, b.feature_w
                ));
            }
        }
        Ok(())
    }

    /// Channels entering the first cell.
    pub(crate) fn stem_out_channels(&self) -> u32 {
        self.stem_layers.last().map(|l| l.c_out).unwrap_or(3)
    }

    pub(crate) fn stem_out_hw(&self) -> (u32, u32) {
        self.stem_layers
            .last()
            .map(|l| (l.h_out, l.w_out))
            .unwrap_or((self.input_resolution, self.input_resolution))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resnet50_is_valid_with_sixteen_cells() {
        let b = BackboneSpec::resnet50();
        b.validate().unwrap();
        assert_eq!(b.total_cells(), 16);
        assert_eq!(b.block_ranges()[3], 12..16);
    }

    #[test]
    fn prefixes_are_valid() {
        for n in 1..=4 {
            BackboneSpec::resnet50_prefix(n, 3, 2).validate().unwrap();
        }
    }

    #[test]
    fn rejects_min_units_below_two() {
        let mut b = BackboneSpec::resnet50();
        b.blocks[0].min_units = 1;
        assert!(b.validate().is_err());
        b.blocks[0].min_units = 5;
        assert!(b.validate().is_err());
    }

    #[test]
    fn rejects_non_increasing_channels() {
        let mut b = BackboneSpec::resnet50();
        b.blocks[2].out_channels = 512;
        assert!(b.validate().is_err());
    }

    #[test]
    fn rejects_inconsistent_feature_sizes() {
        let mut b = BackboneSpec::resnet50();
        b.blocks[1].feature_h = 14;
        b.blocks[1].feature_w = 14;
        assert!(b.validate().is_err());
    }

    #[test]
    fn rejects_more_cells_than_encoding_slots() {
        let b = BackboneSpec::resnet50_prefix(4, 5, 2);
        assert!(b.validate().is_err());
    }
}
