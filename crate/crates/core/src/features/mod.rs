//! Per-pixel feature maps: the handcrafted extractor standing in for a frozen
//! backbone, z-score normalization, and the FMAP exchange format.

mod extract;
mod fmap;
mod normalize;

pub use extract::{extract, intensity_gradient, ExtractorConfig, CHANNEL_NAMES, FEATURE_CHANNELS};
pub use fmap::{
    decode_fmap, encode_fmap, read_fmap, write_fmap, FmapError, FMAP_MAGIC, FMAP_VERSION,
};
pub use normalize::{apply_normalizer, fit_normalizer, NormStats, SD_FLOOR};

use crate::error::{Error, Result};

/// Channel-planar feature map: channel `c`, pixel `(x, y)` lives at
/// `data[c * width * height + y * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_planar(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::Dimension("feature map size overflows".into()))?;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "{width}x{height}x{channels} map needs {expected} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.pixels();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.pixels();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f32 {
        self.data[c * self.pixels() + y * self.width + x]
    }

    /// Left-right mirror of every plane.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        self.mirror_into(&mut out);
        out
    }

    pub(crate) fn mirror_into(&self, out: &mut FeatureMap) {
        out.reshape_like(self);
        let w = self.width;
        for (src, dst) in self.data.chunks_exact(w).zip(out.data.chunks_exact_mut(w)) {
            for (d, s) in dst.iter_mut().zip(src.iter().rev()) {
                *d = *s;
            }
        }
    }

    pub(crate) fn reshape_like(&mut self, other: &FeatureMap) {
        self.width = other.width;
        self.height = other.height;
        self.channels = other.channels;
        self.data.resize(other.data.len(), 0.0);
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
