//! Self-attention patch selection.
//!
//! A frame is cut into overlapping square patches. Each flattened patch
//! (with a constant 1 appended for the bias) is projected to keys and
//! queries, the row-softmax of `K Qᵀ / √d` forms the attention matrix, and
//! its column sums rank patch importance. The centers of the top-K patches,
//! normalized to `[0, 1]`, are the controller's whole percept.

mod overlay;
mod patches;
mod scoring;

pub use overlay::{draw_selection, OutlinedWindow, OUTLINE};
pub use patches::{extract_patches, PatchGrid};
pub use scoring::{attention_matrix, patch_centers, score_patches, top_k_indices, ImportanceRanking};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Frame;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttentionError {
    #[error("frame {height}x{width} is smaller than a {patch_size}x{patch_size} patch")]
    FrameTooSmall { height: usize, width: usize, patch_size: usize },
    #[error("attention parameters are shaped for {expected_rows} rows x {expected_dim} columns, got {rows} x {dim}")]
    ShapeMismatch { expected_rows: usize, expected_dim: usize, rows: usize, dim: usize },
    #[error("parameter vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("top_k = {k} exceeds the {patches} available patches")]
    TooFewPatches { k: usize, patches: usize },
    #[error("invalid attention configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttentionConfig {
    pub patch_size: usize,
    pub patch_stride: usize,
    pub transformation_dimension: usize,
    /// Number of top selected patches.
    pub top_k: usize,
    pub channels: usize,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig { patch_size: 10, patch_stride: 5, transformation_dimension: 4, top_k: 10, channels: 3 }
    }
}

impl AttentionConfig {
    /// Flattened patch length `patch_size² · channels`.
    pub fn patch_len(&self) -> usize {
        self.patch_size * self.patch_size * self.channels
    }

    /// Learnable scalars in the key and query projections: `2 (m + 1) d`.
    pub fn param_count(&self) -> usize {
        2 * (self.patch_len() + 1) * self.transformation_dimension
    }

    /// Controller input width: two coordinates per selected patch.
    pub fn feature_len(&self) -> usize {
        2 * self.top_k
    }

    pub fn grid_dims(&self, height: usize, width: usize) -> Option<(usize, usize)> {
        if height < self.patch_size || width < self.patch_size || self.patch_stride == 0 {
            return None;
        }
        Some(((height - self.patch_size) / self.patch_stride + 1, (width - self.patch_size) / self.patch_stride + 1))
    }

    pub fn validate(&self) -> Result<(), AttentionError> {
        let bad = |m: &str| Err(AttentionError::InvalidConfig(m.into()));
        if self.patch_size == 0 {
            return bad("patch_size must be at least 1");
        }
        if self.patch_stride == 0 {
            return bad("patch_stride must be at least 1");
        }
        if self.channels != Frame::CHANNELS {
            return bad("only 3-channel RGB frames are supported");
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1");
        }
        Ok(())
    }

    /// Checks that a frame of the given size yields at least `top_k` patches.
    pub fn validate_for_frame(&self, height: usize, width: usize) -> Result<(), AttentionError> {
        self.validate()?;
        let (rows, cols) = self.grid_dims(height, width).ok_or(AttentionError::FrameTooSmall {
            height,
            width,
            patch_size: self.patch_size,
        })?;
        if self.top_k > rows * cols {
            return Err(AttentionError::TooFewPatches { k: self.top_k, patches: rows * cols });
        }
        Ok(())
    }
}

/// Key and query projections, each `(m + 1) × d` row-major; the last row is
/// the bias applied through the appended constant input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    rows: usize,
    dim: usize,
    key: Vec<f64>,
    query: Vec<f64>,
}

impl AttentionParams {
    pub fn zeros(cfg: &AttentionConfig) -> Self {
        let rows = cfg.patch_len() + 1;
        let dim = cfg.transformation_dimension;
        AttentionParams { rows, dim, key: vec![0.0; rows * dim], query: vec![0.0; rows * dim] }
    }

    /// Decodes `[key row-major, query row-major]`.
    pub fn from_vector(values: &[f64], cfg: &AttentionConfig) -> Result<Self, AttentionError> {
        let expected = cfg.param_count();
        if values.len() != expected {
            return Err(AttentionError::LengthMismatch { expected, got: values.len() });
        }
        let half = expected / 2;
        Ok(AttentionParams {
            rows: cfg.patch_len() + 1,
            dim: cfg.transformation_dimension,
            key: values[..half].to_vec(),
            query: values[half..].to_vec(),
        })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.key.iter().chain(&self.query).copied().collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn key(&self) -> &[f64] {
        &self.key
    }

    pub fn query(&self) -> &[f64] {
        &self.query
    }

    pub fn param_count(&self) -> usize {
        self.key.len() + self.query.len()
    }

    pub fn is_finite(&self) -> bool {
        self.key.iter().chain(&self.query).all(|v| v.is_finite())
    }

    pub(crate) fn check_shape(&self, cfg: &AttentionConfig) -> Result<(), AttentionError> {
        let expected_rows = cfg.patch_len() + 1;
        if self.rows != expected_rows
            || self.dim != cfg.transformation_dimension
            || self.key.len() != self.rows * self.dim
            || self.query.len() != self.rows * self.dim
        {
            return Err(AttentionError::ShapeMismatch {
                expected_rows,
                expected_dim: cfg.transformation_dimension,
                rows: self.rows,
                dim: self.dim,
            });
        }
        Ok(())
    }
}

/// `2 (patch_size² · channels + 1) d`.
pub fn param_count(cfg: &AttentionConfig) -> usize {
    cfg.param_count()
}
