//! Temporal moving-average smoothing of frame embeddings.

use serde::{Deserialize, Serialize};

use crate::corpus::EmbeddingSequence;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Width of the centered moving-average window, in frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    window: usize,
    renormalize: bool,
}

impl SmoothingConfig {
    /// The window must be odd so it extends `window / 2` frames on each side.
    pub fn new(window: usize, renormalize: bool) -> Result<Self> {
        if window == 0 {
            return Err(Error::Config("smoothing window must be at least 1".into()));
        }
        if window.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "smoothing window must be odd, got {window}"
            )));
        }
        Ok(Self {
            window,
            renormalize,
        })
    }

    /// Accepts any positive width, widening an even one by a frame.
    /// The flag reports whether the width was changed.
    pub fn from_requested(window: usize, renormalize: bool) -> Result<(Self, bool)> {
        if window > 0 && window.is_multiple_of(2) {
            Ok((Self::new(window + 1, renormalize)?, true))
        } else {
            Ok((Self::new(window, renormalize)?, false))
        }
    }

    pub fn identity() -> Self {
        Self {
            window: 1,
            renormalize: true,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn half_width(&self) -> usize {
        self.window / 2
    }

    pub fn renormalize(&self) -> bool {
        self.renormalize
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        // 30 frames requested, widened to the nearest odd width.
        Self {
            window: 31,
            renormalize: true,
        }
    }
}

/// Centered moving average with zero padding and a fixed divisor of
/// `window`. Rows that end up exactly zero are left as zeros and listed in
/// `degenerate_rows`.
pub fn smooth(seq: &EmbeddingSequence, cfg: SmoothingConfig) -> EmbeddingSequence {
    if cfg.window == 1 {
        return seq.clone();
    }
    let (frames, dim) = (seq.frames.rows(), seq.frames.cols());
    let half = cfg.half_width();

    // prefix[t] holds the sum of rows 0..t.
    let mut prefix = vec![0.0f64; (frames + 1) * dim];
    for t in 0..frames {
        let (done, rest) = prefix.split_at_mut((t + 1) * dim);
        let prev = &done[t * dim..];
        for ((out, &p), &v) in rest[..dim].iter_mut().zip(prev).zip(seq.frames.row(t)) {
            *out = p + f64::from(v);
        }
    }

    let divisor = cfg.window as f64;
    let mut out = Matrix::zeros(frames, dim);
    let mut degenerate_rows = Vec::new();
    let mut acc = vec![0.0f64; dim];
    for t in 0..frames {
        let lo = t.saturating_sub(half);
        let hi = (t + half + 1).min(frames);
        for (j, a) in acc.iter_mut().enumerate() {
            *a = (prefix[hi * dim + j] - prefix[lo * dim + j]) / divisor;
        }
        let norm = acc.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            degenerate_rows.push(t);
            continue;
        }
        let scale = if cfg.renormalize { 1.0 / norm } else { 1.0 };
        for (o, a) in out.row_mut(t).iter_mut().zip(&acc) {
            *o = (a * scale) as f32;
        }
    }

    EmbeddingSequence {
        video_id: seq.video_id.clone(),
        frames: out,
        degenerate_rows,
    }
}
