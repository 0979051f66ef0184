//! Sub-action/frame similarity and its sigmoid calibration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingSequence, SubActionScript};
use crate::error::{Error, Result};
use crate::tensor::dot;

/// Logit scale and bias applied before the sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub source: String,
}

impl CalibrationParams {
    pub const UNCALIBRATED_SOURCE: &'static str = "uncalibrated-default";

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let params = Self {
            alpha,
            beta,
            source: String::new(),
        };
        params.validate()?;
        Ok(params)
    }

    /// Fallback used when no calibration file is supplied.
    pub fn uncalibrated() -> Self {
        Self {
            alpha: 10.0,
            beta: 0.0,
            source: Self::UNCALIBRATED_SOURCE.into(),
        }
    }

    pub fn is_uncalibrated(&self) -> bool {
        self.source == Self::UNCALIBRATED_SOURCE
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!(
                "calibration alpha must be finite and positive, got {}",
                self.alpha
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::Config(format!(
                "calibration beta must be finite, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        params.validate()?;
        Ok(params)
    }

    /// Sigmoid of the scaled similarity, kept strictly inside (0, 1) even
    /// where the logistic saturates in `f64`.
    #[inline]
    pub fn calibrate(&self, raw: f64) -> f64 {
        sigmoid(self.alpha * raw.clamp(-1.0, 1.0) + self.beta).clamp(f64::MIN_POSITIVE, ONE_BELOW)
    }
}

impl Default for CalibrationParams {
    fn default() -> Self {
        Self::uncalibrated()
    }
}

/// Largest `f64` below 1.
pub const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `rows` sub-actions by `cols` frames, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub class_id: String,
    pub video_id: String,
    rows: usize,
    cols: usize,
    raw: Vec<f64>,
    calibrated: Vec<f64>,
}

impl AffinityMatrix {
    /// Builds a matrix directly from calibrated values in (0, 1). The raw
    /// similarities are left at zero.
    pub fn from_calibrated(rows: usize, cols: usize, calibrated: Vec<f64>) -> Result<Self> {
        if calibrated.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "affinity buffer".into(),
                left: calibrated.len(),
                right: rows * cols,
            });
        }
        Ok(Self {
            class_id: String::new(),
            video_id: String::new(),
            rows,
            cols,
            raw: vec![0.0; rows * cols],
            calibrated,
        })
    }

    pub fn from_calibrated_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Config("ragged affinity rows".into()));
        }
        Self::from_calibrated(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn raw(&self, k: usize, t: usize) -> f64 {
        self.raw[k * self.cols + t]
    }

    #[inline]
    pub fn get(&self, k: usize, t: usize) -> f64 {
        self.calibrated[k * self.cols + t]
    }

    pub fn calibrated_row(&self, k: usize) -> &[f64] {
        &self.calibrated[k * self.cols..(k + 1) * self.cols]
    }

    pub fn raw_row(&self, k: usize) -> &[f64] {
        &self.raw[k * self.cols..(k + 1) * self.cols]
    }
}

/// Inner products between every sub-action and every frame, then the
/// calibrated sigmoid of each.
pub fn build_affinity(
    script: &SubActionScript,
    seq: &EmbeddingSequence,
    cal: &CalibrationParams,
) -> Result<AffinityMatrix> {
    let text = script.embeddings()?;
    if text.cols() != seq.dim() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "class {} embeddings vs video {} frames",
                script.class_id, seq.video_id
            ),
            left: text.cols(),
            right: seq.dim(),
        });
    }
    let (rows, cols) = (text.rows(), seq.len());
    let mut raw = Vec::with_capacity(rows * cols);
    for u in text.iter_rows() {
        raw.extend(seq.frames.iter_rows().map(|z| dot(u, z)));
    }
    let calibrated = raw.iter().map(|&r| cal.calibrate(r)).collect();
    Ok(AffinityMatrix {
        class_id: script.class_id.clone(),
        video_id: seq.video_id.clone(),
        rows,
        cols,
        raw,
        calibrated,
    })
}
