//! Max-similarity dynamic time warping over a calibrated affinity matrix.
//!
//! The table is filled with
//!
//! ```text
//! D[0][0] = A[0][0]
//! D[k][t] = A[k][t] + max(D[k][t-1], D[k-1][t], D[k-1][t-1])
//! ```
//!
//! where predecessors outside the matrix count as negative infinity. A path
//! starts at the first sub-action and first frame and moves by one frame,
//! one sub-action, or both at every step.

use serde::{Deserialize, Serialize};

use crate::affinity::{build_affinity, AffinityMatrix, CalibrationParams, ONE_BELOW};
use crate::corpus::{EmbeddingSequence, SubActionScript};
use crate::error::{Error, Result};
use crate::signal::{smooth, SmoothingConfig};

/// Where a warping path is allowed to end.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// The path ends on the last sub-action and the last frame.
    #[default]
    AnchoredEnd,
    /// The path ends on whichever cell has the largest cumulative score.
    OpenEnd,
}

/// A predecessor move, named from the point of view of the later cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// From `(k-1, t-1)`.
    Diagonal,
    /// From `(k-1, t)`: the sub-action advances, the frame repeats.
    Up,
    /// From `(k, t-1)`: the frame advances, the sub-action repeats.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DtwConfig {
    pub endpoint: Endpoint,
    /// Preference order applied when predecessors have exactly equal scores.
    pub tie_break: [Step; 3],
}

impl DtwConfig {
    pub fn new(endpoint: Endpoint, tie_break: [Step; 3]) -> Result<Self> {
        let cfg = Self {
            endpoint,
            tie_break,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_endpoint(endpoint: Endpoint) -> Self {
        Self {
            endpoint,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b, c] = self.tie_break;
        if a == b || b == c || a == c {
            return Err(Error::Config(format!(
                "tie-break order must list each step once, got {:?}",
                self.tie_break
            )));
        }
        Ok(())
    }
}

impl Default for DtwConfig {
    fn default() -> Self {
        Self {
            endpoint: Endpoint::AnchoredEnd,
            tie_break: [Step::Diagonal, Step::Up, Step::Left],
        }
    }
}

/// Cumulative score table with the same shape as the affinity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwTable {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl DtwTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, k: usize, t: usize) -> f64 {
        self.cells[k * self.cols + t]
    }

    /// Score of the cell reached from `(k, t)` by stepping back along
    /// `step`, or `None` when that cell is outside the table.
    fn predecessor(&self, k: usize, t: usize, step: Step) -> Option<((usize, usize), f64)> {
        let cell = match step {
            Step::Diagonal if k > 0 && t > 0 => (k - 1, t - 1),
            Step::Up if k > 0 => (k - 1, t),
            Step::Left if t > 0 => (k, t - 1),
            _ => return None,
        };
        Some((cell, self.get(cell.0, cell.1)))
    }

    /// First cell holding the table maximum, scanning row by row.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.cells.iter().enumerate() {
            if v > self.cells[best] {
                best = i;
            }
        }
        (best / self.cols, best % self.cols)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.cells.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    /// Zero-based `(sub_action, frame)` pairs from `(0, 0)` to the end cell.
    pub path: Vec<(usize, usize)>,
    /// Sum of calibrated affinities along the path.
    pub raw_score: f64,
    /// `raw_score` divided by the path length.
    pub normalized_score: f64,
    /// Cell holding the largest cumulative score anywhere in the table.
    pub dp_max_cell: (usize, usize),
}

pub fn dtw_table(aff: &AffinityMatrix) -> Result<DtwTable> {
    let (rows, cols) = (aff.rows(), aff.cols());
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut cells = vec![0.0f64; rows * cols];
    for k in 0..rows {
        let a = aff.calibrated_row(k);
        for t in 0..cols {
            let best = match (k, t) {
                (0, 0) => 0.0,
                (0, _) => cells[t - 1],
                (_, 0) => cells[(k - 1) * cols],
                _ => {
                    let left = cells[k * cols + t - 1];
                    let up = cells[(k - 1) * cols + t];
                    let diag = cells[(k - 1) * cols + t - 1];
                    left.max(up).max(diag)
                }
            };
            cells[k * cols + t] = a[t] + best;
        }
    }
    Ok(DtwTable { rows, cols, cells })
}

/// Recovers the optimal path ending at the cell chosen by `cfg.endpoint`.
pub fn backtrack(table: &DtwTable, aff: &AffinityMatrix, cfg: &DtwConfig) -> AlignmentResult {
    let dp_max_cell = table.argmax();
    let mut cell = match cfg.endpoint {
        Endpoint::AnchoredEnd => (table.rows - 1, table.cols - 1),
        Endpoint::OpenEnd => dp_max_cell,
    };
    let mut path = vec![cell];
    while cell != (0, 0) {
        let mut chosen: Option<((usize, usize), f64)> = None;
        for &step in &cfg.tie_break {
            if let Some((prev, score)) = table.predecessor(cell.0, cell.1, step) {
                // Strictly greater keeps the earlier step on exact ties.
                if chosen.is_none_or(|(_, best)| score > best) {
                    chosen = Some((prev, score));
                }
            }
        }
        cell = chosen.expect("every cell but the origin has a predecessor").0;
        path.push(cell);
    }
    path.reverse();

    let raw_score: f64 = path.iter().map(|&(k, t)| aff.get(k, t)).sum();
    // Rounding can carry the mean of values just below 1 onto 1.
    let normalized_score = (raw_score / path.len() as f64).min(ONE_BELOW);
    AlignmentResult {
        normalized_score,
        raw_score,
        path,
        dp_max_cell,
    }
}

pub fn align_matrix(aff: &AffinityMatrix, cfg: &DtwConfig) -> Result<AlignmentResult> {
    let table = dtw_table(aff)?;
    Ok(backtrack(&table, aff, cfg))
}

/// Smooths the frames, builds the affinity matrix and aligns it.
pub fn align(
    script: &SubActionScript,
    seq: &EmbeddingSequence,
    cal: &CalibrationParams,
    smoothing: SmoothingConfig,
    dtw: &DtwConfig,
) -> Result<AlignmentResult> {
    let smoothed = smooth(seq, smoothing);
    align_smoothed(script, &smoothed, cal, dtw)
}

/// Same as [`align`] for frames that are already smoothed.
pub fn align_smoothed(
    script: &SubActionScript,
    smoothed: &EmbeddingSequence,
    cal: &CalibrationParams,
    dtw: &DtwConfig,
) -> Result<AlignmentResult> {
    let aff = build_affinity(script, smoothed, cal)?;
    align_matrix(&aff, dtw)
}

/// Checks the start cell, the step set and the bounds of a path.
pub fn is_valid_path(path: &[(usize, usize)], rows: usize, cols: usize) -> bool {
    if path.first() != Some(&(0, 0)) {
        return false;
    }
    path.iter().all(|&(k, t)| k < rows && t < cols)
        && path.windows(2).all(|w| {
            let (dk, dt) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            matches!((dk, dt), (1, 0) | (0, 1) | (1, 1))
        })
}

/// Serialized form of one alignment, for heatmap and path tooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathExport {
    pub video_id: String,
    pub class_id: String,
    pub path: Vec<[usize; 2]>,
    pub gamma: f64,
    pub gamma_hat: f64,
}

impl PathExport {
    pub fn new(video_id: &str, class_id: &str, result: &AlignmentResult) -> Self {
        Self {
            video_id: video_id.to_string(),
            class_id: class_id.to_string(),
            path: result.path.iter().map(|&(k, t)| [k, t]).collect(),
            gamma: result.raw_score,
            gamma_hat: result.normalized_score,
        }
    }
}
