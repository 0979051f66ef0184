//! Zero-shot fine-grained video classification by aligning frame embeddings
//! with ordered sub-action text embeddings.
//!
//! The pipeline for one (video, class) pair is
//! [`signal::smooth`] → [`affinity::build_affinity`] → [`align::dtw_table`]
//! → [`align::backtrack`]; [`classify`] ranks the candidates of a video by
//! the resulting normalized alignment scores and [`report`] turns a corpus of
//! rankings into Top-k accuracies. [`engine`] drives whole-corpus runs.

pub mod affinity;
pub mod align;
pub mod classify;
pub mod config;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod report;
pub mod signal;
pub mod tensor;

pub use affinity::{build_affinity, AffinityMatrix, CalibrationParams};
pub use align::{align, backtrack, dtw_table, AlignmentResult, DtwConfig, Endpoint, Step};
pub use classify::{Method, VideoPrediction};
pub use config::RunConfig;
pub use corpus::{DatasetManifest, EmbeddingSequence, SubActionScript, VideoEntry};
pub use error::{Error, Result};
pub use report::EvaluationReport;
pub use signal::{smooth, SmoothingConfig};
pub use tensor::Matrix;
