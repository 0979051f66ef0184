use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::align::{DtwConfig, Endpoint, Step};
use crate::classify::Method;
use crate::error::{Error, Result};
use crate::signal::SmoothingConfig;

/// Requested smoothing width; even widths are widened by one frame.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 30;
pub const DEFAULT_TRIALS: u64 = 5;

/// Every parameter of a run. Reports embed this verbatim, so a report's
/// `run_config` can be fed back in to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    /// Sub-action scripts scored by the alignment methods and bag-of-words.
    pub scripts: Option<PathBuf>,
    /// Scripts without context augmentation, used by the ablation ladder.
    pub plain_scripts: Option<PathBuf>,
    /// Fixed-length scripts used by the order-perturbation baselines.
    pub short_fixed_scripts: Option<PathBuf>,
    pub names: Option<PathBuf>,
    pub context_names: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub smoothing_window: usize,
    pub renormalize: bool,
    pub endpoint: Endpoint,
    pub tie_break: [Step; 3],
    pub method: Method,
    pub seed: u64,
    pub trials: u64,
    pub out: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let dtw = DtwConfig::default();
        Self {
            manifest: PathBuf::new(),
            scripts: None,
            plain_scripts: None,
            short_fixed_scripts: None,
            names: None,
            context_names: None,
            calibration: None,
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            renormalize: true,
            endpoint: dtw.endpoint,
            tie_break: dtw.tie_break,
            method: Method::Actalign,
            seed: 0,
            trials: DEFAULT_TRIALS,
            out: None,
            table: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file. A full report is also accepted, in which case
    /// its embedded `run_config` is used.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let value = match value.get("run_config") {
            Some(inner) => inner.clone(),
            None => value,
        };
        serde_json::from_value(value).map_err(|e| Error::json(path, e))
    }

    pub fn smoothing(&self) -> Result<SmoothingConfig> {
        Ok(SmoothingConfig::from_requested(self.smoothing_window, self.renormalize)?.0)
    }

    pub fn dtw(&self) -> Result<DtwConfig> {
        DtwConfig::new(self.endpoint, self.tie_break)
    }

    /// Number of prediction sets a run produces.
    pub fn effective_trials(&self) -> u64 {
        if self.method.is_stochastic() {
            self.trials.max(1)
        } else {
            1
        }
    }

    /// Script file the configured method reads, if any.
    pub fn scripts_for_method(&self) -> Option<&Path> {
        match self.method {
            Method::ReversedOrder | Method::RandomizedOrder => self
                .short_fixed_scripts
                .as_deref()
                .or(self.scripts.as_deref()),
            m if m.uses_scripts() => self.scripts.as_deref(),
            _ => None,
        }
    }

    pub fn names_for_method(&self) -> Option<&Path> {
        match self.method {
            Method::MeanPoolName => self.names.as_deref(),
            Method::MeanPoolContext => self.context_names.as_deref(),
            _ => None,
        }
    }

    /// Checks that the inputs the method needs are configured and exist.
    pub fn validate(&self) -> Result<()> {
        self.smoothing()?;
        self.dtw()?;
        let mut required: Vec<(&str, &Path)> = vec![("manifest", self.manifest.as_path())];
        if self.method.uses_scripts() {
            let p = self.scripts_for_method().ok_or_else(|| {
                Error::Config(format!("method {} needs a scripts file", self.method.label()))
            })?;
            required.push(("scripts", p));
        }
        if matches!(self.method, Method::MeanPoolName | Method::MeanPoolContext) {
            let p = self.names_for_method().ok_or_else(|| {
                Error::Config(format!("method {} needs a names file", self.method.label()))
            })?;
            required.push(("names", p));
        }
        if let Some(c) = &self.calibration {
            required.push(("calibration", c));
        }
        for (what, path) in required {
            if !path.is_file() {
                return Err(Error::Config(format!("{what} file {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
