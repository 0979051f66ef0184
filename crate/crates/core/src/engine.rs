//! Corpus-level evaluation: loads inputs for a [`RunConfig`], fans videos
//! out over a worker pool and folds the predictions into a report.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::CalibrationParams;
use crate::align::{align_smoothed, Endpoint, PathExport};
use crate::classify::{
    classify_actalign, classify_aligned, classify_bag_of_words, classify_mean_pool, classify_random,
    derive_seed, perturb_script, Method, Perturbation, VideoPrediction,
};
use crate::config::RunConfig;
use crate::corpus::{
    load_embeddings, load_manifest, load_names, load_scripts, ClassNameEmbedding, DatasetManifest,
    EmbeddingSequence, SubActionScript, VideoEntry,
};
use crate::error::{Error, Result};
use crate::report::{build_report, comparison_table, EvaluationReport, TopK};
use crate::signal::smooth;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "ACTALIGN_WORKERS";

pub type ScriptSet = BTreeMap<String, SubActionScript>;
pub type NameSet = BTreeMap<String, ClassNameEmbedding>;

/// Supplies the frame embeddings of a manifest video.
pub trait EmbeddingSource: Sync {
    fn load(&self, entry: &VideoEntry) -> Result<EmbeddingSequence>;
}

/// Reads tensor files next to the manifest.
pub struct DiskSource<'a> {
    manifest: &'a DatasetManifest,
}

impl<'a> DiskSource<'a> {
    pub fn new(manifest: &'a DatasetManifest) -> Self {
        Self { manifest }
    }
}

impl EmbeddingSource for DiskSource<'_> {
    fn load(&self, entry: &VideoEntry) -> Result<EmbeddingSequence> {
        load_embeddings(
            &self.manifest.embedding_path(entry),
            &entry.video_id,
            entry.frame_count,
            None,
        )
    }
}

impl EmbeddingSource for HashMap<String, EmbeddingSequence> {
    fn load(&self, entry: &VideoEntry) -> Result<EmbeddingSequence> {
        self.get(&entry.video_id)
            .cloned()
            .ok_or_else(|| Error::UnknownVideo(entry.video_id.clone()))
    }
}

/// Loaded script and name files, keyed by path so that grids re-use them.
#[derive(Default)]
pub struct InputCache {
    manifests: HashMap<PathBuf, Arc<DatasetManifest>>,
    scripts: HashMap<PathBuf, Arc<ScriptSet>>,
    names: HashMap<PathBuf, Arc<NameSet>>,
    calibrations: HashMap<PathBuf, CalibrationParams>,
}

impl InputCache {
    fn manifest(&mut self, path: &Path) -> Result<Arc<DatasetManifest>> {
        if let Some(m) = self.manifests.get(path) {
            return Ok(m.clone());
        }
        let m = Arc::new(load_manifest(path)?);
        self.manifests.insert(path.to_path_buf(), m.clone());
        Ok(m)
    }

    fn scripts(&mut self, path: &Path) -> Result<Arc<ScriptSet>> {
        if let Some(s) = self.scripts.get(path) {
            return Ok(s.clone());
        }
        let s = Arc::new(load_scripts(path)?);
        self.scripts.insert(path.to_path_buf(), s.clone());
        Ok(s)
    }

    fn names(&mut self, path: &Path) -> Result<Arc<NameSet>> {
        if let Some(n) = self.names.get(path) {
            return Ok(n.clone());
        }
        let n = Arc::new(load_names(path)?);
        self.names.insert(path.to_path_buf(), n.clone());
        Ok(n)
    }

    fn calibration(&mut self, path: &Path) -> Result<CalibrationParams> {
        if let Some(c) = self.calibrations.get(path) {
            return Ok(c.clone());
        }
        let c = CalibrationParams::load(path)?;
        self.calibrations.insert(path.to_path_buf(), c.clone());
        Ok(c)
    }
}

/// Everything a run reads besides the frame embeddings.
#[derive(Clone)]
pub struct Inputs {
    pub manifest: Arc<DatasetManifest>,
    pub scripts: Option<Arc<ScriptSet>>,
    pub names: Option<Arc<NameSet>>,
    pub calibration: CalibrationParams,
}

impl Inputs {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        Self::load_cached(cfg, &mut InputCache::default())
    }

    pub fn load_cached(cfg: &RunConfig, cache: &mut InputCache) -> Result<Self> {
        cfg.validate()?;
        let manifest = cache.manifest(&cfg.manifest)?;
        let scripts = cfg.scripts_for_method().map(|p| cache.scripts(p)).transpose()?;
        let names = cfg.names_for_method().map(|p| cache.names(p)).transpose()?;
        let calibration = match &cfg.calibration {
            Some(p) => cache.calibration(p)?,
            None => {
                log::warn!(
                    "no calibration file given; using uncalibrated alpha=10, beta=0"
                );
                CalibrationParams::uncalibrated()
            }
        };
        Ok(Self {
            manifest,
            scripts,
            names,
            calibration,
        })
    }

    /// Inputs assembled in memory, for tests and synthetic runs.
    pub fn in_memory(
        manifest: DatasetManifest,
        scripts: Option<ScriptSet>,
        names: Option<NameSet>,
        calibration: CalibrationParams,
    ) -> Self {
        Self {
            manifest: Arc::new(manifest),
            scripts: scripts.map(Arc::new),
            names: names.map(Arc::new),
            calibration,
        }
    }

    fn scripts(&self, method: Method) -> Result<&ScriptSet> {
        self.scripts
            .as_deref()
            .ok_or_else(|| Error::Config(format!("method {} needs scripts", method.label())))
    }

    fn names(&self, method: Method) -> Result<&NameSet> {
        self.names
            .as_deref()
            .ok_or_else(|| Error::Config(format!("method {} needs name embeddings", method.label())))
    }
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

pub struct Evaluator {
    pool: rayon::ThreadPool,
}

impl Evaluator {
    /// `None` lets the pool size itself to the machine.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Predictions for every video, one set per trial, in manifest order.
    pub fn predict_all(
        &self,
        cfg: &RunConfig,
        inputs: &Inputs,
        source: &dyn EmbeddingSource,
    ) -> Result<Vec<Vec<VideoPrediction>>> {
        let per_video: Vec<Vec<VideoPrediction>> = self.pool.install(|| {
            inputs
                .manifest
                .videos
                .par_iter()
                .map(|entry| {
                    let seq = source.load(entry)?;
                    predict_video(cfg, inputs, entry, &seq)
                })
                .collect::<Result<_>>()
        })?;
        let trials = cfg.effective_trials() as usize;
        let mut by_trial: Vec<Vec<VideoPrediction>> =
            (0..trials).map(|_| Vec::with_capacity(per_video.len())).collect();
        for preds in per_video {
            for (trial, p) in by_trial.iter_mut().zip(preds) {
                trial.push(p);
            }
        }
        Ok(by_trial)
    }

    pub fn run(&self, cfg: &RunConfig, inputs: &Inputs, source: &dyn EmbeddingSource) -> Result<EvaluationReport> {
        let trials = self.predict_all(cfg, inputs, source)?;
        let multi = cfg.method.is_stochastic().then_some(trials.as_slice());
        let mut report = build_report(cfg.to_value(), cfg.method, &inputs.manifest, &trials[0], multi)?;
        report.resolved = resolved_values(cfg, inputs)?;
        Ok(report)
    }

    /// Loads the inputs named by `cfg` and evaluates against embeddings on
    /// disk.
    pub fn run_from_disk(&self, cfg: &RunConfig) -> Result<EvaluationReport> {
        let inputs = Inputs::load(cfg)?;
        let source = DiskSource::new(&inputs.manifest);
        self.run(cfg, &inputs, &source)
    }
}

fn resolved_values(cfg: &RunConfig, inputs: &Inputs) -> Result<serde_json::Value> {
    let smoothing = cfg.smoothing()?;
    Ok(serde_json::json!({
        "smoothing_window": smoothing.window(),
        "renormalize": smoothing.renormalize(),
        "calibration": {
            "alpha": inputs.calibration.alpha,
            "beta": inputs.calibration.beta,
            "source": inputs.calibration.source,
            "uncalibrated": inputs.calibration.is_uncalibrated(),
        },
        "trials": cfg.effective_trials(),
        "path_indexing": "zero-based",
    }))
}

/// All trial predictions for one video.
pub fn predict_video(
    cfg: &RunConfig,
    inputs: &Inputs,
    entry: &VideoEntry,
    seq: &EmbeddingSequence,
) -> Result<Vec<VideoPrediction>> {
    let method = cfg.method;
    let dtw = cfg.dtw()?;
    let cal = &inputs.calibration;
    let trials = cfg.effective_trials();
    match method {
        Method::Actalign => Ok(vec![classify_actalign(
            entry,
            seq,
            inputs.scripts(method)?,
            cal,
            cfg.smoothing()?,
            &dtw,
        )?]),
        Method::ReversedOrder | Method::RandomizedOrder => {
            let scripts = inputs.scripts(method)?;
            let smoothed = smooth(seq, cfg.smoothing()?);
            (0..trials)
                .map(|trial| {
                    classify_aligned(entry, &smoothed, method, cal, &dtw, |class_id| {
                        let script = scripts.get(class_id).ok_or_else(|| Error::MissingScript {
                            class_id: class_id.to_string(),
                        })?;
                        let mode = match method {
                            Method::ReversedOrder => Perturbation::Reversed,
                            _ => Perturbation::Randomized {
                                seed: derive_seed(cfg.seed, trial, &entry.video_id, class_id),
                            },
                        };
                        Ok(Cow::Owned(perturb_script(script, mode)))
                    })
                })
                .collect()
        }
        Method::MeanPoolName | Method::MeanPoolContext => Ok(vec![classify_mean_pool(
            entry,
            seq,
            inputs.names(method)?,
            method == Method::MeanPoolContext,
        )?]),
        Method::BagOfWords => Ok(vec![classify_bag_of_words(entry, seq, inputs.scripts(method)?)?]),
        Method::Random => (0..trials)
            .map(|trial| classify_random(entry, derive_seed(cfg.seed, trial, &entry.video_id, "")))
            .collect(),
    }
}

/// One configuration of an ablation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub config: RunConfig,
}

/// The component ladder and baselines that `base` has inputs for. Rows
/// whose inputs are missing are returned by label in the second element.
pub fn default_ladder(base: &RunConfig) -> (Vec<AblationRow>, Vec<String>) {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut push = |label: &str, config: Option<RunConfig>| match config {
        Some(config) => rows.push(AblationRow {
            label: label.to_string(),
            config,
        }),
        None => skipped.push(label.to_string()),
    };
    let with = |method: Method| RunConfig {
        method,
        ..base.clone()
    };

    push(
        "mean-pool",
        base.names.as_ref().map(|_| with(Method::MeanPoolName)),
    );
    push(
        "+ dtw alignment",
        base.plain_scripts.as_ref().map(|p| RunConfig {
            scripts: Some(p.clone()),
            smoothing_window: 1,
            ..with(Method::Actalign)
        }),
    );
    push(
        "+ context augmentation",
        base.scripts.as_ref().map(|_| RunConfig {
            smoothing_window: 1,
            ..with(Method::Actalign)
        }),
    );
    push(
        "+ signal smoothing",
        base.scripts.as_ref().map(|_| with(Method::Actalign)),
    );
    push(
        "+ signal smoothing, open-end",
        base.scripts.as_ref().map(|_| RunConfig {
            endpoint: Endpoint::OpenEnd,
            ..with(Method::Actalign)
        }),
    );
    push(
        "mean-pool w/ context augmentation",
        base.context_names.as_ref().map(|_| with(Method::MeanPoolContext)),
    );
    push(
        "mean-pool w/ bag-of-words",
        base.scripts.as_ref().map(|_| with(Method::BagOfWords)),
    );
    let short = |method: Method| {
        base.short_fixed_scripts.as_ref().map(|p| RunConfig {
            scripts: Some(p.clone()),
            ..with(method)
        })
    };
    push("short-fixed, reversed order", short(Method::ReversedOrder));
    push("short-fixed, randomized order", short(Method::RandomizedOrder));
    push("short-fixed, normal order", short(Method::Actalign));
    (rows, skipped)
}

/// Runs each row and returns its report. `source` overrides the on-disk
/// embeddings of every row's manifest.
pub fn ablation_grid(
    evaluator: &Evaluator,
    rows: &[AblationRow],
    source: Option<&dyn EmbeddingSource>,
) -> Result<Vec<(String, EvaluationReport)>> {
    let mut cache = InputCache::default();
    rows.iter()
        .map(|row| {
            let inputs = Inputs::load_cached(&row.config, &mut cache)?;
            let report = match source {
                Some(s) => evaluator.run(&row.config, &inputs, s)?,
                None => evaluator.run(&row.config, &inputs, &DiskSource::new(&inputs.manifest))?,
            };
            Ok((row.label.clone(), report))
        })
        .collect()
}

pub fn ablation_table(results: &[(String, EvaluationReport)]) -> String {
    let rows: Vec<(String, &EvaluationReport)> = results.iter().map(|(l, r)| (l.clone(), r)).collect();
    comparison_table(&rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub requested_window: usize,
    pub window: usize,
    pub topk: TopK,
}

/// Alignment accuracy for each requested smoothing width.
pub fn sweep_smoothing(
    evaluator: &Evaluator,
    base: &RunConfig,
    windows: &[usize],
    source: Option<&dyn EmbeddingSource>,
) -> Result<Vec<SweepRow>> {
    if windows.is_empty() {
        return Err(Error::Config("smoothing sweep needs at least one window".into()));
    }
    let rows: Vec<AblationRow> = windows
        .iter()
        .map(|&w| AblationRow {
            label: w.to_string(),
            config: RunConfig {
                smoothing_window: w,
                ..base.clone()
            },
        })
        .collect();
    for r in &rows {
        r.config.smoothing()?;
    }
    let reports = ablation_grid(evaluator, &rows, source)?;
    Ok(windows
        .iter()
        .zip(reports)
        .map(|(&requested, (_, report))| SweepRow {
            requested_window: requested,
            window: report.resolved["smoothing_window"]
                .as_u64()
                .map_or(requested, |w| w as usize),
            topk: report.topk,
        })
        .collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("requested_window,window,top1,top2,top3\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.2},{:.2},{:.2}",
            r.requested_window,
            r.window,
            r.topk[&1] * 100.0,
            r.topk[&2] * 100.0,
            r.topk[&3] * 100.0
        );
    }
    out
}

/// Alignment of one video against each of its candidates' scripts, using
/// the smoothing, calibration and endpoint settings of `cfg`.
pub fn export_paths(
    cfg: &RunConfig,
    inputs: &Inputs,
    source: &dyn EmbeddingSource,
    video_id: &str,
) -> Result<Vec<PathExport>> {
    let entry = inputs
        .manifest
        .video(video_id)
        .ok_or_else(|| Error::UnknownVideo(video_id.to_string()))?;
    let scripts = inputs
        .scripts
        .as_deref()
        .ok_or_else(|| Error::Config("path export needs a scripts file".into()))?;
    let seq = source.load(entry)?;
    let smoothed = smooth(&seq, cfg.smoothing()?);
    let dtw = cfg.dtw()?;
    entry
        .candidates
        .iter()
        .map(|class_id| {
            let script = scripts.get(class_id).ok_or_else(|| Error::MissingScript {
                class_id: class_id.clone(),
            })?;
            let result = align_smoothed(script, &smoothed, &inputs.calibration, &dtw)?;
            Ok(PathExport::new(video_id, class_id, &result))
        })
        .collect()
}

/// File name used for one exported path.
pub fn export_file_name(video_id: &str, class_id: &str) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
            .collect()
    };
    format!("{}__{}.json", clean(video_id), clean(class_id))
}

/// Checks every input a run would touch and returns all problems found
/// instead of stopping at the first one.
pub fn validate_inputs(cfg: &RunConfig) -> Vec<String> {
    let mut problems = Vec::new();
    if let Err(e) = cfg.smoothing() {
        problems.push(e.to_string());
    }
    if let Err(e) = cfg.dtw() {
        problems.push(e.to_string());
    }
    let manifest = match load_manifest(&cfg.manifest) {
        Ok(m) => m,
        Err(e) => {
            problems.push(e.to_string());
            return problems;
        }
    };
    let mut load_scripts_at = |label: &str, path: &Option<PathBuf>| -> Option<ScriptSet> {
        let p = path.as_ref()?;
        match load_scripts(p) {
            Ok(s) => Some(s),
            Err(e) => {
                problems.push(format!("{label}: {e}"));
                None
            }
        }
    };
    let script_sets: Vec<(&str, ScriptSet)> = [
        ("scripts", &cfg.scripts),
        ("plain_scripts", &cfg.plain_scripts),
        ("short_fixed_scripts", &cfg.short_fixed_scripts),
    ]
    .into_iter()
    .filter_map(|(label, p)| load_scripts_at(label, p).map(|s| (label, s)))
    .collect();
    let name_sets: Vec<(&str, NameSet)> = [("names", &cfg.names), ("context_names", &cfg.context_names)]
        .into_iter()
        .filter_map(|(label, p)| {
            let p = p.as_ref()?;
            match load_names(p) {
                Ok(n) => Some((label, n)),
                Err(e) => {
                    problems.push(format!("{label}: {e}"));
                    None
                }
            }
        })
        .collect();
    if let Some(p) = &cfg.calibration {
        if let Err(e) = CalibrationParams::load(p) {
            problems.push(e.to_string());
        }
    }

    let source = DiskSource::new(&manifest);
    for entry in &manifest.videos {
        let dim = match source.load(entry) {
            Ok(seq) => seq.dim(),
            Err(e) => {
                problems.push(e.to_string());
                continue;
            }
        };
        for class_id in &entry.candidates {
            for (label, set) in &script_sets {
                match set.get(class_id).map(|s| s.embeddings.as_ref()) {
                    None => problems.push(format!(
                        "{label}: video {}: no script for candidate {class_id}",
                        entry.video_id
                    )),
                    Some(None) => problems.push(format!("{label}: class {class_id}: no embeddings")),
                    Some(Some(m)) if m.cols() != dim => problems.push(format!(
                        "{label}: class {class_id}: dimension {} differs from video {} ({dim})",
                        m.cols(),
                        entry.video_id
                    )),
                    Some(Some(_)) => {}
                }
            }
            for (label, set) in &name_sets {
                match set.get(class_id) {
                    None => problems.push(format!(
                        "{label}: video {}: no name embedding for candidate {class_id}",
                        entry.video_id
                    )),
                    Some(n) if n.embedding.len() != dim => problems.push(format!(
                        "{label}: class {class_id}: dimension {} differs from video {} ({dim})",
                        n.embedding.len(),
                        entry.video_id
                    )),
                    Some(_) => {}
                }
            }
        }
    }
    problems.sort();
    problems.dedup();
    problems
}
