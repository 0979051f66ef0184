//! Top-k accuracy, per-domain breakdowns and report rendering.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::{Method, VideoPrediction};
use crate::corpus::DatasetManifest;
use crate::error::{Error, Result};

pub const REPORTED_K: [usize; 3] = [1, 2, 3];

/// How the ground-truth rank is read when scores tie.
pub const TIE_POLICY: &str = "manifest-order: equal scores keep candidate order; rank is the tie-broken position";

/// Accuracy per k, keyed by k.
pub type TopK = BTreeMap<usize, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredVideo {
    #[serde(flatten)]
    pub prediction: VideoPrediction,
    pub domain: String,
    pub ground_truth: String,
    /// One-based position of the ground truth in `ranked`.
    pub ground_truth_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBreakdown {
    pub samples: usize,
    pub topk: TopK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTopK {
    pub trial: u64,
    pub topk: TopK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub per_trial: Vec<TrialTopK>,
    pub mean: TopK,
    /// Population standard deviation across trials.
    pub std: TopK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub run_config: serde_json::Value,
    /// Values derived from `run_config` at run time, such as the effective
    /// smoothing width and the calibration actually applied.
    #[serde(default)]
    pub resolved: serde_json::Value,
    pub method: Method,
    pub tie_policy: String,
    pub videos: usize,
    pub topk: TopK,
    pub per_domain: BTreeMap<String, DomainBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<TrialSummary>,
    pub per_video: Vec<ScoredVideo>,
}

fn index_predictions<'a>(
    predictions: &'a [VideoPrediction],
    manifest: &DatasetManifest,
) -> Result<Vec<(&'a VideoPrediction, usize)>> {
    let by_id: HashMap<&str, &VideoPrediction> =
        predictions.iter().map(|p| (p.video_id.as_str(), p)).collect();
    manifest
        .videos
        .iter()
        .map(|v| {
            let p = by_id
                .get(v.video_id.as_str())
                .ok_or_else(|| Error::MissingPrediction(v.video_id.clone()))?;
            let rank = p.rank_of(&v.ground_truth).ok_or_else(|| Error::InvalidVideo {
                video_id: v.video_id.clone(),
                field: "ground_truth",
                reason: "ground truth absent from the ranked candidates".into(),
            })?;
            Ok((*p, rank))
        })
        .collect()
}

fn accuracy_from_ranks(ranks: &[usize], k: usize) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}

fn topk_from_ranks(ranks: &[usize]) -> TopK {
    REPORTED_K
        .iter()
        .map(|&k| (k, accuracy_from_ranks(ranks, k)))
        .collect()
}

/// Fraction of manifest videos whose ground truth ranks within the top `k`.
pub fn topk_accuracy(predictions: &[VideoPrediction], manifest: &DatasetManifest, k: usize) -> Result<f64> {
    let ranks: Vec<usize> = index_predictions(predictions, manifest)?
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    Ok(accuracy_from_ranks(&ranks, k))
}

pub fn per_domain_breakdown(
    predictions: &[VideoPrediction],
    manifest: &DatasetManifest,
) -> Result<BTreeMap<String, DomainBreakdown>> {
    let indexed = index_predictions(predictions, manifest)?;
    let mut ranks: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (v, (_, rank)) in manifest.videos.iter().zip(&indexed) {
        ranks.entry(v.domain.as_str()).or_default().push(*rank);
    }
    Ok(ranks
        .into_iter()
        .map(|(domain, r)| {
            (
                domain.to_string(),
                DomainBreakdown {
                    samples: r.len(),
                    topk: topk_from_ranks(&r),
                },
            )
        })
        .collect())
}

fn summarize_trials(trials: &[Vec<VideoPrediction>], manifest: &DatasetManifest) -> Result<TrialSummary> {
    let mut per_trial = Vec::with_capacity(trials.len());
    for (i, preds) in trials.iter().enumerate() {
        let ranks: Vec<usize> = index_predictions(preds, manifest)?
            .into_iter()
            .map(|(_, r)| r)
            .collect();
        per_trial.push(TrialTopK {
            trial: i as u64,
            topk: topk_from_ranks(&ranks),
        });
    }
    let n = per_trial.len().max(1) as f64;
    let mut mean = TopK::new();
    let mut std = TopK::new();
    for k in REPORTED_K {
        let vals: Vec<f64> = per_trial.iter().map(|t| t.topk[&k]).collect();
        let m = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        mean.insert(k, m);
        std.insert(k, var.sqrt());
    }
    Ok(TrialSummary {
        per_trial,
        mean,
        std,
    })
}

/// Assembles a report. `trials`, when given, holds one prediction set per
/// trial and `predictions` must be the first of them.
pub fn build_report(
    run_config: serde_json::Value,
    method: Method,
    manifest: &DatasetManifest,
    predictions: &[VideoPrediction],
    trials: Option<&[Vec<VideoPrediction>]>,
) -> Result<EvaluationReport> {
    let indexed = index_predictions(predictions, manifest)?;
    let ranks: Vec<usize> = indexed.iter().map(|(_, r)| *r).collect();
    let per_video = manifest
        .videos
        .iter()
        .zip(&indexed)
        .map(|(v, (p, rank))| ScoredVideo {
            prediction: (*p).clone(),
            domain: v.domain.clone(),
            ground_truth: v.ground_truth.clone(),
            ground_truth_rank: *rank,
        })
        .collect();
    Ok(EvaluationReport {
        run_config,
        resolved: serde_json::Value::Null,
        method,
        tie_policy: TIE_POLICY.to_string(),
        videos: manifest.len(),
        topk: topk_from_ranks(&ranks),
        per_domain: per_domain_breakdown(predictions, manifest)?,
        trials: trials.map(|t| summarize_trials(t, manifest)).transpose()?,
        per_video,
    })
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn top(&self, k: usize) -> f64 {
        self.topk.get(&k).copied().unwrap_or(f64::NAN)
    }

    /// Manifest videos that have no entry in `per_video`.
    pub fn missing_videos(&self, manifest: &DatasetManifest) -> Vec<String> {
        let have: std::collections::HashSet<&str> = self
            .per_video
            .iter()
            .map(|v| v.prediction.video_id.as_str())
            .collect();
        manifest
            .videos
            .iter()
            .filter(|v| !have.contains(v.video_id.as_str()))
            .map(|v| v.video_id.clone())
            .collect()
    }

    /// Fixed-width summary with percentages to two decimals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {}  videos: {}", self.method.label(), self.videos);
        let _ = writeln!(out, "{:<24} {:>8} {:>9} {:>9} {:>9}", "", "samples", "Top-1", "Top-2", "Top-3");
        let row = |out: &mut String, label: &str, n: usize, t: &TopK| {
            let _ = writeln!(
                out,
                "{:<24} {:>8} {:>9.2} {:>9.2} {:>9.2}",
                truncate(label, 24),
                n,
                t[&1] * 100.0,
                t[&2] * 100.0,
                t[&3] * 100.0
            );
        };
        row(&mut out, "all", self.videos, &self.topk);
        for (domain, b) in &self.per_domain {
            row(&mut out, domain, b.samples, &b.topk);
        }
        if let Some(trials) = &self.trials {
            let _ = writeln!(out, "trials: {}", trials.per_trial.len());
            for k in REPORTED_K {
                let _ = writeln!(
                    out,
                    "  Top-{k}: {:.2} ± {:.2}",
                    trials.mean[&k] * 100.0,
                    trials.std[&k] * 100.0
                );
            }
        }
        out
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        s.chars().take(n - 1).chain(std::iter::once('~')).collect()
    }
}

/// One row per labelled report, Top-k in percent. Multi-trial rows show
/// mean ± std.
pub fn comparison_table(rows: &[(String, &EvaluationReport)]) -> String {
    let width = rows
        .iter()
        .map(|(l, _)| l.chars().count())
        .max()
        .unwrap_or(0)
        .max("configuration".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>15}  {:>15}  {:>15}",
        "configuration", "Top-1 (%)", "Top-2 (%)", "Top-3 (%)"
    );
    for (label, r) in rows {
        let cell = |k: usize| match &r.trials {
            Some(t) if t.per_trial.len() > 1 => {
                format!("{:.2} ± {:.2}", t.mean[&k] * 100.0, t.std[&k] * 100.0)
            }
            _ => format!("{:.2}", r.topk[&k] * 100.0),
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:>15}  {:>15}  {:>15}",
            label,
            cell(1),
            cell(2),
            cell(3)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::rank_candidates;
    use crate::corpus::VideoEntry;
    use approx::assert_abs_diff_eq;
    use std::path::PathBuf;

    fn entry(id: &str, domain: &str, n: usize) -> VideoEntry {
        VideoEntry {
            video_id: id.into(),
            domain: domain.into(),
            frame_count: 1,
            candidates: (0..n).map(|i| format!("c{i}")).collect(),
            ground_truth: "c0".into(),
            embedding_file: PathBuf::from(format!("{id}.aaln")),
        }
    }

    /// Prediction that puts the ground truth at `rank` (one-based).
    fn with_rank(v: &VideoEntry, rank: usize) -> VideoPrediction {
        // Other candidates score 9, 8, 7, ...; the ground truth slots in
        // just below the (rank - 1)th of them.
        let mut scores: Vec<f64> = (0..v.candidates.len()).map(|i| 10.0 - i as f64).collect();
        scores[0] = if rank == 1 { 100.0 } else { 10.0 - (rank - 1) as f64 - 0.5 };
        rank_candidates(v, &scores, Method::Random).unwrap()
    }

    fn manifest(videos: Vec<VideoEntry>) -> DatasetManifest {
        DatasetManifest {
            videos,
            ..Default::default()
        }
    }

    #[test]
    fn counts_ranks_directly() {
        let vids: Vec<VideoEntry> = (0..4).map(|i| entry(&format!("v{i}"), "d", 6)).collect();
        let preds: Vec<VideoPrediction> = vids
            .iter()
            .zip([1, 2, 3, 5])
            .map(|(v, r)| with_rank(v, r))
            .collect();
        for (p, r) in preds.iter().zip([1, 2, 3, 5]) {
            assert_eq!(p.rank_of("c0"), Some(r));
        }
        let m = manifest(vids);
        assert_eq!(topk_accuracy(&preds, &m, 1).unwrap(), 0.25);
        assert_eq!(topk_accuracy(&preds, &m, 2).unwrap(), 0.5);
        assert_eq!(topk_accuracy(&preds, &m, 3).unwrap(), 0.75);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let vids: Vec<VideoEntry> = (0..3).map(|i| entry(&format!("v{i}"), "d", 4)).collect();
        let preds: Vec<_> = vids.iter().map(|v| with_rank(v, 1)).collect();
        let m = manifest(vids);
        for k in REPORTED_K {
            assert_eq!(topk_accuracy(&preds, &m, k).unwrap(), 1.0);
        }
    }

    #[test]
    fn missing_prediction_is_an_error() {
        let vids = vec![entry("v0", "d", 3), entry("v1", "d", 3)];
        let preds = vec![with_rank(&vids[0], 1)];
        let m = manifest(vids);
        assert!(matches!(topk_accuracy(&preds, &m, 1), Err(Error::MissingPrediction(id)) if id == "v1"));
    }

    #[test]
    fn domain_partition() {
        let single: Vec<VideoEntry> = (0..5).map(|i| entry(&format!("v{i}"), "only", 5)).collect();
        let preds: Vec<_> = single.iter().zip([1, 3, 2, 5, 1]).map(|(v, r)| with_rank(v, r)).collect();
        let m = manifest(single);
        let r = build_report(serde_json::Value::Null, Method::Random, &m, &preds, None).unwrap();
        assert_eq!(r.per_domain.len(), 1);
        assert_eq!(r.per_domain["only"].topk, r.topk);

        let mut vids: Vec<VideoEntry> = (0..3).map(|i| entry(&format!("a{i}"), "right", 4)).collect();
        vids.extend((0..2).map(|i| entry(&format!("b{i}"), "wrong", 4)));
        let preds: Vec<_> = vids
            .iter()
            .map(|v| with_rank(v, if v.domain == "right" { 1 } else { 4 }))
            .collect();
        let m = manifest(vids);
        let r = build_report(serde_json::Value::Null, Method::Random, &m, &preds, None).unwrap();
        assert_eq!(r.per_domain["right"].topk[&1], 1.0);
        assert_eq!(r.per_domain["wrong"].topk[&1], 0.0);
        assert_eq!(r.per_domain["right"].samples + r.per_domain["wrong"].samples, 5);
        assert_abs_diff_eq!(r.topk[&1], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn trial_summary_uses_population_std() {
        let vids = vec![entry("v0", "d", 4), entry("v1", "d", 4)];
        let m = manifest(vids.clone());
        let t0 = vec![with_rank(&vids[0], 1), with_rank(&vids[1], 1)];
        let t1 = vec![with_rank(&vids[0], 1), with_rank(&vids[1], 4)];
        let trials = vec![t0.clone(), t1];
        let r = build_report(serde_json::Value::Null, Method::RandomizedOrder, &m, &t0, Some(&trials)).unwrap();
        let s = r.trials.as_ref().unwrap();
        assert_eq!(s.per_trial.len(), 2);
        assert_abs_diff_eq!(s.mean[&1], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s.std[&1], 0.25, epsilon = 1e-12);
        assert!(r.to_table().contains("75.00 ± 25.00"));
    }

    #[test]
    fn tables_print_two_decimals() {
        let vids = vec![entry("v0", "soccer", 3), entry("v1", "soccer", 3), entry("v2", "golf", 3)];
        let preds: Vec<_> = vids.iter().zip([1, 2, 3]).map(|(v, r)| with_rank(v, r)).collect();
        let m = manifest(vids);
        let r = build_report(serde_json::json!({"k": 1}), Method::Actalign, &m, &preds, None).unwrap();
        let t = r.to_table();
        assert!(t.contains("33.33"), "{t}");
        assert!(t.contains("soccer"));
        let c = comparison_table(&[("row".into(), &r)]);
        assert!(c.contains("33.33") && c.contains("66.67") && c.contains("100.00"), "{c}");
        assert!(r.missing_videos(&m).is_empty());
        let bigger = manifest(vec![entry("v0", "s", 3), entry("vx", "s", 3)]);
        assert_eq!(r.missing_videos(&bigger), vec!["vx".to_string()]);
    }

    #[test]
    fn report_json_round_trips() {
        let vids = vec![entry("v0", "d", 3)];
        let preds = vec![with_rank(&vids[0], 2)];
        let m = manifest(vids);
        let r = build_report(serde_json::json!({"seed": 0}), Method::Actalign, &m, &preds, None).unwrap();
        let back: EvaluationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.per_video[0].ground_truth_rank, 2);
    }
}
