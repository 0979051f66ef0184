//! Candidate scoring for one video: sub-action alignment and the pooled
//! baselines it is compared against.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affinity::CalibrationParams;
use crate::align::{align_smoothed, DtwConfig};
use crate::corpus::{ClassNameEmbedding, EmbeddingSequence, SubActionScript, VideoEntry};
use crate::error::{Error, Result};
use crate::signal::{smooth, SmoothingConfig};
use crate::tensor::{dot, pooled_unit_mean, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Normalized DTW score against each candidate's sub-action script.
    Actalign,
    /// Cosine between pooled frames and the class-name embedding.
    MeanPoolName,
    /// Same as `MeanPoolName` with context-augmented name embeddings.
    MeanPoolContext,
    /// Cosine between pooled frames and pooled sub-action embeddings.
    BagOfWords,
    /// Alignment against scripts in reverse order.
    ReversedOrder,
    /// Alignment against randomly permuted scripts.
    RandomizedOrder,
    /// Uniform random scores; chance-level reference.
    Random,
}

impl Method {
    pub fn uses_scripts(self) -> bool {
        matches!(
            self,
            Method::Actalign | Method::BagOfWords | Method::ReversedOrder | Method::RandomizedOrder
        )
    }

    pub fn uses_alignment(self) -> bool {
        matches!(
            self,
            Method::Actalign | Method::ReversedOrder | Method::RandomizedOrder
        )
    }

    /// Methods whose outcome depends on the trial seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::RandomizedOrder | Method::Random)
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Actalign => "actalign",
            Method::MeanPoolName => "mean-pool",
            Method::MeanPoolContext => "mean-pool-context",
            Method::BagOfWords => "bag-of-words",
            Method::ReversedOrder => "reversed",
            Method::RandomizedOrder => "randomized",
            Method::Random => "random",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "actalign" => Method::Actalign,
            "mean-pool" | "mean_pool" | "mean_pool_name" => Method::MeanPoolName,
            "mean-pool-context" | "mean_pool_context" => Method::MeanPoolContext,
            "bag-of-words" | "bag_of_words" => Method::BagOfWords,
            "reversed" | "reversed_order" => Method::ReversedOrder,
            "randomized" | "randomized_order" => Method::RandomizedOrder,
            "random" => Method::Random,
            other => return Err(Error::Config(format!("unknown method `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub class_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoPrediction {
    pub video_id: String,
    pub method: Method,
    /// Every candidate, best first. Equal scores keep manifest order.
    pub ranked: Vec<RankedCandidate>,
    pub predicted: String,
}

impl VideoPrediction {
    /// One-based position of `class_id` in `ranked`.
    pub fn rank_of(&self, class_id: &str) -> Option<usize> {
        self.ranked
            .iter()
            .position(|c| c.class_id == class_id)
            .map(|i| i + 1)
    }

    pub fn score_of(&self, class_id: &str) -> Option<f64> {
        self.ranked
            .iter()
            .find(|c| c.class_id == class_id)
            .map(|c| c.score)
    }
}

/// Sorts candidates by descending score. `scores[i]` belongs to
/// `video.candidates[i]`; the sort is stable so ties keep manifest order.
pub fn rank_candidates(video: &VideoEntry, scores: &[f64], method: Method) -> Result<VideoPrediction> {
    if scores.len() != video.candidates.len() {
        return Err(Error::DimensionMismatch {
            context: format!("scores for video {}", video.video_id),
            left: scores.len(),
            right: video.candidates.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidVideo {
            video_id: video.video_id.clone(),
            field: "candidates",
            reason: format!("non-finite score for {}", video.candidates[i]),
        });
    }
    let mut ranked: Vec<RankedCandidate> = video
        .candidates
        .iter()
        .zip(scores)
        .map(|(c, &score)| RankedCandidate {
            class_id: c.clone(),
            score,
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    let predicted = ranked
        .first()
        .map(|c| c.class_id.clone())
        .ok_or_else(|| Error::InvalidVideo {
            video_id: video.video_id.clone(),
            field: "candidates",
            reason: "no candidates".into(),
        })?;
    Ok(VideoPrediction {
        video_id: video.video_id.clone(),
        method,
        ranked,
        predicted,
    })
}

fn script_for<'a>(
    scripts: &'a BTreeMap<String, SubActionScript>,
    class_id: &str,
) -> Result<&'a SubActionScript> {
    scripts.get(class_id).ok_or_else(|| Error::MissingScript {
        class_id: class_id.to_string(),
    })
}

/// Scores every candidate by the normalized alignment score of its script.
pub fn classify_actalign(
    video: &VideoEntry,
    seq: &EmbeddingSequence,
    scripts: &BTreeMap<String, SubActionScript>,
    cal: &CalibrationParams,
    smoothing: SmoothingConfig,
    dtw: &DtwConfig,
) -> Result<VideoPrediction> {
    let smoothed = smooth(seq, smoothing);
    classify_aligned(video, &smoothed, Method::Actalign, cal, dtw, |class_id| {
        script_for(scripts, class_id).map(Cow::Borrowed)
    })
}

/// Alignment scoring with a caller-supplied script per candidate, applied to
/// frames that are already smoothed.
pub fn classify_aligned<'s, F>(
    video: &VideoEntry,
    smoothed: &EmbeddingSequence,
    method: Method,
    cal: &CalibrationParams,
    dtw: &DtwConfig,
    mut script: F,
) -> Result<VideoPrediction>
where
    F: FnMut(&str) -> Result<Cow<'s, SubActionScript>>,
{
    let scores = video
        .candidates
        .iter()
        .map(|c| {
            let s = script(c)?;
            Ok(align_smoothed(&s, smoothed, cal, dtw)?.normalized_score)
        })
        .collect::<Result<Vec<f64>>>()?;
    rank_candidates(video, &scores, method)
}

/// Cosine between the pooled, renormalized frames and each candidate's
/// name embedding. `context` selects the method label for
/// context-augmented names.
pub fn classify_mean_pool(
    video: &VideoEntry,
    seq: &EmbeddingSequence,
    names: &BTreeMap<String, ClassNameEmbedding>,
    context: bool,
) -> Result<VideoPrediction> {
    let pooled = pooled_unit_mean(&seq.frames);
    let scores = video
        .candidates
        .iter()
        .map(|c| {
            let name = names.get(c).ok_or_else(|| Error::MissingNameEmbedding {
                class_id: c.clone(),
            })?;
            cosine_to_pooled(pooled.as_deref(), &name.embedding, c)
        })
        .collect::<Result<Vec<f64>>>()?;
    let method = if context {
        Method::MeanPoolContext
    } else {
        Method::MeanPoolName
    };
    rank_candidates(video, &scores, method)
}

/// Cosine between pooled frames and each candidate's pooled sub-actions.
pub fn classify_bag_of_words(
    video: &VideoEntry,
    seq: &EmbeddingSequence,
    scripts: &BTreeMap<String, SubActionScript>,
) -> Result<VideoPrediction> {
    let pooled = pooled_unit_mean(&seq.frames);
    let scores = video
        .candidates
        .iter()
        .map(|c| {
            let script = script_for(scripts, c)?;
            let bag = pooled_unit_mean(script.embeddings()?).ok_or_else(|| Error::InvalidScript {
                class_id: c.clone(),
                reason: "sub-action embeddings cancel out when pooled".into(),
            })?;
            cosine_to_pooled(pooled.as_deref(), &bag, c)
        })
        .collect::<Result<Vec<f64>>>()?;
    rank_candidates(video, &scores, Method::BagOfWords)
}

fn cosine_to_pooled(pooled: Option<&[f32]>, other: &[f32], class_id: &str) -> Result<f64> {
    let Some(pooled) = pooled else {
        // Frames that average to zero carry no direction.
        return Ok(0.0);
    };
    if pooled.len() != other.len() {
        return Err(Error::DimensionMismatch {
            context: format!("pooled frames vs class {class_id}"),
            left: pooled.len(),
            right: other.len(),
        });
    }
    Ok(dot(pooled, other))
}

/// Uniform random scores, one per candidate, drawn from `seed`.
pub fn classify_random(video: &VideoEntry, seed: u64) -> Result<VideoPrediction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scores: Vec<f64> = video.candidates.iter().map(|_| rng.gen::<f64>()).collect();
    rank_candidates(video, &scores, Method::Random)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    Reversed,
    Randomized { seed: u64 },
}

/// Reorders sub-actions (texts and embedding rows together).
pub fn perturb_script(script: &SubActionScript, mode: Perturbation) -> SubActionScript {
    let mut order: Vec<usize> = (0..script.len()).collect();
    match mode {
        Perturbation::Reversed => order.reverse(),
        Perturbation::Randomized { seed } => {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
    }
    let texts = order.iter().map(|&i| script.texts[i].clone()).collect();
    let embeddings = script.embeddings.as_ref().map(|m| {
        let rows: Vec<&[f32]> = order.iter().map(|&i| m.row(i)).collect();
        Matrix::from_rows(&rows).expect("rows share one width")
    });
    SubActionScript {
        texts,
        embeddings,
        ..script.clone()
    }
}

/// Deterministic seed for one (trial, video, class) triple. Independent of
/// the order in which work items are processed.
pub fn derive_seed(run_seed: u64, trial: u64, video_id: &str, class_id: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    let bytes = video_id
        .bytes()
        .chain(std::iter::once(0xff))
        .chain(class_id.bytes());
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(splitmix64(run_seed ^ splitmix64(trial)) ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::sigmoid;
    use crate::corpus::PromptStyle;
    use crate::tensor::Matrix;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::path::PathBuf;

    fn video(candidates: &[&str]) -> VideoEntry {
        VideoEntry {
            video_id: "v".into(),
            domain: "d".into(),
            frame_count: 1,
            candidates: candidates.iter().map(|s| s.to_string()).collect(),
            ground_truth: candidates[0].to_string(),
            embedding_file: PathBuf::from("v.aaln"),
        }
    }

    fn seq(rows: &[Vec<f32>]) -> EmbeddingSequence {
        EmbeddingSequence::normalized("v", Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn script(class_id: &str, rows: &[Vec<f32>]) -> SubActionScript {
        SubActionScript {
            class_id: class_id.into(),
            domain: "d".into(),
            texts: (0..rows.len()).map(|i| format!("{class_id} step {i}")).collect(),
            embeddings: Some(Matrix::from_rows(rows).unwrap()),
            prompt_style: PromptStyle::ShortFixed,
            context_augmented: false,
        }
    }

    fn name(class_id: &str, v: Vec<f32>) -> (String, ClassNameEmbedding) {
        (
            class_id.to_string(),
            ClassNameEmbedding {
                class_id: class_id.into(),
                name: class_id.into(),
                embedding: v,
            },
        )
    }

    fn e(i: usize) -> Vec<f32> {
        let mut v = vec![0.0f32; 4];
        v[i] = 1.0;
        v
    }

    #[test]
    fn matching_script_beats_orthogonal_one() {
        let frames = seq(&[e(0), e(0), e(1), e(1)]);
        let scripts = BTreeMap::from([
            ("a".to_string(), script("a", &[e(0), e(1)])),
            ("b".to_string(), script("b", &[e(2), e(3)])),
        ]);
        let cal = CalibrationParams::new(5.0, -1.0).unwrap();
        let p = classify_actalign(
            &video(&["b", "a"]),
            &frames,
            &scripts,
            &cal,
            SmoothingConfig::identity(),
            &DtwConfig::default(),
        )
        .unwrap();
        assert_eq!(p.predicted, "a");
        // The max-sum path for A takes all four matching cells plus one
        // mismatched cell, since any extra positive cell raises the sum.
        let a = (4.0 * sigmoid(4.0) + sigmoid(-1.0)) / 5.0;
        assert_abs_diff_eq!(p.score_of("a").unwrap(), a, epsilon = 1e-9);
        assert_abs_diff_eq!(p.score_of("b").unwrap(), sigmoid(-1.0), epsilon = 1e-9);
    }

    #[test]
    fn single_candidate_is_always_predicted() {
        let scripts = BTreeMap::from([("a".to_string(), script("a", &[e(2)]))]);
        let p = classify_actalign(
            &video(&["a"]),
            &seq(&[e(0)]),
            &scripts,
            &CalibrationParams::default(),
            SmoothingConfig::identity(),
            &DtwConfig::default(),
        )
        .unwrap();
        assert_eq!(p.predicted, "a");
        assert_eq!(p.ranked.len(), 1);
    }

    #[test]
    fn ties_resolve_to_manifest_order() {
        let scripts = BTreeMap::from([
            ("a".to_string(), script("a", &[e(0), e(1)])),
            ("b".to_string(), script("b", &[e(0), e(1)])),
        ]);
        let frames = seq(&[e(0), e(1), e(2)]);
        for order in [["a", "b"], ["b", "a"]] {
            let p = classify_actalign(
                &video(&order),
                &frames,
                &scripts,
                &CalibrationParams::default(),
                SmoothingConfig::identity(),
                &DtwConfig::default(),
            )
            .unwrap();
            assert_eq!(p.predicted, order[0]);
        }
    }

    #[test]
    fn missing_script_is_an_error() {
        let scripts = BTreeMap::from([("a".to_string(), script("a", &[e(0)]))]);
        let err = classify_actalign(
            &video(&["a", "zz"]),
            &seq(&[e(0)]),
            &scripts,
            &CalibrationParams::default(),
            SmoothingConfig::identity(),
            &DtwConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingScript { class_id } if class_id == "zz"));
    }

    #[test]
    fn mean_pool_scores() {
        let h = std::f32::consts::FRAC_1_SQRT_2;
        let names = BTreeMap::from([
            name("a", vec![h, h, 0.0, 0.0]),
            name("b", e(2)),
            name("c", e(0)),
        ]);
        let p = classify_mean_pool(&video(&["b", "a", "c"]), &seq(&[e(0), e(1)]), &names, false).unwrap();
        assert_eq!(p.method, Method::MeanPoolName);
        assert_abs_diff_eq!(p.score_of("a").unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.score_of("b").unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.score_of("c").unwrap(), f64::from(h), epsilon = 1e-6);
        assert_eq!(p.predicted, "a");

        let same = classify_mean_pool(&video(&["c", "b"]), &seq(&[e(0), e(0)]), &names, true).unwrap();
        assert_eq!(same.method, Method::MeanPoolContext);
        assert_abs_diff_eq!(same.score_of("c").unwrap(), 1.0, epsilon = 1e-9);

        let missing = classify_mean_pool(&video(&["a", "q"]), &seq(&[e(0)]), &names, false);
        assert!(matches!(missing, Err(Error::MissingNameEmbedding { .. })));
    }

    #[test]
    fn bag_of_words_matches_hand_computed_pooling() {
        let frames = seq(&[vec![1.0, 2.0, 0.0], vec![0.5, -1.0, 2.0], vec![3.0, 0.0, 1.0]]);
        let sa = vec![vec![0.0f32, 1.0, 0.0], vec![0.6, 0.0, 0.8]];
        let sb = vec![vec![1.0f32, 0.0, 0.0]];
        let scripts = BTreeMap::from([
            ("a".to_string(), script("a", &sa)),
            ("b".to_string(), script("b", &sb)),
        ]);
        let p = classify_bag_of_words(&video(&["a", "b"]), &frames, &scripts).unwrap();

        let mean = |rows: Vec<Vec<f64>>| -> Vec<f64> {
            let n = rows.len() as f64;
            let mut m = vec![0.0; rows[0].len()];
            for r in &rows {
                for (a, b) in m.iter_mut().zip(r) {
                    *a += b / n;
                }
            }
            let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
            m.iter().map(|x| x / norm).collect()
        };
        let as64 = |m: &Matrix| m.iter_rows().map(|r| r.iter().map(|&x| f64::from(x)).collect()).collect();
        let vf = mean(as64(&frames.frames));
        for (id, rows) in [("a", &sa), ("b", &sb)] {
            let m = Matrix::from_rows(rows).unwrap();
            let vs = mean(as64(&m));
            let expect: f64 = vf.iter().zip(&vs).map(|(x, y)| x * y).sum();
            assert_abs_diff_eq!(p.score_of(id).unwrap(), expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn single_step_bag_matches_name_baseline() {
        let frames = seq(&[vec![1.0, 2.0, 0.5, 0.0], vec![0.0, 1.0, 1.0, 1.0]]);
        let ua = vec![0.5f32, 0.5, 0.5, 0.5];
        let ub = vec![0.0f32, 0.6, 0.8, 0.0];
        let scripts = BTreeMap::from([
            ("a".to_string(), script("a", std::slice::from_ref(&ua))),
            ("b".to_string(), script("b", std::slice::from_ref(&ub))),
        ]);
        let names = BTreeMap::from([name("a", ua), name("b", ub)]);
        let v = video(&["a", "b"]);
        let bow = classify_bag_of_words(&v, &frames, &scripts).unwrap();
        let pool = classify_mean_pool(&v, &frames, &names, false).unwrap();
        let ids = |p: &VideoPrediction| p.ranked.iter().map(|c| c.class_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&bow), ids(&pool));
    }

    #[test]
    fn identical_rows_pool_to_that_row() {
        let row = vec![0.0f32, 0.6, 0.0, 0.8];
        let m = Matrix::from_rows(&[row.clone(), row.clone(), row.clone()]).unwrap();
        let pooled = pooled_unit_mean(&m).unwrap();
        for (a, b) in pooled.iter().zip(&row) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn perturbations() {
        let s = script("a", &[e(0), e(1), e(2), e(3)]);
        let rev = perturb_script(&s, Perturbation::Reversed);
        assert_eq!(rev.texts, s.texts.iter().rev().cloned().collect::<Vec<_>>());
        assert_eq!(rev.embeddings.as_ref().unwrap().row(0), e(3).as_slice());
        assert_eq!(rev.class_id, "a");
        assert_eq!(perturb_script(&rev, Perturbation::Reversed), s);

        let r1 = perturb_script(&s, Perturbation::Randomized { seed: 42 });
        let r2 = perturb_script(&s, Perturbation::Randomized { seed: 42 });
        assert_eq!(r1, r2);
        let mut sorted = r1.texts.clone();
        sorted.sort();
        assert_eq!(sorted, s.texts);
        for (i, t) in r1.texts.iter().enumerate() {
            let j = s.texts.iter().position(|x| x == t).unwrap();
            assert_eq!(r1.embeddings.as_ref().unwrap().row(i), s.embeddings.as_ref().unwrap().row(j));
        }

        let one = script("a", &[e(0)]);
        assert_eq!(perturb_script(&one, Perturbation::Reversed), one);
        assert_eq!(perturb_script(&one, Perturbation::Randomized { seed: 9 }), one);
    }

    #[test]
    fn randomized_permutations_are_uniform() {
        let s = script("a", &[e(0), e(1), e(2)]);
        let mut counts = BTreeMap::new();
        let trials = 6000;
        for seed in 0..trials {
            let p = perturb_script(&s, Perturbation::Randomized { seed });
            *counts.entry(p.texts.clone()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for &c in counts.values() {
            // Expected 1000 each; 5 sigma is about 144.
            assert!((c as i64 - 1000).abs() < 150, "{counts:?}");
        }
    }

    #[test]
    fn derived_seeds_differ_by_every_component() {
        let base = derive_seed(1, 0, "v", "c");
        assert_eq!(base, derive_seed(1, 0, "v", "c"));
        assert_ne!(base, derive_seed(2, 0, "v", "c"));
        assert_ne!(base, derive_seed(1, 1, "v", "c"));
        assert_ne!(base, derive_seed(1, 0, "w", "c"));
        assert_ne!(base, derive_seed(1, 0, "v", "d"));
        assert_ne!(derive_seed(1, 0, "ab", "c"), derive_seed(1, 0, "a", "bc"));
    }

    #[test]
    fn method_names_parse() {
        for m in [
            Method::Actalign,
            Method::MeanPoolName,
            Method::MeanPoolContext,
            Method::BagOfWords,
            Method::ReversedOrder,
            Method::RandomizedOrder,
            Method::Random,
        ] {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("dtw".parse::<Method>().is_err());
    }

    proptest! {
        #[test]
        fn positive_rescaling_keeps_ranking(
            scores in proptest::collection::vec(0.0f64..1.0, 2..7),
            c in 0.01f64..100.0,
        ) {
            let ids: Vec<String> = (0..scores.len()).map(|i| format!("c{i}")).collect();
            let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let v = video(&refs);
            let a = rank_candidates(&v, &scores, Method::Random).unwrap();
            let scaled: Vec<f64> = scores.iter().map(|s| s * c).collect();
            let b = rank_candidates(&v, &scaled, Method::Random).unwrap();
            let ia: Vec<_> = a.ranked.iter().map(|x| &x.class_id).collect();
            let ib: Vec<_> = b.ranked.iter().map(|x| &x.class_id).collect();
            prop_assert_eq!(ia, ib);
            prop_assert_eq!(a.predicted, b.predicted);
        }

        #[test]
        fn candidate_order_only_matters_for_ties(
            scores in proptest::collection::hash_set(0u32..1_000_000, 2..7),
            seed in any::<u64>(),
        ) {
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let ids: Vec<String> = (0..scores.len()).map(|i| format!("c{i}")).collect();
            let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let a = rank_candidates(&video(&refs), &scores, Method::Random).unwrap();

            let mut perm: Vec<usize> = (0..scores.len()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let pids: Vec<&str> = perm.iter().map(|&i| refs[i]).collect();
            let pscores: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
            let b = rank_candidates(&video(&pids), &pscores, Method::Random).unwrap();
            prop_assert_eq!(a.ranked, b.ranked);
        }
    }
}
