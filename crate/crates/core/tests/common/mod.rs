//! Independent reference implementations and fixtures for integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use subalign_core::tensor::{write_tensor, Matrix};

/// Every monotone path with steps (1,0), (0,1), (1,1) from (0,0) to `end`.
pub fn enumerate_paths(end: (usize, usize)) -> Vec<Vec<(usize, usize)>> {
    fn walk(
        cur: (usize, usize),
        end: (usize, usize),
        path: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if cur == end {
            out.push(path.clone());
            return;
        }
        for (dk, dt) in [(1, 0), (0, 1), (1, 1)] {
            let next = (cur.0 + dk, cur.1 + dt);
            if next.0 <= end.0 && next.1 <= end.1 {
                path.push(next);
                walk(next, end, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk((0, 0), end, &mut vec![(0, 0)], &mut out);
    out
}

pub fn path_sum(a: &[Vec<f64>], path: &[(usize, usize)]) -> f64 {
    path.iter().map(|&(k, t)| a[k][t]).sum()
}

/// Largest path sum ending at `end`, and the path that attains it.
pub fn best_path(a: &[Vec<f64>], end: (usize, usize)) -> (f64, Vec<(usize, usize)>) {
    enumerate_paths(end)
        .into_iter()
        .map(|p| (path_sum(a, &p), p))
        .fold((f64::NEG_INFINITY, Vec::new()), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        })
}

/// Largest path sum over every possible end cell.
pub fn best_open_end(a: &[Vec<f64>]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for k in 0..a.len() {
        for t in 0..a[0].len() {
            best = best.max(best_path(a, (k, t)).0);
        }
    }
    best
}

/// Moving average written as the literal triple loop: frame, window offset,
/// dimension. Out-of-range frames contribute zero; divisor is `w`.
pub fn smooth_triple_loop(rows: &[Vec<f32>], w: usize) -> Vec<Vec<f64>> {
    let t_len = rows.len();
    let d = rows[0].len();
    let half = (w / 2) as isize;
    let mut out = vec![vec![0.0f64; d]; t_len];
    for t in 0..t_len {
        for off in -half..=half {
            let tau = t as isize + off;
            if tau < 0 || tau >= t_len as isize {
                continue;
            }
            for j in 0..d {
                out[t][j] += f64::from(rows[tau as usize][j]);
            }
        }
        for j in 0..d {
            out[t][j] /= w as f64;
        }
    }
    out
}

pub fn random_unit(rng: &mut impl Rng, d: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..d).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let n = v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| (f64::from(*x) / n) as f32).collect();
        }
    }
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, d: usize) -> Matrix {
    let r: Vec<Vec<f32>> = (0..rows).map(|_| random_unit(rng, d)).collect();
    Matrix::from_rows(&r).unwrap()
}

/// Paths of a small on-disk corpus.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub manifest: PathBuf,
    pub scripts: PathBuf,
    pub plain_scripts: PathBuf,
    pub short_fixed_scripts: PathBuf,
    pub names: PathBuf,
    pub context_names: PathBuf,
    pub calibration: PathBuf,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub const DIM: usize = 8;

/// Two videos with two or three candidates each. Every class has a script
/// whose steps are noisy copies of its "true" video's frame segments, so
/// the ground truth should win under alignment.
pub fn write_fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let classes = ["axel", "lutz", "salchow"];
    let protos: Vec<Vec<Vec<f32>>> = classes
        .iter()
        .map(|_| (0..3).map(|_| random_unit(&mut rng, DIM)).collect())
        .collect();

    let noisy = |rng: &mut ChaCha8Rng, v: &[f32], amount: f32| -> Vec<f32> {
        v.iter().map(|x| x + rng.gen_range(-amount..amount)).collect()
    };

    let videos = [("clip_a", 0usize, vec!["lutz", "axel", "salchow"]), ("clip_b", 1, vec!["axel", "lutz"])];
    let mut entries = Vec::new();
    for (id, truth, candidates) in &videos {
        let mut rows = Vec::new();
        for step in &protos[*truth] {
            for _ in 0..4 {
                rows.push(noisy(&mut rng, step, 0.2));
            }
        }
        write_tensor(&root.join(format!("{id}.aaln")), &Matrix::from_rows(&rows).unwrap()).unwrap();
        entries.push(json!({
            "video_id": id,
            "domain": "figure_skating",
            "frame_count": rows.len(),
            "candidates": candidates,
            "ground_truth": classes[*truth],
            "embedding_file": format!("{id}.aaln"),
        }));
    }
    let manifest = root.join("manifest.json");
    fs::write(
        &manifest,
        serde_json::to_string_pretty(&json!({
            "videos": entries,
            "domains": {"figure_skating": "Figure Skating"},
        }))
        .unwrap(),
    )
    .unwrap();

    let write_scripts = |file: &str, tag: &str, style: &str, augmented: bool, steps: usize, rng: &mut ChaCha8Rng| {
        let mut doc = serde_json::Map::new();
        for (c, proto) in classes.iter().zip(&protos) {
            let rows: Vec<Vec<f32>> = (0..steps).map(|i| noisy(rng, &proto[i % proto.len()], 0.1)).collect();
            let tensor = format!("{tag}_{c}.aaln");
            write_tensor(&root.join(&tensor), &Matrix::from_rows(&rows).unwrap()).unwrap();
            doc.insert(
                c.to_string(),
                json!({
                    "domain": "figure_skating",
                    "texts": (0..steps).map(|i| format!("{c} step {i}")).collect::<Vec<_>>(),
                    "embedding_file": tensor,
                    "prompt_style": style,
                    "context_augmented": augmented,
                }),
            );
        }
        let path = root.join(file);
        fs::write(&path, serde_json::Value::Object(doc).to_string()).unwrap();
        path
    };
    let scripts = write_scripts("scripts_context.json", "ctx", "context_rich", true, 3, &mut rng);
    let plain_scripts = write_scripts("scripts_plain.json", "plain", "context_rich", false, 3, &mut rng);
    let short_fixed_scripts = write_scripts("scripts_short.json", "short", "short_fixed", false, 10, &mut rng);

    let write_names = |file: &str, tag: &str, rng: &mut ChaCha8Rng| {
        let mut doc = serde_json::Map::new();
        for (c, proto) in classes.iter().zip(&protos) {
            let tensor = format!("{tag}_{c}.aaln");
            let row = noisy(rng, &proto[1], 0.5);
            write_tensor(&root.join(&tensor), &Matrix::from_rows(&[row]).unwrap()).unwrap();
            doc.insert(c.to_string(), json!({"name": c, "embedding_file": tensor}));
        }
        let path = root.join(file);
        fs::write(&path, serde_json::Value::Object(doc).to_string()).unwrap();
        path
    };
    let names = write_names("names.json", "name", &mut rng);
    let context_names = write_names("names_context.json", "cname", &mut rng);

    let calibration = root.join("calibration.json");
    fs::write(&calibration, r#"{"alpha": 12.0, "beta": -4.0, "source": "fixture"}"#).unwrap();

    Fixture {
        dir,
        manifest,
        scripts,
        plain_scripts,
        short_fixed_scripts,
        names,
        context_names,
        calibration,
    }
}

pub fn fixture_config(f: &Fixture) -> subalign_core::RunConfig {
    subalign_core::RunConfig {
        manifest: f.manifest.clone(),
        scripts: Some(f.scripts.clone()),
        plain_scripts: Some(f.plain_scripts.clone()),
        short_fixed_scripts: Some(f.short_fixed_scripts.clone()),
        names: Some(f.names.clone()),
        context_names: Some(f.context_names.clone()),
        calibration: Some(f.calibration.clone()),
        smoothing_window: 3,
        ..Default::default()
    }
}
