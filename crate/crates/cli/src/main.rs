//! Command-line front end for sub-action alignment classification.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use subalign_core::align::{Endpoint, Step};
use subalign_core::classify::Method;
use subalign_core::corpus::load_manifest;
use subalign_core::engine::{
    ablation_grid, ablation_table, default_ladder, export_file_name, export_paths, sweep_csv, sweep_smoothing,
    validate_inputs, AblationRow, DiskSource, Evaluator, Inputs, WORKERS_ENV,
};
use subalign_core::report::comparison_table;
use subalign_core::{EvaluationReport, RunConfig};

#[derive(Parser)]
#[command(name = "subalign", version, about = "Zero-shot video classification by sub-action alignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every video in the manifest and write a report.
    Classify(RunArgs),
    /// Run a list of configurations and print a comparison table.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// JSON list of {"label", "config"} rows; defaults to the built-in ladder.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Top-k accuracy as a function of the smoothing window.
    SweepSmoothing {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,50")]
        windows: Vec<usize>,
    },
    /// Write the alignment path of one video against each candidate.
    ExportPaths {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        video: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check every input file and report all problems found.
    Validate(RunArgs),
    /// Re-render one or more saved reports as a table.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Manifest to check coverage against; defaults to each report's own.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Run config JSON, or a saved report whose run_config is reused.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    scripts: Option<PathBuf>,
    #[arg(long)]
    plain_scripts: Option<PathBuf>,
    #[arg(long)]
    short_fixed_scripts: Option<PathBuf>,
    #[arg(long)]
    names: Option<PathBuf>,
    #[arg(long)]
    context_names: Option<PathBuf>,
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Moving-average width in frames; even values are widened by one.
    #[arg(long)]
    smoothing_window: Option<usize>,
    #[arg(long)]
    no_renormalize: bool,
    /// anchored or open
    #[arg(long, value_parser = parse_endpoint)]
    endpoint: Option<Endpoint>,
    /// Backtracking preference on exact ties, e.g. diagonal,up,left.
    #[arg(long, value_parser = parse_tie_break)]
    tie_break: Option<[Step; 3]>,
    /// actalign, mean-pool, mean-pool-context, bag-of-words, reversed,
    /// randomized or random
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: subalign_core::Error| e.to_string())
}

fn parse_endpoint(s: &str) -> Result<Endpoint, String> {
    match s {
        "anchored" | "anchored_end" | "anchored-end" => Ok(Endpoint::AnchoredEnd),
        "open" | "open_end" | "open-end" => Ok(Endpoint::OpenEnd),
        _ => Err(format!("unknown endpoint {s:?} (expected anchored or open)")),
    }
}

fn parse_step(s: &str) -> Result<Step, String> {
    match s.trim() {
        "diagonal" | "diag" => Ok(Step::Diagonal),
        "up" => Ok(Step::Up),
        "left" => Ok(Step::Left),
        other => Err(format!("unknown step {other:?}")),
    }
}

fn parse_tie_break(s: &str) -> Result<[Step; 3], String> {
    let steps = s.split(',').map(parse_step).collect::<Result<Vec<_>, _>>()?;
    steps
        .try_into()
        .map_err(|_| "tie-break needs exactly three steps".to_string())
}

/// Failure category, mapped to the process exit code.
enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let validation = e
            .chain()
            .filter_map(|c| c.downcast_ref::<subalign_core::Error>())
            .any(subalign_core::Error::is_validation);
        if validation {
            Failure::Validation(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

impl From<subalign_core::Error> for Failure {
    fn from(e: subalign_core::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type CmdResult = Result<(), Failure>;

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                slot.clone_from(v);
            }
        };
        if let Some(m) = &self.manifest {
            cfg.manifest.clone_from(m);
        }
        set(&mut cfg.scripts, &self.scripts);
        set(&mut cfg.plain_scripts, &self.plain_scripts);
        set(&mut cfg.short_fixed_scripts, &self.short_fixed_scripts);
        set(&mut cfg.names, &self.names);
        set(&mut cfg.context_names, &self.context_names);
        set(&mut cfg.calibration, &self.calibration);
        set(&mut cfg.out, &self.out);
        set(&mut cfg.table, &self.table);
        if let Some(w) = self.smoothing_window {
            cfg.smoothing_window = w;
        }
        if self.no_renormalize {
            cfg.renormalize = false;
        }
        if let Some(e) = self.endpoint {
            cfg.endpoint = e;
        }
        if let Some(t) = self.tie_break {
            cfg.tie_break = t;
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if cfg.manifest.as_os_str().is_empty() {
            return Err(Failure::Validation(anyhow!("no manifest given (use --manifest or --config)")));
        }
        if cfg.smoothing_window > 0 && cfg.smoothing_window.is_multiple_of(2) {
            log::warn!(
                "smoothing window {} is even; using {}",
                cfg.smoothing_window,
                cfg.smoothing_window + 1
            );
        }
        Ok(cfg)
    }

    fn evaluator(&self) -> Result<Evaluator, Failure> {
        Ok(Evaluator::new(self.workers)?)
    }
}

/// Runs the full input check and turns any problems into a validation
/// failure listing each of them.
fn preflight(cfg: &RunConfig) -> CmdResult {
    let problems = validate_inputs(cfg);
    if problems.is_empty() {
        return Ok(());
    }
    for p in &problems {
        eprintln!("error: {p}");
    }
    Err(Failure::Validation(anyhow!("{} input problem(s)", problems.len())))
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn classify(args: &RunArgs) -> CmdResult {
    let cfg = args.config()?;
    preflight(&cfg)?;
    let report = args.evaluator()?.run_from_disk(&cfg)?;
    let table = report.to_table();
    print!("{table}");
    if let Some(out) = &cfg.out {
        write_file(out, &report.to_json()).map_err(Failure::Runtime)?;
    }
    if let Some(t) = &cfg.table {
        write_file(t, &table).map_err(Failure::Runtime)?;
    }
    Ok(())
}

fn ablate(args: &RunArgs, grid: Option<&Path>) -> CmdResult {
    let base = args.config()?;
    let rows = match grid {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(Failure::Validation)?;
            let rows: Vec<AblationRow> = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .map_err(Failure::Validation)?;
            if rows.is_empty() {
                return Err(Failure::Validation(anyhow!("{} lists no configurations", p.display())));
            }
            rows
        }
        None => {
            let (rows, skipped) = default_ladder(&base);
            for s in skipped {
                log::warn!("skipping ablation row: {s}");
            }
            rows
        }
    };
    for row in &rows {
        preflight(&row.config).map_err(|f| match f {
            Failure::Validation(e) => Failure::Validation(e.context(format!("ablation row {:?}", row.label))),
            other => other,
        })?;
    }
    let results = ablation_grid(&args.evaluator()?, &rows, None)?;
    let table = ablation_table(&results);
    print!("{table}");
    if let Some(out) = &base.out {
        let doc: Vec<serde_json::Value> = results
            .iter()
            .map(|(label, report)| serde_json::json!({"label": label, "report": report}))
            .collect();
        let json = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Runtime(e.into()))? + "\n";
        write_file(out, &json).map_err(Failure::Runtime)?;
    }
    if let Some(t) = &base.table {
        write_file(t, &table).map_err(Failure::Runtime)?;
    }
    Ok(())
}

fn sweep(args: &RunArgs, windows: &[usize]) -> CmdResult {
    let base = args.config()?;
    preflight(&base)?;
    let rows = sweep_smoothing(&args.evaluator()?, &base, windows, None)?;
    let csv = sweep_csv(&rows);
    match &base.out {
        Some(out) => write_file(out, &csv).map_err(Failure::Runtime)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn export(args: &RunArgs, video: &str, out_dir: &Path) -> CmdResult {
    let cfg = args.config()?;
    preflight(&cfg)?;
    let inputs = Inputs::load(&cfg)?;
    let source = DiskSource::new(&inputs.manifest);
    let exports = export_paths(&cfg, &inputs, &source, video)?;
    for e in &exports {
        let path = out_dir.join(export_file_name(&e.video_id, &e.class_id));
        let json = serde_json::to_string_pretty(e).map_err(|e| Failure::Runtime(e.into()))? + "\n";
        write_file(&path, &json).map_err(Failure::Runtime)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn validate(args: &RunArgs) -> CmdResult {
    let cfg = args.config()?;
    preflight(&cfg)?;
    println!("ok: {} is consistent", cfg.manifest.display());
    Ok(())
}

fn report(paths: &[PathBuf], manifest: Option<&Path>) -> CmdResult {
    let mut reports: Vec<(String, EvaluationReport)> = Vec::new();
    let mut incomplete = Vec::new();
    for p in paths {
        let text = fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))
            .map_err(Failure::Validation)?;
        let r: EvaluationReport = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", p.display()))
            .map_err(Failure::Validation)?;
        let manifest_path = match manifest {
            Some(m) => m.to_path_buf(),
            None => {
                let cfg: RunConfig = serde_json::from_value(r.run_config.clone())
                    .with_context(|| format!("run_config in {}", p.display()))
                    .map_err(Failure::Validation)?;
                cfg.manifest
            }
        };
        let m = load_manifest(&manifest_path)?;
        for id in r.missing_videos(&m) {
            incomplete.push(format!("{}: no prediction for video {id}", p.display()));
        }
        reports.push((p.display().to_string(), r));
    }
    if let [(_, only)] = reports.as_slice() {
        print!("{}", only.to_table());
    } else {
        let rows: Vec<(String, &EvaluationReport)> = reports.iter().map(|(l, r)| (l.clone(), r)).collect();
        print!("{}", comparison_table(&rows));
    }
    if !incomplete.is_empty() {
        for line in &incomplete {
            eprintln!("error: {line}");
        }
        return Err(Failure::Validation(anyhow!("{} video(s) lack a prediction", incomplete.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify(a) => classify(a),
        Command::Ablate { run, grid } => ablate(run, grid.as_deref()),
        Command::SweepSmoothing { run, windows } => sweep(run, windows),
        Command::ExportPaths { run, video, out_dir } => export(run, video, out_dir),
        Command::Validate(a) => validate(a),
        Command::Report { reports, manifest } => report(reports, manifest.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
