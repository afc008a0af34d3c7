//! Command-line front end.
//!
//! Every subcommand writes one JSON document. Wall-clock fields live under a
//! top-level `runtime` key so two runs can be compared by dropping that key.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::{generate_synthetic, load_multiview, write_multiview, MultiViewDataset, NormMode, SyntheticSpec};
use crate::error::{Error, Result};
use crate::matio::{read_labels, write_labels, write_matrix};
use crate::metrics::{MetricReport, NmiNorm};
use crate::optimizer::{FitConfig, StepRecord};
use crate::pipeline::{self, BenchParams, RunParams};

#[derive(Debug, Parser)]
#[command(name = "anchorview", version, about = "Anchor-graph multi-view clustering")]
pub struct Cli {
    /// Worker thread cap (defaults to all cores).
    #[arg(long, global = true, env = "ANCHORVIEW_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit, embed and cluster one dataset.
    Fit(FitArgs),
    /// Time a fixed number of sweeps over growing sample counts.
    Benchmark(BenchArgs),
    /// Run the pipeline once per depth on the same data.
    SweepDepth(SweepArgs),
    /// Score stored assignments against labels.
    Eval(EvalArgs),
    /// Write a synthetic dataset directory.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory (view_*.csv, optional labels.csv and meta.json).
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// JSON file describing a synthetic dataset.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Number of clusters; defaults to the synthetic spec's cluster count.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Number of anchors (defaults to the cluster count).
    #[arg(long)]
    pub anchors: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value = "zscore")]
    pub norm: NormMode,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Relative objective change that ends the fit.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// k-means restarts.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Use the anchor graph without degree normalization.
    #[arg(long)]
    pub no_degree_norm: bool,
    /// Normalize NMI by the arithmetic mean of the entropies.
    #[arg(long)]
    pub nmi_mean: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Result file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Log the objective after every sub-step to stderr and the result.
    #[arg(long)]
    pub trace: bool,
    /// Directory for the fitted model matrices.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    /// Directory for embedding.csv and assignments.csv.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Base synthetic spec; `n` is replaced by each size.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "5000,10000")]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub anchors: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value = "zscore")]
    pub norm: NormMode,
    #[arg(long, default_value_t = 5)]
    pub sweeps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub depths: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    pub labels: PathBuf,
    /// Predictions: a labels file or a result file from `fit`.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub nmi_mean: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub synthetic: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Spec used by `benchmark` when no file is given.
pub fn default_bench_spec() -> SyntheticSpec {
    SyntheticSpec {
        n: 5000,
        k_true: 10,
        p: 2,
        dims: vec![50, 80],
        separation: 5.0,
        noise_sigma: 0.5,
        seed: 0,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

fn emit(doc: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("json values always serialize") + "\n";
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct DatasetInfo {
    source: String,
    num_views: usize,
    num_samples: usize,
    dims: Vec<usize>,
    labeled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthetic: Option<SyntheticSpec>,
}

fn load_data(args: &DataArgs) -> Result<(MultiViewDataset, DatasetInfo)> {
    let (ds, source, synthetic) = match (&args.data, &args.synthetic) {
        (Some(dir), _) => (load_multiview(dir)?, dir.display().to_string(), None),
        (None, Some(file)) => {
            let spec: SyntheticSpec = read_json(file)?;
            (generate_synthetic(&spec)?, "synthetic".to_string(), Some(spec))
        }
        (None, None) => return Err(Error::Validation("either --data or --synthetic is required".into())),
    };
    let info = DatasetInfo {
        source,
        num_views: ds.num_views(),
        num_samples: ds.num_samples(),
        dims: ds.dims(),
        labeled: ds.labels().is_some(),
        synthetic,
    };
    Ok((ds, info))
}

fn run_params(model: &ModelArgs, info: &DatasetInfo, debug_steps: bool) -> Result<RunParams> {
    let k = match (model.clusters, &info.synthetic) {
        (Some(k), _) => k,
        (None, Some(spec)) => spec.k_true,
        (None, None) => return Err(Error::Validation("--clusters is required with --data".into())),
    };
    let fit = FitConfig {
        max_iter: model.max_iter,
        rel_tol: model.tol,
        record_trace: true,
        debug_steps,
    };
    fit.validate()?;
    if model.restarts == 0 {
        return Err(Error::Validation("--restarts must be at least 1".into()));
    }
    Ok(RunParams {
        m: model.anchors.unwrap_or(k),
        delta: model.depth,
        norm: model.norm,
        fit,
        seed: model.seed,
        restarts: model.restarts,
        degree_norm: !model.no_degree_norm,
        nmi_norm: if model.nmi_mean { NmiNorm::Arithmetic } else { NmiNorm::Geometric },
        ..RunParams::new(k)
    })
}

fn runtime(threads: usize, seconds: Value) -> Value {
    json!({ "threads": threads, "seconds": seconds })
}

fn cmd_fit(args: &FitArgs, threads: usize) -> Result<()> {
    let (ds, info) = load_data(&args.data)?;
    let params = run_params(&args.model, &info, args.trace)?;
    let out = pipeline::run(&ds, &params)?;
    if args.trace {
        for rec in &out.report.step_log {
            eprintln!("{rec}");
        }
    }
    if let Some(dir) = &args.save_model {
        out.state.save(dir)?;
    }
    if let Some(dir) = &args.export {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_matrix(&dir.join("embedding.csv"), &out.embedding.coords)?;
        write_labels(&dir.join("assignments.csv"), &out.clusters.assignments)?;
    }

    let step_log: &[StepRecord] = &out.report.step_log;
    let doc = json!({
        "params": params,
        "dataset": info,
        "fit": {
            "initial_objective": out.report.initial_objective,
            "objective_trace": out.report.objective_trace,
            "iterations": out.report.iterations,
            "converged": out.report.converged,
            "alpha": out.state.alpha,
            "schedule": out.state.schedule.per_view,
            "step_log": step_log,
        },
        "embedding": {
            "dim": out.embedding.coords.ncols(),
            "singular_values": out.embedding.singular_values,
        },
        "clustering": {
            "inertia": out.clusters.inertia,
        },
        "assignments": out.clusters.assignments,
        "metrics": out.metrics,
        "runtime": runtime(threads, json!({
            "stages": out.seconds,
            "fit_steps": {
                "projections": out.report.per_step_seconds[0],
                "anchors": out.report.per_step_seconds[1],
                "graph": out.report.per_step_seconds[2],
                "weights": out.report.per_step_seconds[3],
            },
        })),
    });
    emit(&doc, args.out.as_deref())?;
    if let Some(m) = &out.metrics {
        log::info!("acc={:.4} nmi={:.4} purity={:.4}", m.acc, m.nmi, m.purity);
    }
    Ok(())
}

fn cmd_benchmark(args: &BenchArgs, threads: usize) -> Result<()> {
    let base = match &args.synthetic {
        Some(file) => read_json(file)?,
        None => default_bench_spec(),
    };
    let k = args.clusters.unwrap_or(base.k_true);
    let params = BenchParams {
        k,
        m: args.anchors.unwrap_or(k),
        delta: args.depth,
        sweeps: args.sweeps,
        norm: args.norm,
    };
    let rows = pipeline::benchmark(&base, &args.sizes, &params)?;
    for r in &rows {
        match (&r.error, r.median_sweep_seconds) {
            (Some(e), _) => eprintln!("n={} error: {e}", r.n),
            (None, Some(t)) => eprintln!(
                "n={} median_sweep_seconds={t:.4} peak_bytes={}",
                r.n,
                r.peak_bytes.map_or("n/a".to_string(), |b| b.to_string())
            ),
            (None, None) => {}
        }
    }
    // objective traces are deterministic, timings and memory are not
    let traces: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "n": r.n, "initial_objective": r.initial_objective, "objective_trace": r.objective_trace, "error": r.error }))
        .collect();
    let measured: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "n": r.n, "sweep_seconds": r.sweep_seconds, "median_sweep_seconds": r.median_sweep_seconds, "peak_bytes": r.peak_bytes }))
        .collect();
    let doc = json!({
        "params": params,
        "base": base,
        "sizes": args.sizes,
        "rows": traces,
        "runtime": runtime(threads, Value::Array(measured)),
    });
    emit(&doc, args.out.as_deref())
}

fn cmd_sweep_depth(args: &SweepArgs, threads: usize) -> Result<()> {
    if args.depths.is_empty() {
        return Err(Error::Validation("--depths must list at least one depth".into()));
    }
    let (ds, info) = load_data(&args.data)?;
    let params = run_params(&args.model, &info, false)?;
    let rows = pipeline::sweep_depth(&ds, &params, &args.depths);
    println!("depth\tacc\tnmi\tpurity\titerations\terror");
    for r in &rows {
        let fmt = |f: fn(&MetricReport) -> f64| r.metrics.as_ref().map_or("-".to_string(), |m| format!("{:.4}", f(m)));
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.depth,
            fmt(|m| m.acc),
            fmt(|m| m.nmi),
            fmt(|m| m.purity),
            r.iterations.map_or("-".to_string(), |i| i.to_string()),
            r.error.as_deref().unwrap_or("-"),
        );
    }
    if let Some(path) = &args.out {
        let doc = json!({ "params": params, "dataset": info, "rows": rows, "runtime": runtime(threads, Value::Null) });
        emit(&doc, Some(path))?;
    }
    Ok(())
}

/// Reads predictions from either a plain labels file or a `fit` result.
fn read_predictions(path: &Path) -> Result<Vec<usize>> {
    let is_json = path.extension().is_some_and(|e| e == "json");
    if !is_json {
        return read_labels(path);
    }
    let doc: Value = read_json(path)?;
    let assignments = doc
        .get("assignments")
        .cloned()
        .ok_or_else(|| Error::Validation(format!("{}: no assignments field", path.display())))?;
    serde_json::from_value(assignments).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let truth = read_labels(&args.labels)?;
    let pred = read_predictions(&args.pred)?;
    let norm = if args.nmi_mean { NmiNorm::Arithmetic } else { NmiNorm::Geometric };
    let report = MetricReport::compute(&pred, &truth, norm)?;
    emit(&json!({ "metrics": report }), args.out.as_deref())
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let spec: SyntheticSpec = read_json(&args.synthetic)?;
    let ds = generate_synthetic(&spec)?;
    write_multiview(&ds, &args.out)?;
    eprintln!("wrote {} views x {} samples to {}", ds.num_views(), ds.num_samples(), args.out.display());
    Ok(())
}

fn dispatch(cli: &Cli, threads: usize) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, threads),
        Command::Benchmark(a) => cmd_benchmark(a, threads),
        Command::SweepDepth(a) => cmd_sweep_depth(a, threads),
        Command::Eval(a) => cmd_eval(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

/// Runs a parsed command inside a thread pool sized by `--threads`.
pub fn execute(cli: &Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::State(format!("cannot start worker pool: {e}")))?;
    let threads = pool.current_num_threads();
    pool.install(|| dispatch(cli, threads))
}
