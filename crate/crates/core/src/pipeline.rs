//! End-to-end runs: normalize, fit, embed, cluster, score.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alloc_track;
use crate::dataset::{generate_synthetic, normalize_views, MultiViewDataset, NormMode, SyntheticSpec};
use crate::embedding::{kmeans, spectral_embedding, ClusterResult, KMeansConfig, SpectralEmbedding};
use crate::error::{Error, Result};
use crate::metrics::{MetricReport, NmiNorm};
use crate::model::ModelState;
use crate::optimizer::{fit, timed_sweeps, FitConfig, FitReport};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunParams {
    pub k: usize,
    /// Anchor count; defaults to `k`.
    pub m: usize,
    pub delta: usize,
    pub norm: NormMode,
    pub fit: FitConfig,
    pub seed: u64,
    pub restarts: usize,
    pub degree_norm: bool,
    pub nmi_norm: NmiNorm,
}

impl RunParams {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            m: k,
            delta: 2,
            norm: NormMode::Zscore,
            fit: FitConfig::default(),
            seed: 0,
            restarts: 10,
            degree_norm: true,
            nmi_norm: NmiNorm::Geometric,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageSeconds {
    pub normalize: f64,
    pub fit: f64,
    pub embed: f64,
    pub cluster: f64,
    pub evaluate: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: ModelState,
    pub report: FitReport,
    pub embedding: SpectralEmbedding,
    pub clusters: ClusterResult,
    pub metrics: Option<MetricReport>,
    pub seconds: StageSeconds,
}

pub fn run(ds: &MultiViewDataset, params: &RunParams) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut seconds = StageSeconds::default();

    let t = Instant::now();
    let data = normalize_views(ds, params.norm);
    seconds.normalize = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (state, report) = fit(&data, params.k, params.m, params.delta, &params.fit)?;
    seconds.fit = t.elapsed().as_secs_f64();

    let t = Instant::now();
    // the embedding cannot be wider than the anchor count
    let dim = params.k.min(params.m);
    let embedding = spectral_embedding(&state.graph, dim, params.degree_norm)?;
    seconds.embed = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let km = KMeansConfig {
        restarts: params.restarts,
        ..KMeansConfig::new(params.k)
    };
    let clusters = kmeans(&embedding.coords, &km, params.seed)?;
    seconds.cluster = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let metrics = ds
        .labels()
        .map(|truth| MetricReport::compute(&clusters.assignments, truth, params.nmi_norm))
        .transpose()?;
    seconds.evaluate = t.elapsed().as_secs_f64();
    seconds.total = start.elapsed().as_secs_f64();

    Ok(RunOutcome {
        state,
        report,
        embedding,
        clusters,
        metrics,
        seconds,
    })
}

/// One row of a depth sensitivity sweep. Exactly one of `metrics`/`error`
/// is meaningful; `metrics` is also absent for unlabeled data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthRow {
    pub depth: usize,
    pub metrics: Option<MetricReport>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub final_objective: Option<f64>,
    pub error: Option<String>,
}

/// Runs the full pipeline once per depth on the same data. Failures are
/// recorded in their row and do not stop the sweep.
pub fn sweep_depth(ds: &MultiViewDataset, params: &RunParams, depths: &[usize]) -> Vec<DepthRow> {
    depths
        .iter()
        .map(|&depth| {
            let p = RunParams { delta: depth, ..params.clone() };
            match run(ds, &p) {
                Ok(out) => DepthRow {
                    depth,
                    metrics: out.metrics,
                    iterations: Some(out.report.iterations),
                    converged: Some(out.report.converged),
                    final_objective: out.report.objective_trace.last().copied(),
                    error: None,
                },
                Err(e) => {
                    log::warn!("depth {depth}: {e}");
                    DepthRow {
                        depth,
                        metrics: None,
                        iterations: None,
                        converged: None,
                        final_objective: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchParams {
    pub k: usize,
    pub m: usize,
    pub delta: usize,
    pub sweeps: usize,
    pub norm: NormMode,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub sweep_seconds: Vec<f64>,
    pub median_sweep_seconds: Option<f64>,
    /// Heap growth over the live size at the start of this row, covering data
    /// generation and the fit. Absent unless the tracking allocator is installed.
    pub peak_bytes: Option<usize>,
    pub initial_objective: Option<f64>,
    pub objective_trace: Vec<f64>,
    pub error: Option<String>,
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

fn bench_one(base: &SyntheticSpec, n: usize, params: &BenchParams) -> Result<BenchRow> {
    let spec = SyntheticSpec { n, ..base.clone() };
    let ds = normalize_views(&generate_synthetic(&spec)?, params.norm);
    let (_state, timing) = timed_sweeps(&ds, params.k, params.m, params.delta, params.sweeps)?;
    Ok(BenchRow {
        n,
        median_sweep_seconds: median(&timing.sweep_seconds),
        sweep_seconds: timing.sweep_seconds,
        peak_bytes: None,
        initial_objective: Some(timing.initial_objective),
        objective_trace: timing.objective_trace,
        error: None,
    })
}

/// Times a fixed number of sweeps for each sample count in `sizes`, one
/// freshly generated dataset per size. A failing size (including a panic)
/// is reported in its row and the remaining sizes still run.
pub fn benchmark(base: &SyntheticSpec, sizes: &[usize], params: &BenchParams) -> Result<Vec<BenchRow>> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Validation("benchmark sizes must be ascending".into()));
    }
    if params.sweeps == 0 {
        return Err(Error::Validation("benchmark needs at least one sweep".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let baseline = alloc_track::current_bytes();
        alloc_track::reset_peak();
        let outcome = catch_unwind(AssertUnwindSafe(|| bench_one(base, n, params)));
        let peak = alloc_track::is_active().then(|| alloc_track::peak_bytes().saturating_sub(baseline));
        let mut row = match outcome {
            Ok(Ok(row)) => row,
            Ok(Err(e)) => BenchRow { n, error: Some(e.to_string()), ..BenchRow::default() },
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                BenchRow { n, error: Some(format!("aborted: {msg}")), ..BenchRow::default() }
            }
        };
        if let Some(e) = &row.error {
            log::warn!("benchmark n={n}: {e}");
        }
        row.peak_bytes = peak;
        rows.push(row);
    }
    Ok(rows)
}
