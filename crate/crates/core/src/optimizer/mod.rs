//! Alternating minimization of the weighted multi-view reconstruction loss
//!
//! ```text
//! sum_v alpha_v^2 * || X_v - W_1^v ... W_delta^v A Z ||_F^2
//! ```
//!
//! over orthonormal-column projection layers `W`, orthonormal-column anchors
//! `A`, a column-stochastic graph `Z` and simplex weights `alpha`. Each
//! sub-step solves its block exactly, so the loss never increases between
//! sub-steps.

mod procrustes;
mod simplex;

use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::model::{self, rect_identity, ModelState};

pub use procrustes::{procrustes, procrustes_factored};
pub use simplex::project_to_simplex;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Stop once the objective moves by less than this fraction of its previous value.
    pub rel_tol: f64,
    pub record_trace: bool,
    /// Evaluate the objective after every sub-step and keep a step log.
    pub debug_steps: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            rel_tol: 1e-3,
            record_trace: true,
            debug_steps: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Validation("max_iter must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Validation(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Projections,
    Anchors,
    Graph,
    Weights,
}

impl Step {
    pub const ALL: [Step; 4] = [Step::Projections, Step::Anchors, Step::Graph, Step::Weights];

    pub fn name(self) -> &'static str {
        match self {
            Step::Projections => "projections",
            Step::Anchors => "anchors",
            Step::Graph => "graph",
            Step::Weights => "weights",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iter: usize,
    pub step: Step,
    pub objective: f64,
}

impl fmt::Display for StepRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "iter={} step={} objective={:e}", self.iter, self.step.name(), self.objective)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FitReport {
    /// Objective after each completed sweep.
    pub objective_trace: Vec<f64>,
    /// Objective of the starting point (pending layers filled with identities).
    pub initial_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Accumulated seconds for the projection, anchor, graph and weight updates.
    pub per_step_seconds: [f64; 4],
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub step_log: Vec<StepRecord>,
}

impl FitReport {
    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }
}

/// A fit that stopped on an error, with everything recorded up to that point.
#[derive(Debug)]
pub struct FitFailure {
    pub error: Error,
    pub report: Box<FitReport>,
}

impl From<FitFailure> for Error {
    fn from(f: FitFailure) -> Self {
        f.error
    }
}

// Neumaier-compensated sum of squares over a matrix.
fn sum_squares(m: &DMatrix<f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &a in m.iter() {
        let x = a * a;
        let t = sum + x;
        if sum >= x {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Squared reconstruction loss `||X_v − W_1⋯W_delta A Z||_F^2` of every view.
pub fn view_losses(state: &ModelState, ds: &MultiViewDataset) -> Result<Vec<f64>> {
    state.stacks()?;
    (0..ds.num_views())
        .into_par_iter()
        .map(|v| {
            let recon = state.view_basis(v)? * &state.graph;
            Ok(sum_squares(&(ds.view(v) - recon)))
        })
        .collect()
}

pub fn objective(state: &ModelState, ds: &MultiViewDataset) -> Result<f64> {
    let losses = view_losses(state, ds)?;
    Ok(losses.iter().zip(&state.alpha).map(|(f, a)| a * a * f).sum())
}

impl ModelState {
    /// Fills pending projection stacks with rectangular identities.
    pub fn fill_pending_projections(&mut self) {
        if self.projections.is_none() {
            self.projections = Some(
                self.schedule
                    .per_view
                    .iter()
                    .map(|widths| widths.windows(2).map(|w| rect_identity(w[0], w[1])).collect())
                    .collect(),
            );
        }
    }
}

fn update_view_layers(
    layers: &mut [DMatrix<f64>],
    x: &DMatrix<f64>,
    graph: &DMatrix<f64>,
    anchors: &DMatrix<f64>,
    view: usize,
) {
    let delta = layers.len();
    // X Zᵀ is shared by every layer of this view.
    let xz = x * graph.transpose();

    // generalized anchors W_{o+1} ⋯ W_delta A; the trailing layers are not
    // touched before layer o is updated, so these stay valid for the sweep
    let mut generalized = vec![anchors.clone(); delta];
    for o in (0..delta - 1).rev() {
        generalized[o] = &layers[o + 1] * &generalized[o + 1];
    }

    // Ωᵀ X Zᵀ, advanced by one freshly updated layer at a time
    let mut left = xz;
    for o in 0..delta {
        match procrustes_factored(&left, &generalized[o], &layers[o]) {
            Some(w) => layers[o] = w,
            None => log::warn!("view {view} layer {}: degenerate Procrustes input, keeping layer", o + 1),
        }
        left = layers[o].tr_mul(&left);
    }
}

/// Updates every projection layer of every view in sequence (`o = 1..delta`).
pub fn update_projections(state: &mut ModelState, ds: &MultiViewDataset) -> Result<()> {
    state.fill_pending_projections();
    let graph = &state.graph;
    let anchors = &state.anchors;
    let stacks = state.projections.as_mut().expect("filled above");
    stacks
        .par_iter_mut()
        .enumerate()
        .for_each(|(v, layers)| update_view_layers(layers, ds.view(v), graph, anchors, v));
    Ok(())
}

/// Procrustes update of the shared anchors from
/// `Φ = Σ_v alpha_v² (W_1⋯W_delta)ᵀ X_v Zᵀ`.
pub fn update_anchors(state: &mut ModelState, ds: &MultiViewDataset) -> Result<()> {
    state.stacks()?;
    let st = &*state;
    let parts: Vec<DMatrix<f64>> = (0..ds.num_views())
        .into_par_iter()
        .map(|v| {
            let chain = st.projection_chain(v)?;
            Ok(chain.tr_mul(&(ds.view(v) * st.graph.transpose())) * st.alpha[v].powi(2))
        })
        .collect::<Result<_>>()?;
    // fixed summation order regardless of worker count
    let mut phi = DMatrix::zeros(state.k, state.m);
    for part in &parts {
        phi += part;
    }
    match procrustes(&phi) {
        Some(a) => state.anchors = a,
        None => log::warn!("anchor update: degenerate input, keeping anchors"),
    }
    Ok(())
}

/// Per-column simplex projection of the alpha²-weighted mean of `P_vᵀ X_v`,
/// with `P_v = W_1⋯W_delta A` of view `v`.
pub fn update_graph(state: &mut ModelState, ds: &MultiViewDataset) -> Result<()> {
    state.stacks()?;
    let weight_total: f64 = state.alpha.iter().map(|a| a * a).sum();
    if weight_total <= 0.0 || !weight_total.is_finite() {
        return Err(Error::State(format!("view weights {:?} give a zero quadratic term", state.alpha)));
    }
    let st = &*state;
    let parts: Vec<DMatrix<f64>> = (0..ds.num_views())
        .into_par_iter()
        .map(|v| Ok(st.view_basis(v)?.tr_mul(ds.view(v)) * (st.alpha[v].powi(2) / weight_total)))
        .collect::<Result<_>>()?;
    let mut target = DMatrix::zeros(state.m, ds.num_samples());
    for part in &parts {
        target += part;
    }
    if let Some(bad) = target.iter().find(|a| !a.is_finite()) {
        return Err(Error::Numeric(format!("non-finite graph target entry {bad}")));
    }
    let m = state.m;
    target
        .as_mut_slice()
        .par_chunks_mut(m)
        .for_each_init(|| Vec::with_capacity(m), |scratch, col| simplex::project_in_place(col, scratch));
    state.graph = target;
    Ok(())
}

/// Exact minimizer of `Σ alpha_v² f_v` over the simplex: `alpha_v ∝ 1 / f_v`.
///
/// Views with zero loss share all the weight; if every loss is zero the
/// weights are uniform.
pub fn weights_from_losses(losses: &[f64]) -> Vec<f64> {
    let p = losses.len();
    let inv: Vec<f64> = losses.iter().map(|&f| 1.0 / f).collect();
    let perfect: Vec<bool> = inv.iter().map(|i| !i.is_finite()).collect();
    let n_perfect = perfect.iter().filter(|&&b| b).count();
    if n_perfect > 0 {
        return perfect
            .iter()
            .map(|&b| if b { 1.0 / n_perfect as f64 } else { 0.0 })
            .collect();
    }
    let total: f64 = inv.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return vec![1.0 / p as f64; p];
    }
    inv.iter().map(|i| i / total).collect()
}

pub fn update_weights(state: &mut ModelState, ds: &MultiViewDataset) -> Result<()> {
    let losses = view_losses(state, ds)?;
    state.alpha = weights_from_losses(&losses);
    Ok(())
}

pub fn apply_step(step: Step, state: &mut ModelState, ds: &MultiViewDataset) -> Result<()> {
    match step {
        Step::Projections => update_projections(state, ds),
        Step::Anchors => update_anchors(state, ds),
        Step::Graph => update_graph(state, ds),
        Step::Weights => update_weights(state, ds),
    }
}

/// Runs one full sweep of the four updates, accumulating step timings.
pub fn sweep(
    state: &mut ModelState,
    ds: &MultiViewDataset,
    iter: usize,
    report: &mut FitReport,
    debug_steps: bool,
) -> Result<()> {
    for (i, step) in Step::ALL.into_iter().enumerate() {
        let t0 = Instant::now();
        apply_step(step, state, ds)?;
        report.per_step_seconds[i] += t0.elapsed().as_secs_f64();
        if debug_steps {
            let objective = objective(state, ds)?;
            let rec = StepRecord { iter, step, objective };
            log::debug!("{rec}");
            report.step_log.push(rec);
        }
    }
    Ok(())
}

/// Changes below this fraction of the initial objective count as converged.
pub const ABS_FLOOR: f64 = 1e-13;

/// Initializes and iterates the four updates until the relative change of the
/// objective drops below `cfg.rel_tol` or `cfg.max_iter` sweeps have run.
pub fn fit(
    ds: &MultiViewDataset,
    k: usize,
    m: usize,
    delta: usize,
    cfg: &FitConfig,
) -> std::result::Result<(ModelState, FitReport), FitFailure> {
    let mut report = FitReport::default();
    let fail = |error: Error, report: FitReport| FitFailure { error, report: Box::new(report) };

    if let Err(e) = cfg.validate() {
        return Err(fail(e, report));
    }
    let mut state = match model::initialize(ds, k, m, delta) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, report)),
    };
    state.fill_pending_projections();
    match objective(&state, ds) {
        Ok(o) => report.initial_objective = o,
        Err(e) => return Err(fail(e, report)),
    }

    let mut trace = Vec::new();
    for iter in 1..=cfg.max_iter {
        if let Err(e) = sweep(&mut state, ds, iter, &mut report, cfg.debug_steps) {
            report.objective_trace = trace;
            return Err(fail(e, report));
        }
        let obj = match objective(&state, ds) {
            Ok(o) => o,
            Err(e) => {
                report.objective_trace = trace;
                return Err(fail(e, report));
            }
        };
        report.iterations = iter;
        let prev = trace.last().copied();
        trace.push(obj);
        if let Some(prev) = prev {
            let change = (obj - prev).abs();
            // the floor stops runs whose objective has collapsed to round-off
            let floor = ABS_FLOOR * report.initial_objective.abs();
            if change < cfg.rel_tol * prev.abs() || change <= floor {
                report.converged = true;
                break;
            }
        }
    }
    if cfg.record_trace {
        report.objective_trace = trace;
    } else {
        report.objective_trace = trace.last().copied().into_iter().collect();
    }
    Ok((state, report))
}

/// Per-sweep timings from a run with a fixed sweep count.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepTiming {
    pub sweep_seconds: Vec<f64>,
    pub initial_objective: f64,
    pub objective_trace: Vec<f64>,
}

/// Runs exactly `sweeps` sweeps without a convergence exit. Only the sweeps
/// themselves are timed; objective evaluation happens outside the clock.
pub fn timed_sweeps(
    ds: &MultiViewDataset,
    k: usize,
    m: usize,
    delta: usize,
    sweeps: usize,
) -> Result<(ModelState, SweepTiming)> {
    let mut state = model::initialize(ds, k, m, delta)?;
    state.fill_pending_projections();
    let mut timing = SweepTiming {
        initial_objective: objective(&state, ds)?,
        ..SweepTiming::default()
    };
    let mut report = FitReport::default();
    for iter in 1..=sweeps {
        let t = Instant::now();
        sweep(&mut state, ds, iter, &mut report, false)?;
        timing.sweep_seconds.push(t.elapsed().as_secs_f64());
        timing.objective_trace.push(objective(&state, ds)?);
    }
    Ok((state, timing))
}
