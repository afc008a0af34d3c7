//! Lloyd's k-means with greedy k-means++ seeding.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no center moves farther than this.
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    /// `k × dim`, one center per row.
    pub centers: DMatrix<f64>,
    pub inertia: f64,
    /// Inertia after each assignment pass of the winning restart.
    pub inertia_history: Vec<f64>,
}

// Row-major copy of the points so distance loops stay contiguous.
struct Points {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl Points {
    fn from_rows(m: &DMatrix<f64>) -> Self {
        let (n, dim) = m.shape();
        let mut data = Vec::with_capacity(n * dim);
        for r in 0..n {
            data.extend(m.row(r).iter());
        }
        Self { data, n, dim }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn sample_weighted(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    // rounding left us past the end; take the last point with mass
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn greedy_plus_plus(pts: &Points, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dim = pts.dim;
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..pts.n);
    centers.extend_from_slice(pts.row(first));
    let mut closest: Vec<f64> = (0..pts.n).map(|i| sq_dist(pts.row(i), pts.row(first))).collect();

    for _ in 1..k {
        let total: f64 = closest.iter().sum();
        if total <= 0.0 {
            // every point coincides with a chosen center; duplicates are fine
            centers.extend_from_slice(pts.row(first));
            continue;
        }
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = sample_weighted(&closest, total, rng);
            let updated: Vec<f64> = closest
                .iter()
                .enumerate()
                .map(|(i, &d)| d.min(sq_dist(pts.row(i), pts.row(cand))))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, cand, updated));
            }
        }
        let (_, cand, updated) = best.expect("at least two trials");
        centers.extend_from_slice(pts.row(cand));
        closest = updated;
    }
    centers
}

fn assign(pts: &Points, centers: &[f64], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let (c, d) = nearest(pts.row(i), centers, pts.dim);
        *label = c;
        inertia += d;
    }
    inertia
}

fn lloyd(pts: &Points, cfg: &KMeansConfig, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let (k, dim) = (cfg.k, pts.dim);
    let mut centers = greedy_plus_plus(pts, k, rng);
    let mut labels = vec![0; pts.n];
    let mut history = Vec::new();
    for _ in 0..cfg.max_iter {
        history.push(assign(pts, &centers, &mut labels));
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(pts.row(i)) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            // empty clusters keep their previous center
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let new: Vec<f64> = sums[c * dim..(c + 1) * dim].iter().map(|s| s * inv).collect();
            shift = shift.max(sq_dist(&new, &centers[c * dim..(c + 1) * dim]).sqrt());
            centers[c * dim..(c + 1) * dim].copy_from_slice(&new);
        }
        if shift <= cfg.tol {
            break;
        }
    }
    history.push(assign(pts, &centers, &mut labels));
    (labels, centers, history)
}

/// Clusters the rows of `points`, keeping the restart with the lowest inertia
/// (ties go to the lower restart index). Deterministic for a given seed.
pub fn kmeans(points: &DMatrix<f64>, cfg: &KMeansConfig, seed: u64) -> Result<ClusterResult> {
    let n = points.nrows();
    if cfg.k == 0 || n < cfg.k {
        return Err(Error::Validation(format!("k-means needs 1 <= k <= n, got k = {} and n = {n}", cfg.k)));
    }
    if cfg.restarts == 0 || cfg.max_iter == 0 {
        return Err(Error::Validation("k-means restarts and max_iter must be positive".into()));
    }
    if points.iter().any(|a| !a.is_finite()) {
        return Err(Error::Numeric("k-means input has non-finite coordinates".into()));
    }
    let pts = Points::from_rows(points);
    let runs: Vec<_> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(&pts, cfg, &mut rng)
        })
        .collect();
    let (labels, centers, history) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            let ea = a.2.last().unwrap();
            let eb = b.2.last().unwrap();
            ea.total_cmp(eb).then(ia.cmp(ib))
        })
        .map(|(_, run)| run)
        .expect("at least one restart");
    Ok(ClusterResult {
        assignments: labels,
        centers: DMatrix::from_row_slice(cfg.k, pts.dim, &centers),
        inertia: *history.last().unwrap(),
        inertia_history: history,
    })
}
