//! Decision variables of the joint objective and their initialization.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::matio;

/// Layer widths `[l_0, ..., l_delta]` for one view, from `d_v` down to `k`.
///
/// Layer `i` is `round(i * (d_v - k) / delta)` below `d_v`, rounding halves up.
pub fn build_schedule(d_v: usize, k: usize, delta: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::Validation("embedding dimension k must be at least 1".into()));
    }
    if delta == 0 {
        return Err(Error::Validation("depth must be at least 1".into()));
    }
    if d_v < k {
        return Err(Error::Validation(format!(
            "view dimension {d_v} is smaller than the embedding dimension {k}; \
             projections can only reduce dimension, so such views are rejected"
        )));
    }
    let span = d_v - k;
    Ok((0..=delta)
        .map(|i| d_v - (2 * i * span + delta) / (2 * delta))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSchedule {
    pub per_view: Vec<Vec<usize>>,
}

impl DimensionSchedule {
    pub fn build(dims: &[usize], k: usize, delta: usize) -> Result<Self> {
        let per_view = dims
            .iter()
            .map(|&d| build_schedule(d, k, delta))
            .collect::<Result<_>>()?;
        Ok(Self { per_view })
    }

    pub fn depth(&self) -> usize {
        self.per_view.first().map_or(0, |s| s.len() - 1)
    }
}

/// Per-view chains of projection layers; `layers[v][i]` is `W_{i+1}` of view `v`.
pub type ProjectionStacks = Vec<Vec<DMatrix<f64>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    /// `None` until the first projection update fills the stacks.
    pub projections: Option<ProjectionStacks>,
    /// Unified anchors, `k × m`, orthonormal columns.
    pub anchors: DMatrix<f64>,
    /// Consensus bipartite graph, `m × n`, columns on the probability simplex.
    pub graph: DMatrix<f64>,
    pub alpha: Vec<f64>,
    pub k: usize,
    pub m: usize,
    pub delta: usize,
    pub schedule: DimensionSchedule,
}

/// `rows × cols` matrix with ones on the main diagonal.
pub fn rect_identity(rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |r, c| if r == c { 1.0 } else { 0.0 })
}

pub fn check_dimensions(ds: &MultiViewDataset, k: usize, m: usize, delta: usize) -> Result<()> {
    if k == 0 || m == 0 {
        return Err(Error::Validation("k and m must both be at least 1".into()));
    }
    if m > k {
        return Err(Error::Validation(format!(
            "anchor count m = {m} exceeds embedding dimension k = {k}; \
             the anchor matrix cannot have orthonormal columns"
        )));
    }
    let min_d = ds.dims().into_iter().min().unwrap_or(0);
    if k > min_d {
        return Err(Error::Validation(format!(
            "embedding dimension k = {k} exceeds the smallest view dimension {min_d}"
        )));
    }
    if m > ds.num_samples() {
        return Err(Error::Validation(format!(
            "anchor count m = {m} exceeds the sample count {}",
            ds.num_samples()
        )));
    }
    if delta == 0 {
        return Err(Error::Validation("depth must be at least 1".into()));
    }
    Ok(())
}

/// Starting point of the alternating optimizer: identity block in the graph,
/// rectangular identity anchors, uniform view weights, pending projections.
pub fn initialize(ds: &MultiViewDataset, k: usize, m: usize, delta: usize) -> Result<ModelState> {
    check_dimensions(ds, k, m, delta)?;
    let p = ds.num_views();
    Ok(ModelState {
        projections: None,
        anchors: rect_identity(k, m),
        graph: rect_identity(m, ds.num_samples()),
        alpha: vec![1.0 / p as f64; p],
        k,
        m,
        delta,
        schedule: DimensionSchedule::build(&ds.dims(), k, delta)?,
    })
}

/// Largest absolute entry of `QᵀQ − I`.
pub fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let gram = q.tr_mul(q);
    (gram - DMatrix::<f64>::identity(q.ncols(), q.ncols())).amax()
}

impl ModelState {
    pub fn num_views(&self) -> usize {
        self.alpha.len()
    }

    pub fn stacks(&self) -> Result<&ProjectionStacks> {
        self.projections
            .as_ref()
            .ok_or_else(|| Error::State("projection stacks are pending; run a projection update first".into()))
    }

    /// `W_1 ⋯ W_delta` for view `v`, shaped `d_v × k`.
    pub fn projection_chain(&self, v: usize) -> Result<DMatrix<f64>> {
        let layers = &self.stacks()?[v];
        let mut acc = layers[0].clone();
        for w in &layers[1..] {
            acc *= w;
        }
        Ok(acc)
    }

    /// `W_1 ⋯ W_delta A` for view `v`, shaped `d_v × m`.
    pub fn view_basis(&self, v: usize) -> Result<DMatrix<f64>> {
        Ok(self.projection_chain(v)? * &self.anchors)
    }

    /// Checks every invariant of a fitted state and reports the first violation.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Numeric(m));
        for (v, layers) in self.stacks()?.iter().enumerate() {
            for (i, w) in layers.iter().enumerate() {
                let e = orthonormality_error(w);
                if e > 1e-8 {
                    return fail(format!("view {v} layer {} orthonormality error {e:e}", i + 1));
                }
            }
        }
        let e = orthonormality_error(&self.anchors);
        if e > 1e-8 {
            return fail(format!("anchor orthonormality error {e:e}"));
        }
        if let Some(x) = self.graph.iter().find(|&&x| x < 0.0) {
            return fail(format!("negative graph entry {x}"));
        }
        for (j, col) in self.graph.column_iter().enumerate() {
            let s = col.sum();
            if (s - 1.0).abs() > 1e-9 {
                return fail(format!("graph column {j} sums to {s}"));
            }
        }
        if self.alpha.iter().any(|&a| a < 0.0) || (self.alpha.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return fail(format!("view weights {:?} are off the simplex", self.alpha));
        }
        Ok(())
    }

    /// Writes the state as CSV matrices plus a `model.json` manifest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        matio::write_matrix(&dir.join("anchors.csv"), &self.anchors)?;
        matio::write_matrix(&dir.join("graph.csv"), &self.graph)?;
        if let Some(stacks) = &self.projections {
            for (v, layers) in stacks.iter().enumerate() {
                for (i, w) in layers.iter().enumerate() {
                    matio::write_matrix(&dir.join(format!("proj_v{v}_l{}.csv", i + 1)), w)?;
                }
            }
        }
        let manifest = ModelManifest {
            k: self.k,
            m: self.m,
            delta: self.delta,
            schedule: self.schedule.per_view.clone(),
            alpha: self.alpha.clone(),
            projections_set: self.projections.is_some(),
        };
        let path = dir.join("model.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("model.json");
        if !path.is_file() {
            return Err(Error::NotFound(format!("model manifest {}", path.display())));
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mf: ModelManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            file: path.clone(),
            row: e.line(),
            col: e.column(),
            msg: e.to_string(),
        })?;
        let projections = if mf.projections_set {
            let mut stacks = Vec::with_capacity(mf.schedule.len());
            for (v, widths) in mf.schedule.iter().enumerate() {
                let mut layers = Vec::with_capacity(mf.delta);
                for i in 1..widths.len() {
                    let w = matio::read_matrix(&dir.join(format!("proj_v{v}_l{i}.csv")))?;
                    if w.shape() != (widths[i - 1], widths[i]) {
                        return Err(Error::Structural(format!(
                            "view {v} layer {i} is {:?}, schedule says {:?}",
                            w.shape(),
                            (widths[i - 1], widths[i])
                        )));
                    }
                    layers.push(w);
                }
                stacks.push(layers);
            }
            Some(stacks)
        } else {
            None
        };
        let anchors = matio::read_matrix(&dir.join("anchors.csv"))?;
        let graph = matio::read_matrix(&dir.join("graph.csv"))?;
        if anchors.shape() != (mf.k, mf.m) || graph.nrows() != mf.m {
            return Err(Error::Structural("anchor or graph shape disagrees with model.json".into()));
        }
        Ok(Self {
            projections,
            anchors,
            graph,
            alpha: mf.alpha,
            k: mf.k,
            m: mf.m,
            delta: mf.delta,
            schedule: DimensionSchedule { per_view: mf.schedule },
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelManifest {
    k: usize,
    m: usize,
    delta: usize,
    schedule: Vec<Vec<usize>>,
    alpha: Vec<f64>,
    projections_set: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(p: usize, dims: &[usize], n: usize) -> MultiViewDataset {
        let views = (0..p).map(|v| DMatrix::from_fn(dims[v], n, |r, c| (r * n + c) as f64)).collect();
        MultiViewDataset::from_views(views, None).unwrap()
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(build_schedule(100, 10, 3).unwrap(), vec![100, 70, 40, 10]);
        assert_eq!(build_schedule(10, 10, 2).unwrap(), vec![10, 10, 10]);
        assert_eq!(build_schedule(7, 2, 2).unwrap(), vec![7, 4, 2]);
        assert!(matches!(build_schedule(3, 4, 1), Err(Error::Validation(_))));
    }

    #[test]
    fn schedule_exhaustive_small() {
        for d in 1..=50 {
            for k in 1..=d {
                for delta in 1..=6 {
                    let s = build_schedule(d, k, delta).unwrap();
                    assert_eq!(s.len(), delta + 1);
                    assert_eq!((s[0], s[delta]), (d, k));
                    let diffs: Vec<usize> = s.windows(2).map(|w| w[0] - w[1]).collect();
                    let (lo, hi) = (diffs.iter().min().unwrap(), diffs.iter().max().unwrap());
                    assert!(hi - lo <= 1, "{d} {k} {delta}: {s:?}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn schedule_invariants(k in 1usize..200, extra in 0usize..2000, delta in 1usize..40) {
            let d = k + extra;
            let s = build_schedule(d, k, delta).unwrap();
            prop_assert_eq!(s[0], d);
            prop_assert_eq!(*s.last().unwrap(), k);
            prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
            let diffs: Vec<usize> = s.windows(2).map(|w| w[0] - w[1]).collect();
            prop_assert!(diffs.iter().max().unwrap() - diffs.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn initialize_matches_algorithm_start() {
        let ds = toy(2, &[4, 5], 5);
        let st = initialize(&ds, 3, 3, 1).unwrap();
        let mut expected = DMatrix::zeros(3, 5);
        for i in 0..3 {
            expected[(i, i)] = 1.0;
        }
        assert_eq!(st.graph, expected);
        assert_eq!(st.alpha, vec![0.5, 0.5]);
        assert!(st.projections.is_none());
        assert!(matches!(st.projection_chain(0), Err(Error::State(_))));
    }

    #[test]
    fn initialize_uniform_weights_and_rect_anchors() {
        let ds = toy(4, &[6, 6, 7, 8], 6);
        let st = initialize(&ds, 5, 3, 2).unwrap();
        assert_eq!(st.alpha, vec![0.25; 4]);
        assert_eq!(st.anchors.shape(), (5, 3));
        assert_eq!(orthonormality_error(&st.anchors), 0.0);
        assert_eq!(st.schedule.per_view[3], vec![8, 6, 5]);
        // unused columns start at zero mass
        assert_eq!(st.graph.column(4).sum(), 0.0);
        assert_eq!(st.graph.column(2).sum(), 1.0);
    }

    #[test]
    fn initialize_rejects_bad_sizes() {
        let ds = toy(2, &[4, 5], 6);
        assert!(matches!(initialize(&ds, 3, 4, 1), Err(Error::Validation(_))));
        assert!(matches!(initialize(&ds, 5, 2, 1), Err(Error::Validation(_))));
        assert!(matches!(initialize(&ds, 3, 3, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let ds = toy(2, &[4, 5], 6);
        let mut st = initialize(&ds, 3, 2, 2).unwrap();
        st.projections = Some(
            st.schedule
                .per_view
                .iter()
                .map(|s| s.windows(2).map(|w| rect_identity(w[0], w[1])).collect())
                .collect(),
        );
        let dir = tempfile::tempdir().unwrap();
        st.save(dir.path()).unwrap();
        assert_eq!(ModelState::load(dir.path()).unwrap(), st);
    }
}
