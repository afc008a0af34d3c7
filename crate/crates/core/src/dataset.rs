//! Multi-view datasets: loading, writing, normalization and synthetic generation.
//!
//! Every view is stored feature-major, `d_v × n`: one feature per row and one
//! sample per column. All views share the same columns in the same order.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matio;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<DMatrix<f64>>,
    labels: Option<Vec<usize>>,
    view_names: Vec<String>,
}

impl MultiViewDataset {
    /// Builds a dataset after checking that all views share the sample count,
    /// that there are at least two samples, and that every entry is finite.
    pub fn new(
        views: Vec<DMatrix<f64>>,
        labels: Option<Vec<usize>>,
        view_names: Vec<String>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Validation("a dataset needs at least one view".into()));
        }
        if view_names.len() != views.len() {
            return Err(Error::Validation(format!(
                "{} view names for {} views",
                view_names.len(),
                views.len()
            )));
        }
        let n = views[0].ncols();
        for (v, x) in views.iter().enumerate() {
            if x.ncols() != n {
                return Err(Error::Structural(format!(
                    "view '{}' has {} samples but view '{}' has {}",
                    view_names[0],
                    n,
                    view_names[v],
                    x.ncols()
                )));
            }
            if x.nrows() == 0 {
                return Err(Error::Validation(format!("view '{}' has no features", view_names[v])));
            }
            if let Some(i) = x.iter().position(|a| !a.is_finite()) {
                return Err(Error::Validation(format!(
                    "view '{}' has a non-finite entry at row {}, column {}",
                    view_names[v],
                    i % x.nrows(),
                    i / x.nrows()
                )));
            }
        }
        if n < 2 {
            return Err(Error::Validation(format!("need at least 2 samples, got {n}")));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Structural(format!(
                    "labels have length {} but views have {} samples",
                    l.len(),
                    n
                )));
            }
        }
        Ok(Self {
            views,
            labels,
            view_names,
        })
    }

    /// Convenience constructor naming views `view_0`, `view_1`, ...
    pub fn from_views(views: Vec<DMatrix<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        let names = (0..views.len()).map(|v| format!("view_{v}")).collect();
        Self::new(views, labels, names)
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &DMatrix<f64> {
        &self.views[v]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn view_names(&self) -> &[String] {
        &self.view_names
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.views[0].ncols()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(|x| x.nrows()).collect()
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }
}

/// Optional `meta.json` manifest overriding the default file names.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub views: Vec<String>,
    #[serde(default)]
    pub labels: Option<String>,
    #[serde(default)]
    pub names: Vec<String>,
}

pub const MANIFEST_FILE: &str = "meta.json";
pub const LABELS_FILE: &str = "labels.csv";

fn is_view_file(name: &str) -> bool {
    name.starts_with("view_") && name.ends_with(".csv")
}

fn view_index(name: &str) -> Option<u64> {
    name.strip_prefix("view_")?.strip_suffix(".csv")?.parse().ok()
}

/// Loads a dataset directory.
///
/// Without a manifest, every `view_*.csv` is a view (ordered by index, then
/// by name) and `labels.csv`, if present, holds ground truth.
pub fn load_multiview(root: &Path) -> Result<MultiViewDataset> {
    if !root.is_dir() {
        return Err(Error::NotFound(format!("{} is not a directory", root.display())));
    }
    let manifest_path = root.join(MANIFEST_FILE);
    let manifest: Manifest = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            file: manifest_path.clone(),
            row: e.line(),
            col: e.column(),
            msg: e.to_string(),
        })?
    } else {
        Manifest::default()
    };

    let view_files: Vec<String> = if manifest.views.is_empty() {
        let mut names = Vec::new();
        for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
            let entry = entry.map_err(|e| Error::io(root, e))?;
            if let Some(name) = entry.file_name().to_str() {
                if is_view_file(name) {
                    names.push(name.to_string());
                }
            }
        }
        // numeric index order, so view_10 follows view_9
        names.sort_by_key(|n| (view_index(n).is_none(), view_index(n), n.clone()));
        names
    } else {
        manifest.views.clone()
    };
    if view_files.is_empty() {
        return Err(Error::NotFound(format!("no view files in {}", root.display())));
    }

    let mut views = Vec::with_capacity(view_files.len());
    for f in &view_files {
        let p = root.join(f);
        if !p.is_file() {
            return Err(Error::NotFound(format!("view file {}", p.display())));
        }
        views.push(matio::read_matrix(&p)?);
    }

    let labels_path = match &manifest.labels {
        Some(l) => {
            let p = root.join(l);
            if !p.is_file() {
                return Err(Error::NotFound(format!("labels file {}", p.display())));
            }
            Some(p)
        }
        None => Some(root.join(LABELS_FILE)).filter(|p| p.is_file()),
    };
    let labels = labels_path.map(|p| matio::read_labels(&p)).transpose()?;

    let names = if manifest.names.is_empty() {
        view_files
            .iter()
            .map(|f| f.strip_suffix(".csv").unwrap_or(f).to_string())
            .collect()
    } else {
        manifest.names.clone()
    };
    MultiViewDataset::new(views, labels, names)
}

/// Writes `view_<idx>.csv` per view plus `labels.csv` when labels exist.
pub fn write_multiview(ds: &MultiViewDataset, root: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut written = Vec::new();
    for (v, x) in ds.views().iter().enumerate() {
        let p = root.join(format!("view_{v}.csv"));
        matio::write_matrix(&p, x)?;
        written.push(p);
    }
    if let Some(l) = ds.labels() {
        let p = root.join(LABELS_FILE);
        matio::write_labels(&p, l)?;
        written.push(p);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    None,
    Zscore,
    UnitColumn,
}

impl FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NormMode::None),
            "zscore" => Ok(NormMode::Zscore),
            "unit-column" | "unit_column" => Ok(NormMode::UnitColumn),
            other => Err(Error::Validation(format!(
                "unknown normalization '{other}' (expected none, zscore or unit-column)"
            ))),
        }
    }
}

pub fn normalize_views(ds: &MultiViewDataset, mode: NormMode) -> MultiViewDataset {
    let views = ds
        .views()
        .iter()
        .map(|x| match mode {
            NormMode::None => x.clone(),
            NormMode::Zscore => zscore_rows(x),
            NormMode::UnitColumn => unit_columns(x),
        })
        .collect();
    MultiViewDataset {
        views,
        labels: ds.labels.clone(),
        view_names: ds.view_names.clone(),
    }
}

// Population standard deviation; constant rows end up all zero.
fn zscore_rows(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols() as f64;
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let mean = row.iter().sum::<f64>() / n;
        row.iter_mut().for_each(|a| *a -= mean);
        let std = (row.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
        if std > 0.0 {
            row.iter_mut().for_each(|a| *a /= std);
        }
    }
    out
}

fn unit_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}

/// Parameters for a seeded synthetic multi-view dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub k_true: usize,
    pub p: usize,
    pub dims: Vec<usize>,
    pub separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.k_true == 0 {
            return bad("k_true must be at least 1".into());
        }
        if self.n < 2 || self.n < self.k_true {
            return bad(format!("n = {} must be at least max(2, k_true = {})", self.n, self.k_true));
        }
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        if self.dims.len() != self.p {
            return bad(format!("dims has {} entries for p = {}", self.dims.len(), self.p));
        }
        if let Some(d) = self.dims.iter().find(|&&d| d < self.k_true) {
            return bad(format!("view dimension {d} is below k_true = {}", self.k_true));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return bad(format!("separation must be finite and non-negative, got {}", self.separation));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be finite and non-negative, got {}", self.noise_sigma));
        }
        Ok(())
    }
}

/// Draws a `rows × cols` matrix with orthonormal columns (QR of a Gaussian
/// matrix, signs fixed so the triangular factor has a positive diagonal).
pub(crate) fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..cols {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Generates a dataset of `k_true` balanced clusters.
///
/// Latent centers sit at `separation / sqrt(2)` along distinct coordinate
/// axes of `R^{k_true}`, so every pair is exactly `separation` apart. Sample
/// `i` belongs to cluster `i mod k_true`. Each view embeds the latent points
/// with its own random orthonormal map and adds isotropic Gaussian noise.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.k_true;
    let scale = spec.separation / std::f64::consts::SQRT_2;
    let labels: Vec<usize> = (0..spec.n).map(|i| i % k).collect();
    let latent = DMatrix::from_fn(k, spec.n, |r, c| if labels[c] == r { scale } else { 0.0 });

    let mut views = Vec::with_capacity(spec.p);
    for &d in &spec.dims {
        let map = random_orthonormal(d, k, &mut rng);
        let mut x = &map * &latent;
        if spec.noise_sigma > 0.0 {
            for a in x.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *a += spec.noise_sigma * z;
            }
        }
        views.push(x);
    }
    MultiViewDataset::from_views(views, Some(labels))
}
