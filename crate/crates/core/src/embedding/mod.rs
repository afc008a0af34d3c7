//! Spectral embedding of the anchor graph and hard cluster assignment.
//!
//! The sample similarity `S = ẐᵀẐ` is never formed. Its leading eigenvectors
//! are the right singular vectors of `Ẑ`, which we recover from the `m × m`
//! Gram matrix `ẐẐᵀ` at `O(n m²)` cost.

mod kmeans;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::complete_orthonormal;

pub use kmeans::{kmeans, ClusterResult, KMeansConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// `n × k`, orthonormal columns, one row per sample.
    pub coords: DMatrix<f64>,
    /// Non-increasing; zero for padded directions.
    pub singular_values: Vec<f64>,
}

/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-7;

/// Applies the anchor-degree normalization `D^{-1/2} Z`, dropping anchors
/// with zero degree. With `degree_norm == false` only the dropping happens.
pub fn normalized_graph(z: &DMatrix<f64>, degree_norm: bool) -> DMatrix<f64> {
    let degrees: Vec<f64> = z.row_iter().map(|r| r.sum()).collect();
    let keep: Vec<usize> = (0..z.nrows()).filter(|&i| degrees[i] > 0.0).collect();
    if keep.len() < z.nrows() {
        log::warn!("dropping {} anchor(s) with zero degree", z.nrows() - keep.len());
    }
    DMatrix::from_fn(keep.len(), z.ncols(), |r, c| {
        let i = keep[r];
        if degree_norm {
            z[(i, c)] / degrees[i].sqrt()
        } else {
            z[(i, c)]
        }
    })
}

fn fix_sign(v: &mut DVector<f64>) {
    if v[v.iamax()] < 0.0 {
        v.neg_mut();
    }
}

/// Top-`k` right singular vectors of the (optionally degree-normalized) graph.
pub fn spectral_embedding(z: &DMatrix<f64>, k: usize, degree_norm: bool) -> Result<SpectralEmbedding> {
    let (m, n) = z.shape();
    if k == 0 || k > m {
        return Err(Error::Validation(format!("embedding dimension {k} must be in 1..={m}")));
    }
    if k > n {
        return Err(Error::Validation(format!("embedding dimension {k} exceeds sample count {n}")));
    }
    if z.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::Validation("graph must be finite and non-negative".into()));
    }
    let zhat = normalized_graph(z, degree_norm);
    if zhat.nrows() == 0 {
        return Err(Error::Numeric("graph has no anchor with positive degree".into()));
    }

    let gram = &zhat * zhat.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let sigma_max = eig.eigenvalues[order[0]].max(0.0).sqrt();
    let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut singular_values = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let sigma = eig.eigenvalues[i].max(0.0).sqrt();
        if sigma <= RANK_TOL * sigma_max || sigma == 0.0 {
            break;
        }
        let u = eig.eigenvectors.column(i);
        let mut v: DVector<f64> = zhat.tr_mul(&u) / sigma;
        fix_sign(&mut v);
        vectors.push(v);
        singular_values.push(sigma);
    }
    if vectors.len() < k {
        log::warn!(
            "graph rank {} is below the embedding dimension {k}; padding with orthonormal complement",
            vectors.len()
        );
        let missing = k - vectors.len();
        let have = vectors.len();
        complete_orthonormal(&mut vectors, n, have + missing);
        for v in vectors.iter_mut().skip(singular_values.len()) {
            fix_sign(v);
        }
        singular_values.resize(k, 0.0);
    }
    Ok(SpectralEmbedding {
        coords: DMatrix::from_columns(&vectors),
        singular_values,
    })
}
