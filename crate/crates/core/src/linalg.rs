//! Dense helpers: one-sided Jacobi SVD and orthonormal basis completion.
//!
//! The Jacobi SVD stays accurate on rank-deficient input, where a
//! bidiagonalization-based SVD can lose the factorization entirely.

use nalgebra::{DMatrix, DVector};

/// Thin SVD `A = U diag(s) Vᵀ` of a tall matrix, singular values descending.
/// `U` always has orthonormal columns, with directions for zero singular
/// values filled in from the orthogonal complement.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

const MAX_SWEEPS: usize = 80;

pub fn thin_svd(a: &DMatrix<f64>) -> ThinSvd {
    let (rows, cols) = a.shape();
    assert!(rows >= cols, "thin_svd expects a tall matrix, got {rows}x{cols}");
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta, gamma) = {
                    let cp = w.column(p);
                    let cq = w.column(q);
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let s_max = norms.iter().copied().fold(0.0, f64::max);
    let tol = s_max * rows.max(cols) as f64 * f64::EPSILON;

    let mut s = Vec::with_capacity(cols);
    let mut u_cols: Vec<DVector<f64>> = Vec::with_capacity(cols);
    let mut kept = Vec::with_capacity(cols);
    let mut dropped = Vec::new();
    for &j in &order {
        if norms[j] > tol {
            let mut u = w.column(j) / norms[j];
            // small singular values leave u slightly off; re-orthogonalize
            orthogonalize(&mut u, &u_cols);
            let n = u.norm();
            if n > 0.5 {
                u_cols.push(u / n);
                s.push(norms[j]);
                kept.push(j);
                continue;
            }
        }
        dropped.push(j);
    }
    complete_orthonormal(&mut u_cols, rows, cols);
    s.resize(cols, 0.0);

    let v_cols: Vec<DVector<f64>> = kept
        .iter()
        .chain(&dropped)
        .map(|&j| v.column(j).clone_owned())
        .collect();
    ThinSvd {
        u: DMatrix::from_columns(&u_cols),
        s,
        v: DMatrix::from_columns(&v_cols),
    }
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let a = m[(r, p)];
        let b = m[(r, q)];
        m[(r, p)] = c * a - s * b;
        m[(r, q)] = s * a + c * b;
    }
}

/// Removes from `x` its components along the (orthonormal) `basis`, twice.
pub fn orthogonalize(x: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let proj = b.dot(x);
            x.axpy(-proj, b, 1.0);
        }
    }
}

/// Grows `basis` (orthonormal vectors of length `dim`) to `target` vectors by
/// orthogonalizing standard basis vectors in index order.
///
/// When the complement is spread thinly over many coordinates no single
/// candidate clears the first-pass threshold; the remaining vectors then
/// come from the candidate with the largest residual.
pub fn complete_orthonormal(basis: &mut Vec<DVector<f64>>, dim: usize, target: usize) {
    let target = target.min(dim);
    let residual = |basis: &[DVector<f64>], i: usize| {
        let mut x = DVector::zeros(dim);
        x[i] = 1.0;
        orthogonalize(&mut x, basis);
        x
    };
    for i in 0..dim {
        if basis.len() >= target {
            return;
        }
        let x = residual(basis, i);
        let n = x.norm();
        if n > 0.5 {
            basis.push(x / n);
        }
    }
    while basis.len() < target {
        let (x, n) = (0..dim)
            .map(|i| {
                let x = residual(basis, i);
                let n = x.norm();
                (x, n)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("dim > 0");
        let mut x = x / n;
        // one more pass keeps orthogonality when the residual was small
        orthogonalize(&mut x, basis);
        let n = x.norm();
        basis.push(x / n);
    }
}
