use nalgebra::{DMatrix, DVector};

use crate::linalg::{complete_orthonormal, orthogonalize, thin_svd};

fn degenerate(m: &DMatrix<f64>) -> bool {
    !m.iter().all(|a| a.is_finite()) || m.amax() == 0.0
}

/// Maximizer of `Tr(M Wᵀ)` over matrices with orthonormal columns.
///
/// With the thin SVD `M = U D Vᵀ` the maximizer is `U Vᵀ`. Returns `None`
/// when `M` is zero or non-finite, where every feasible `W` ties (or the
/// decomposition is meaningless) and the caller keeps its current iterate.
/// `M` must have at least as many rows as columns.
pub fn procrustes(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if degenerate(m) {
        return None;
    }
    let svd = thin_svd(m);
    Some(svd.u * svd.v.transpose())
}

/// Procrustes maximizer for `M = L Gᵀ` where `G` (`cols × r`) has orthonormal
/// columns and `r <= cols`, without forming `M`.
///
/// A thin QR `L = Q R` and the SVD `R = U_c D V_cᵀ` give the thin SVD
/// `M = (Q U_c) D (G V_c)ᵀ`. When `r < cols` the optimum is not unique on the
/// orthogonal complement of `G`; there the result follows `prev` (projected
/// away from `Q U_c` and re-orthonormalized), so a layer that is already
/// optimal stays put.
pub fn procrustes_factored(
    left: &DMatrix<f64>,
    gen: &DMatrix<f64>,
    prev: &DMatrix<f64>,
) -> Option<DMatrix<f64>> {
    let (rows, r) = left.shape();
    let cols = gen.nrows();
    debug_assert_eq!(gen.ncols(), r);
    debug_assert!(r <= cols && cols <= rows);
    if degenerate(left) {
        return None;
    }
    let qr = left.clone().qr();
    let core = thin_svd(&qr.r());
    let u_r = qr.q() * &core.u;
    let v_r = gen * &core.v;
    let mut w = &u_r * v_r.transpose();
    if r < cols {
        let mut v_basis: Vec<DVector<f64>> = v_r.column_iter().map(|c| c.clone_owned()).collect();
        complete_orthonormal(&mut v_basis, cols, cols);
        let v_perp = &v_basis[r..];

        let mut u_basis: Vec<DVector<f64>> = u_r.column_iter().map(|c| c.clone_owned()).collect();
        for vp in v_perp {
            let mut x = prev * vp;
            orthogonalize(&mut x, &u_basis);
            let n = x.norm();
            if n > 0.5 {
                u_basis.push(x / n);
            } else {
                // prev collapses this direction; take any complement vector
                let before = u_basis.len();
                complete_orthonormal(&mut u_basis, rows, before + 1);
            }
        }
        for (up, vp) in u_basis[r..].iter().zip(v_perp) {
            w += up * vp.transpose();
        }
    }
    Some(w)
}
