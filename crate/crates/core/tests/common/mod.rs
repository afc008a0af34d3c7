//! Reference implementations shared by the integration tests. They trade
//! speed for obviousness and avoid calling the library's own solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random `rows × cols` matrix with orthonormal columns via Gram-Schmidt.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    loop {
        let g = gaussian(rows, cols, rng);
        let mut cols_out: Vec<DVector<f64>> = Vec::with_capacity(cols);
        let mut ok = true;
        for c in 0..cols {
            let mut x = g.column(c).clone_owned();
            for _ in 0..2 {
                for b in &cols_out {
                    let d = b.dot(&x);
                    x -= b * d;
                }
            }
            let n = x.norm();
            if n < 1e-6 {
                ok = false;
                break;
            }
            cols_out.push(x / n);
        }
        if ok {
            return DMatrix::from_columns(&cols_out);
        }
    }
}

/// Columns drawn uniformly-ish from the probability simplex.
pub fn random_stochastic(m: usize, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut z = DMatrix::from_fn(m, n, |_, _| -rng.random::<f64>().max(1e-300).ln());
    for mut c in z.column_iter_mut() {
        let s = c.sum();
        c /= s;
    }
    z
}

/// Nearest point on the 3-simplex to `y`, by exhaustive search on a grid of
/// spacing `step`.
pub fn grid_simplex_projection(y: [f64; 3], step: f64) -> [f64; 3] {
    let steps = (1.0 / step).round() as usize;
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..=steps {
        for j in 0..=steps - i {
            let a = i as f64 * step;
            let b = j as f64 * step;
            let c = 1.0 - a - b;
            let d = (a - y[0]).powi(2) + (b - y[1]).powi(2) + (c - y[2]).powi(2);
            if d < best.0 {
                best = (d, [a, b, c]);
            }
        }
    }
    best.1
}

/// Minimizes `Σ α_v² f_v` over the simplex by exponentiated gradient.
pub fn mirror_descent_weights(f: &[f64], iters: usize) -> Vec<f64> {
    let p = f.len();
    let mut a = vec![1.0 / p as f64; p];
    let scale = f.iter().copied().fold(0.0, f64::max);
    let eta = 0.5 / scale;
    for _ in 0..iters {
        let mut s = 0.0;
        for v in 0..p {
            a[v] *= (-eta * 2.0 * a[v] * f[v]).exp();
            s += a[v];
        }
        for x in &mut a {
            *x /= s;
        }
    }
    a
}

/// Largest sine of the principal angles between two column spaces, each
/// given by orthonormal columns.
pub fn max_principal_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let residual = a - b * (b.transpose() * a);
    let gram = residual.transpose() * &residual;
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues.iter().copied().fold(0.0, f64::max).max(0.0).sqrt()
}

/// Top-`k` eigenvectors of the dense `n × n` similarity `ẐᵀẐ`, plus the gap
/// between the k-th and (k+1)-th eigenvalues.
pub fn dense_embedding(z: &DMatrix<f64>, k: usize, degree_norm: bool) -> (DMatrix<f64>, f64) {
    let mut zhat = z.clone();
    if degree_norm {
        for mut row in zhat.row_iter_mut() {
            let d = row.sum();
            if d > 0.0 {
                row /= d.sqrt();
            }
        }
    }
    let s = zhat.transpose() * &zhat;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let cols: Vec<DVector<f64>> = order[..k].iter().map(|&i| eig.eigenvectors.column(i).clone_owned()).collect();
    let next = order.get(k).map_or(0.0, |&i| eig.eigenvalues[i]);
    (DMatrix::from_columns(&cols), eig.eigenvalues[order[k - 1]] - next)
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Best accuracy over every injective relabeling of the predictions.
pub fn brute_force_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let kp = pred.iter().max().map_or(0, |m| m + 1);
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let size = kp.max(kt);
    let mut perms = Vec::new();
    permutations(&mut (0..size).collect(), 0, &mut perms);
    let mut best = 0;
    for perm in perms {
        let hits = pred.iter().zip(truth).filter(|(p, t)| perm[**p] == **t).count();
        best = best.max(hits);
    }
    best as f64 / pred.len() as f64
}

/// Squared reconstruction objective by explicit index loops.
pub fn loop_objective(
    views: &[DMatrix<f64>],
    chains: &[DMatrix<f64>],
    a: &DMatrix<f64>,
    z: &DMatrix<f64>,
    alpha: &[f64],
) -> f64 {
    let mut total = 0.0;
    for (v, x) in views.iter().enumerate() {
        let p = &chains[v];
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                let mut rec = 0.0;
                for r in 0..p.ncols() {
                    for s in 0..a.ncols() {
                        rec += p[(i, r)] * a[(r, s)] * z[(s, j)];
                    }
                }
                total += alpha[v] * alpha[v] * (x[(i, j)] - rec).powi(2);
            }
        }
    }
    total
}
