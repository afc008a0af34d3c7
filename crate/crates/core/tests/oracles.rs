mod common;

use anchorview::model::{rect_identity, DimensionSchedule, ModelState};
use anchorview::optimizer::{
    procrustes, project_to_simplex, update_anchors, update_graph, update_projections, weights_from_losses,
};
use anchorview::{objective, MultiViewDataset};
use common::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state_with(
    ds: &MultiViewDataset,
    stacks: Vec<Vec<DMatrix<f64>>>,
    anchors: DMatrix<f64>,
    graph: DMatrix<f64>,
    alpha: Vec<f64>,
) -> ModelState {
    let delta = stacks[0].len();
    let k = anchors.nrows();
    let m = anchors.ncols();
    ModelState {
        projections: Some(stacks),
        anchors,
        graph,
        alpha,
        k,
        m,
        delta,
        schedule: DimensionSchedule::build(&ds.dims(), k, delta).unwrap(),
    }
}

#[test]
fn simplex_projection_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let y: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
        let fast = project_to_simplex(&y).unwrap();
        let grid = grid_simplex_projection(y, 1e-3);
        for i in 0..3 {
            assert!((fast[i] - grid[i]).abs() <= 2e-3, "{y:?}: {fast:?} vs {grid:?}");
        }
    }
}

#[test]
fn simplex_projection_documented_case() {
    let z = project_to_simplex(&[0.5, 0.4, -0.1]).unwrap();
    let expect = [0.55, 0.45, 0.0];
    for i in 0..3 {
        assert!((z[i] - expect[i]).abs() < 1e-12);
    }
}

#[test]
fn procrustes_beats_random_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let rows = rng.random_range(2..8);
        let cols = rng.random_range(1..=rows);
        let m = gaussian(rows, cols, &mut rng);
        let w = procrustes(&m).unwrap();
        let best = m.dot(&w);
        for _ in 0..200 {
            let cand = random_orthonormal(rows, cols, &mut rng);
            assert!(m.dot(&cand) <= best + 1e-10);
        }
    }
}

#[test]
fn weight_rule_matches_numeric_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let p = rng.random_range(2..5);
        let f: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..10.0)).collect();
        let closed = weights_from_losses(&f);
        let numeric = mirror_descent_weights(&f, 20_000);
        for v in 0..p {
            assert!((closed[v] - numeric[v]).abs() < 1e-3, "{f:?}: {closed:?} vs {numeric:?}");
        }
    }
}

#[test]
fn objective_matches_elementwise_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let views = vec![gaussian(5, 8, &mut rng), gaussian(6, 8, &mut rng)];
    let ds = MultiViewDataset::from_views(views.clone(), None).unwrap();
    let stacks: Vec<Vec<DMatrix<f64>>> = vec![
        vec![random_orthonormal(5, 2, &mut rng)],
        vec![random_orthonormal(6, 2, &mut rng)],
    ];
    let chains: Vec<DMatrix<f64>> = stacks.iter().map(|s| s[0].clone()).collect();
    let a = random_orthonormal(2, 2, &mut rng);
    let z = random_stochastic(2, 8, &mut rng);
    let alpha = vec![0.3, 0.7];
    let state = state_with(&ds, stacks, a.clone(), z.clone(), alpha.clone());
    let fast = objective(&state, &ds).unwrap();
    let slow = loop_objective(&views, &chains, &a, &z, &alpha);
    assert!((fast - slow).abs() <= 1e-10 * slow.max(1.0), "{fast} vs {slow}");
}

#[test]
fn graph_update_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (d, k, m, n) = (6, 3, 3, 5);
    let views = vec![gaussian(d, n, &mut rng), gaussian(d + 2, n, &mut rng)];
    let ds = MultiViewDataset::from_views(views.clone(), None).unwrap();
    let stacks = vec![vec![random_orthonormal(d, k, &mut rng)], vec![random_orthonormal(d + 2, k, &mut rng)]];
    let chains: Vec<DMatrix<f64>> = stacks.iter().map(|s| s[0].clone()).collect();
    let a = random_orthonormal(k, m, &mut rng);
    let alpha = vec![0.4, 0.6];
    let mut state = state_with(&ds, stacks, a.clone(), random_stochastic(m, n, &mut rng), alpha.clone());
    update_graph(&mut state, &ds).unwrap();

    // per column, search the simplex grid for the smallest weighted residual
    let step = 2e-3;
    let steps = (1.0 / step) as usize;
    for j in 0..n {
        let mut best = (f64::INFINITY, [0.0; 3]);
        for i in 0..=steps {
            for l in 0..=steps - i {
                let zc = [i as f64 * step, l as f64 * step, 1.0 - (i + l) as f64 * step];
                let mut cost = 0.0;
                for (v, x) in views.iter().enumerate() {
                    let p = &chains[v] * &a;
                    for r in 0..x.nrows() {
                        let rec: f64 = (0..m).map(|s| p[(r, s)] * zc[s]).sum();
                        cost += alpha[v] * alpha[v] * (x[(r, j)] - rec).powi(2);
                    }
                }
                if cost < best.0 {
                    best = (cost, zc);
                }
            }
        }
        for s in 0..m {
            assert!((state.graph[(s, j)] - best.1[s]).abs() <= 4e-3, "column {j}");
        }
    }
}

#[test]
fn graph_update_picks_the_matching_anchor() {
    let (k, n, t) = (4, 6, 2);
    let mut x = DMatrix::zeros(k, n);
    for j in 0..n {
        x[(t, j)] = 1.0;
    }
    let ds = MultiViewDataset::from_views(vec![x], None).unwrap();
    let mut state = state_with(
        &ds,
        vec![vec![DMatrix::identity(k, k)]],
        DMatrix::identity(k, k),
        rect_identity(k, n),
        vec![1.0],
    );
    update_graph(&mut state, &ds).unwrap();
    for j in 0..n {
        assert_eq!(state.graph.column(j).imax(), t);
    }
}

#[test]
fn anchor_update_recovers_generating_subspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let (k, m, n) = (6, 3, 40);
    let a0 = random_orthonormal(k, m, &mut rng);
    let z = random_stochastic(m, n, &mut rng);
    let ds = MultiViewDataset::from_views(vec![&a0 * &z], None).unwrap();
    let mut state = state_with(&ds, vec![vec![DMatrix::identity(k, k)]], rect_identity(k, m), z, vec![1.0]);
    update_anchors(&mut state, &ds).unwrap();
    assert!(max_principal_sine(&state.anchors, &a0) < 1e-6);
}

#[test]
fn single_layer_update_beats_random_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (d, k, n) = (7, 3, 30);
    let ds = MultiViewDataset::from_views(vec![gaussian(d, n, &mut rng)], None).unwrap();
    let a = random_orthonormal(k, k, &mut rng);
    let z = random_stochastic(k, n, &mut rng);
    let mut state = state_with(&ds, vec![vec![rect_identity(d, k)]], a, z, vec![1.0]);
    update_projections(&mut state, &ds).unwrap();
    let best = objective(&state, &ds).unwrap();
    for _ in 0..200 {
        let mut other = state.clone();
        other.projections = Some(vec![vec![random_orthonormal(d, k, &mut rng)]]);
        assert!(objective(&other, &ds).unwrap() >= best - 1e-9);
    }
}
