//! External clustering quality: best-match accuracy, NMI and purity.
//!
//! Label values are arbitrary; both label vectors are compressed to dense ids
//! (in ascending value order) before building the contingency table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiNorm {
    #[default]
    Geometric,
    Arithmetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
    /// `k_pred × k_true` overlap counts.
    pub contingency: Vec<Vec<u64>>,
}

impl MetricReport {
    pub fn compute(pred: &[usize], truth: &[usize], norm: NmiNorm) -> Result<Self> {
        let table = contingency(pred, truth)?;
        Ok(Self {
            acc: accuracy_from_table(&table, pred.len()),
            nmi: nmi_from_table(&table, pred.len(), norm),
            purity: purity_from_table(&table, pred.len()),
            contingency: table,
        })
    }
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut values = labels.to_vec();
    values.sort_unstable();
    values.dedup();
    let ids = labels
        .iter()
        .map(|l| values.binary_search(l).expect("value present"))
        .collect();
    (ids, values.len())
}

pub fn contingency(pred: &[usize], truth: &[usize]) -> Result<Vec<Vec<u64>>> {
    if pred.len() != truth.len() {
        return Err(Error::Validation(format!(
            "prediction has {} labels but ground truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Validation("cannot score an empty labelling".into()));
    }
    let (p, kp) = dense_ids(pred);
    let (t, kt) = dense_ids(truth);
    let mut table = vec![vec![0u64; kt]; kp];
    for (a, b) in p.into_iter().zip(t) {
        table[a][b] += 1;
    }
    Ok(table)
}

/// Minimum-cost perfect matching on a square matrix (Hungarian method with
/// potentials). Returns `assignment[row] = column`.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is a virtual source
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = i64::MAX;
            let mut col1 = 0;
            for c in 1..=n {
                if !used[c] {
                    let cur = cost[r - 1][c - 1] - u[r] - v[c];
                    if cur < minv[c] {
                        minv[c] = cur;
                        way[c] = col0;
                    }
                    if minv[c] < delta {
                        delta = minv[c];
                        col1 = c;
                    }
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for c in 1..=n {
        assignment[owner[c] - 1] = c - 1;
    }
    assignment
}

fn accuracy_from_table(table: &[Vec<u64>], n: usize) -> f64 {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    let size = rows.max(cols);
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|r| {
            (0..size)
                .map(|c| if r < rows && c < cols { -(table[r][c] as i64) } else { 0 })
                .collect()
        })
        .collect();
    let assignment = min_cost_assignment(&cost);
    let matched: i64 = assignment.iter().enumerate().map(|(r, &c)| -cost[r][c]).sum();
    matched as f64 / n as f64
}

fn entropy(counts: impl Iterator<Item = u64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn nmi_from_table(table: &[Vec<u64>], n: usize, norm: NmiNorm) -> f64 {
    let nf = n as f64;
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..table[0].len()).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let h_pred = entropy(row_sums.iter().copied(), nf);
    let h_true = entropy(col_sums.iter().copied(), nf);
    if h_pred == 0.0 || h_true == 0.0 {
        // a single cluster on both sides means identical partitions
        return if h_pred == 0.0 && h_true == 0.0 { 1.0 } else { 0.0 };
    }
    // identical partitions up to renaming; the float sum would land a few ulps short
    let one_per_row = table.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1);
    let one_per_col = (0..col_sums.len()).all(|c| table.iter().filter(|r| r[c] > 0).count() == 1);
    if one_per_row && one_per_col {
        return 1.0;
    }
    let mut mi = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint = count as f64 / nf;
                mi += joint * (count as f64 * nf / (row_sums[r] as f64 * col_sums[c] as f64)).ln();
            }
        }
    }
    let denom = match norm {
        NmiNorm::Geometric => (h_pred * h_true).sqrt(),
        NmiNorm::Arithmetic => 0.5 * (h_pred + h_true),
    };
    (mi / denom).clamp(0.0, 1.0)
}

fn purity_from_table(table: &[Vec<u64>], n: usize) -> f64 {
    let hits: u64 = table.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
    hits as f64 / n as f64
}

/// Fraction of samples correct under the best one-to-one relabelling.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(accuracy_from_table(&contingency(pred, truth)?, pred.len()))
}

pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    nmi_with(pred, truth, NmiNorm::Geometric)
}

pub fn nmi_with(pred: &[usize], truth: &[usize], norm: NmiNorm) -> Result<f64> {
    Ok(nmi_from_table(&contingency(pred, truth)?, pred.len(), norm))
}

pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(purity_from_table(&contingency(pred, truth)?, pred.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRUTH: [usize; 6] = [0, 0, 1, 1, 2, 2];
    const PRED: [usize; 6] = [1, 1, 0, 0, 0, 2];

    #[test]
    fn perfect_and_permuted() {
        let t = [0, 1, 2, 2, 1, 0, 3];
        let renamed: Vec<usize> = t.iter().map(|&l| [7, 3, 9, 0][l]).collect();
        for p in [&t[..], &renamed[..]] {
            assert_eq!(accuracy(p, &t).unwrap(), 1.0);
            assert!((nmi(p, &t).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(purity(p, &t).unwrap(), 1.0);
        }
    }

    #[test]
    fn partial_match_examples() {
        assert!((accuracy(&PRED, &TRUTH).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!((purity(&PRED, &TRUTH).unwrap() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn independent_partitions_have_zero_nmi() {
        assert_eq!(nmi(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn single_cluster_edge_cases() {
        assert_eq!(nmi(&[4, 4, 4], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        let truth = [0, 0, 1, 1, 2, 2];
        assert!((purity(&[5; 6], &truth).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn arithmetic_normalization_is_not_smaller() {
        let g = nmi_with(&PRED, &TRUTH, NmiNorm::Geometric).unwrap();
        let a = nmi_with(&PRED, &TRUTH, NmiNorm::Arithmetic).unwrap();
        assert!(a <= g + 1e-15, "AM >= GM so the arithmetic variant is smaller: {a} {g}");
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(accuracy(&[0, 1], &[0]), Err(Error::Validation(_))));
    }

    #[test]
    fn rectangular_tables() {
        // 2 predicted clusters vs 3 classes
        let acc = accuracy(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 2, 2]).unwrap();
        assert!((acc - 4.0 / 6.0).abs() < 1e-15);
        let report = MetricReport::compute(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 2, 2], NmiNorm::Geometric).unwrap();
        assert_eq!(report.contingency.iter().flatten().sum::<u64>(), 6);
        assert_eq!(report.contingency.len(), 2);
    }

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        let a = min_cost_assignment(&cost);
        let total: i64 = a.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        assert_eq!(total, 5);
    }
}
