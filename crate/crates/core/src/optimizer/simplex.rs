use crate::error::{Error, Result};

/// Euclidean projection of `y` onto the probability simplex
/// `{z : z >= 0, sum(z) = 1}` by sorting and thresholding.
pub fn project_to_simplex(y: &[f64]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::Validation("cannot project an empty vector onto the simplex".into()));
    }
    if let Some(bad) = y.iter().find(|a| !a.is_finite()) {
        return Err(Error::Validation(format!("non-finite entry {bad} in simplex projection input")));
    }
    let mut out = y.to_vec();
    let mut scratch = Vec::with_capacity(y.len());
    project_in_place(&mut out, &mut scratch);
    Ok(out)
}

/// In-place variant used for graph columns; `scratch` is reused between calls.
/// Input must be finite and non-empty.
pub(crate) fn project_in_place(y: &mut [f64], scratch: &mut Vec<f64>) {
    scratch.clear();
    scratch.extend_from_slice(y);
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    for a in y.iter_mut() {
        *a = (*a - tau).max(0.0);
    }
}
