//! Per-ordering scores.

use serde::{Deserialize, Serialize};

use seriation::{dist_to_strong_r, kendall_tau, loss, Loss, Permutation, Similarity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    /// Flip-invariant, empty without a reference ordering.
    pub kendall_tau: Option<f64>,
    pub two_sum: f64,
    /// Truncated at `δ²`.
    pub r2sum: f64,
    /// Huber width `δ`.
    pub huber: f64,
    /// Frobenius distance of the reordered matrix to the strong-R set.
    pub dist2r: Option<f64>,
}

pub fn score(
    a: &Similarity,
    perm: &Permutation,
    truth: Option<&Permutation>,
    delta: usize,
    with_dist2r: bool,
) -> seriation::Result<Scores> {
    let d = delta as f64;
    Ok(Scores {
        kendall_tau: truth.map(|t| kendall_tau(perm, t, true)).transpose()?,
        two_sum: loss(a, perm, Loss::TwoSum)?,
        r2sum: loss(a, perm, Loss::R2Sum { lambda: d * d })?,
        huber: loss(a, perm, Loss::Huber { delta: d })?,
        dist2r: if with_dist2r { Some(dist_to_strong_r(&a.permuted(perm)?.to_dense())?) } else { None },
    })
}

/// Mean and population standard deviation, `None` for an empty sample.
pub fn mean_std(v: &[f64]) -> Option<(f64, f64)> {
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}
