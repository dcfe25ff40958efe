//! Threshold grid search scored by the truncated objective.

use serde::{Deserialize, Serialize};

use seriation::{estimate_bandwidth, kendall_tau, loss, Loss, Permutation, SeriationError, Similarity};

use crate::solve::{self, LossName, SolverName};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridThresholdSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub solver: SolverName,
    pub loss: LossName,
}

impl GridThresholdSpec {
    pub fn validate(&self) -> seriation::Result<()> {
        if self.count == 0 || !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(SeriationError::InvalidArgument(format!(
                "need lo < hi and count ≥ 1, got lo {} hi {} count {}",
                self.lo, self.hi, self.count
            )));
        }
        Ok(())
    }

    /// `count` evenly spaced values from `lo` to `hi`; just `lo` when `count = 1`.
    pub fn thresholds(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|k| if k + 1 == self.count { self.hi } else { self.lo + k as f64 * step }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub threshold: f64,
    pub nnz: usize,
    pub components: usize,
    pub delta_hat: Option<usize>,
    /// Truncated objective of the thresholded matrix at its own `δ̂²`.
    pub r2sum_own: Option<f64>,
    /// Truncated objective of the input matrix at the common level; the
    /// selection score.
    pub r2sum: Option<f64>,
    pub kendall_tau: Option<f64>,
    pub iterations: Option<usize>,
    pub elapsed_s: Option<f64>,
    pub error: Option<String>,
}

pub struct GridResult {
    pub rows: Vec<GridRow>,
    /// Index into `rows` and ordering of the lowest score.
    pub best: Option<(usize, Permutation)>,
    /// Common truncation level, `δ̂²` of the highest connected threshold.
    pub lambda: Option<f64>,
}

/// For each threshold, keeps entries at or above it, skips disconnected
/// matrices, orders the rest with the chosen solver and scores every
/// ordering on the input matrix with one truncation level, so scores are
/// comparable across thresholds. Ties go to the lower threshold.
pub fn run(a: &Similarity, spec: &GridThresholdSpec, truth: Option<&Permutation>) -> seriation::Result<GridResult> {
    spec.validate()?;
    let mut rows = Vec::new();
    let mut perms = Vec::new();
    for t in spec.thresholds() {
        let m = a.thresholded(t);
        let components = m.connected_components().len();
        let mut row = GridRow {
            threshold: t,
            nnz: m.nnz(),
            components,
            delta_hat: None,
            r2sum_own: None,
            r2sum: None,
            kendall_tau: None,
            iterations: None,
            elapsed_s: None,
            error: None,
        };
        let mut perm = None;
        if components > 1 {
            row.error = Some(
                SeriationError::Disconnected { sizes: m.connected_components().iter().map(Vec::len).collect() }
                    .to_string(),
            );
        } else {
            let (delta, lambda) = estimate_bandwidth(&m);
            row.delta_hat = Some(delta);
            match solve::run(&m, spec.solver, spec.loss, None, None) {
                Ok(report) => {
                    row.r2sum_own = Some(loss(&m, &report.permutation, Loss::R2Sum { lambda })?);
                    row.kendall_tau = truth.map(|t| kendall_tau(&report.permutation, t, true)).transpose()?;
                    row.iterations = Some(report.iterations);
                    row.elapsed_s = Some(report.elapsed);
                    perm = Some(report.permutation);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
        }
        rows.push(row);
        perms.push(perm);
    }
    let lambda = rows.iter().rev().find_map(|r| r.delta_hat).map(|d| (d * d) as f64);
    let mut best: Option<(usize, f64)> = None;
    if let Some(lambda) = lambda {
        for (k, p) in perms.iter().enumerate() {
            if let Some(p) = p {
                let s = loss(a, p, Loss::R2Sum { lambda })?;
                rows[k].r2sum = Some(s);
                if best.is_none_or(|(_, b)| s < b) {
                    best = Some((k, s));
                }
            }
        }
    }
    let best = best.map(|(k, _)| (k, perms[k].clone().expect("scored rows have orderings")));
    Ok(GridResult { rows, best, lambda })
}
