//! η-Spectral: spectral ordering iteratively reweighted towards HuberSUM.

use std::time::Instant;

use crate::bandwidth::estimate_bandwidth;
use crate::error::{Result, SeriationError};
use crate::loss::{loss, LossKind};
use crate::matrix::SimilarityMatrix;
use crate::scalar::Scalar;
use crate::solvers::{BestSoFar, SolverReport};
use crate::spectral::spectral_order_with;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSpectralConfig<T> {
    /// Huber width; `None` uses the bandwidth estimate.
    pub delta: Option<T>,
    /// Reweighting rounds after the initial plain spectral pass.
    pub max_iter: usize,
    /// Relaxation weight on the previous η.
    pub gamma: T,
    pub tol: T,
}

impl<T: Scalar> Default for EtaSpectralConfig<T> {
    fn default() -> Self {
        Self { delta: None, max_iter: 20, gamma: T::of(0.5), tol: T::default_tol() }
    }
}

impl<T: Scalar> EtaSpectralConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= T::zero() && self.gamma < T::one()) {
            return Err(SeriationError::InvalidArgument(format!("relaxation must lie in [0, 1), got {}", self.gamma)));
        }
        if let Some(d) = self.delta {
            if !(d >= T::one()) || !d.is_finite() {
                return Err(SeriationError::InvalidArgument(format!("Huber width must be at least 1, got {d}")));
            }
        }
        Ok(())
    }
}

/// Alternates spectral ordering of `A ./ η` with the update
/// `η ← γη + (1−γ)·max(|π_i − π_j|, δ)` on the stored entries, and reports
/// the iterate with the lowest HuberSUM(δ) score. Round 0 is plain spectral.
pub fn eta_spectral<T: Scalar>(a: &SimilarityMatrix<T>, cfg: &EtaSpectralConfig<T>) -> Result<SolverReport<T>> {
    cfg.validate()?;
    let started = Instant::now();
    let delta = cfg.delta.unwrap_or_else(|| T::of_usize(estimate_bandwidth(a).0));
    let kind = LossKind::Huber { delta };
    let max_matvec = 50 * a.n();
    let mut eta = vec![delta; a.entries().len()];
    let mut best = BestSoFar::new();
    let mut rounds = 0;
    for t in 0..=cfg.max_iter {
        let mut k = 0;
        let weighted = a.map_entries(|_, _, v| {
            let w = v / eta[k];
            k += 1;
            w
        });
        debug_assert_eq!(weighted.entries().len(), a.entries().len());
        let perm = spectral_order_with(&weighted, cfg.tol, max_matvec)
            .map_err(|e| SeriationError::Round { round: t, source: Box::new(e) })?
            .permutation;
        let score = loss(a, &perm, kind)?;
        let unchanged = best.perm.as_ref() == Some(&perm);
        for (e, &(i, j, _)) in eta.iter_mut().zip(a.entries()) {
            let gap = T::of_usize(perm.position(i).abs_diff(perm.position(j))).max(delta);
            *e = cfg.gamma * *e + (T::one() - cfg.gamma) * gap;
        }
        best.offer(t, perm, score);
        rounds = t + 1;
        if unchanged && cfg.gamma == T::zero() {
            break;
        }
    }
    let perm = best.perm.take().expect("at least one round");
    SolverReport::finish(a, perm, kind, best.trace, rounds, started)
}
