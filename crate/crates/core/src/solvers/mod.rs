//! Robust seriation solvers sharing the [`SolverReport`] output.

use std::time::Instant;

use crate::error::Result;
use crate::loss::{loss, LossKind};
use crate::matrix::SimilarityMatrix;
use crate::permutation::Permutation;
use crate::scalar::Scalar;

pub mod eta_spectral;
pub mod faq;
pub mod fwtb;
mod lbfgs;
pub mod ubi;

pub use eta_spectral::{eta_spectral, EtaSpectralConfig};
pub use faq::{faq, faq_observed, FaqConfig, QapKind};
pub use fwtb::{fwtb, lmo_tiebreak, FwtbConfig, TieBreak};
pub use ubi::{ubi, HyperplaneBasis, UbiConfig, UbiObjective};

/// Output of every solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport<T> {
    pub permutation: Permutation,
    /// Loss of `permutation` under `kind`.
    pub objective: T,
    pub kind: LossKind<T>,
    /// `(iteration, value)` pairs; see each solver for what the value tracks.
    pub trace: Vec<(usize, T)>,
    pub iterations: usize,
    pub elapsed: f64,
    pub warnings: Vec<String>,
}

impl<T: Scalar> SolverReport<T> {
    pub(crate) fn finish(
        a: &SimilarityMatrix<T>,
        permutation: Permutation,
        kind: LossKind<T>,
        trace: Vec<(usize, T)>,
        iterations: usize,
        started: Instant,
    ) -> Result<Self> {
        let objective = loss(a, &permutation, kind)?;
        Ok(Self {
            permutation,
            objective,
            kind,
            trace,
            iterations,
            elapsed: started.elapsed().as_secs_f64(),
            warnings: Vec::new(),
        })
    }
}

/// Tracks the lowest-loss permutation seen so far.
pub(crate) struct BestSoFar<T> {
    pub perm: Option<Permutation>,
    pub value: T,
    pub trace: Vec<(usize, T)>,
}

impl<T: Scalar> BestSoFar<T> {
    pub fn new() -> Self {
        Self { perm: None, value: T::infinity(), trace: Vec::new() }
    }

    /// Offers a candidate; records the running best in the trace.
    pub fn offer(&mut self, iteration: usize, perm: Permutation, value: T) {
        if value < self.value || self.perm.is_none() {
            self.value = value;
            self.perm = Some(perm);
        }
        self.trace.push((iteration, self.value));
    }
}
