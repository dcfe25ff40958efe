//! Solver selection shared by `reorder`, `bench` and `grid-threshold`.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use seriation::solvers::{
    eta_spectral, faq, fwtb, ubi, EtaSpectralConfig, FaqConfig, FwtbConfig, QapKind, TieBreak, UbiConfig,
};
use seriation::{estimate_bandwidth, spectral_order, Loss, Report, Similarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    Spectral,
    EtaSpectral,
    Ubi,
    Faq,
    /// Frank-Wolfe with the naive `(0, n−1)` tie-break.
    Fwtb,
    /// Frank-Wolfe with the spectral tie-break.
    FwtbInit,
}

impl SolverName {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverName::Spectral => "spectral",
            SolverName::EtaSpectral => "eta-spectral",
            SolverName::Ubi => "ubi",
            SolverName::Faq => "faq",
            SolverName::Fwtb => "fwtb",
            SolverName::FwtbInit => "fwtb-init",
        }
    }

    /// Whether the solver optimizes a user-chosen loss.
    pub fn takes_loss(self) -> bool {
        !matches!(self, SolverName::Spectral | SolverName::EtaSpectral)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
pub enum LossName {
    #[value(name = "2sum")]
    #[serde(rename = "2sum")]
    TwoSum,
    #[value(name = "r2sum")]
    #[serde(rename = "r2sum")]
    R2Sum,
    #[value(name = "huber")]
    #[serde(rename = "huber")]
    Huber,
}

impl LossName {
    /// The loss at bandwidth `delta` (λ = δ² for the truncated one).
    pub fn kind(self, delta: usize) -> Loss {
        let d = delta as f64;
        match self {
            LossName::TwoSum => Loss::TwoSum,
            LossName::R2Sum => Loss::R2Sum { lambda: d * d },
            LossName::Huber => Loss::Huber { delta: d },
        }
    }
}

/// Runs `solver` on `a`. `delta` overrides the bandwidth estimate used for
/// Huber widths and truncation levels; `max_iter` overrides the solver's
/// iteration or round budget.
pub fn run(
    a: &Similarity,
    solver: SolverName,
    loss: LossName,
    delta: Option<usize>,
    max_iter: Option<usize>,
) -> seriation::Result<Report> {
    let delta = delta.unwrap_or_else(|| estimate_bandwidth(a).0);
    let kind = loss.kind(delta);
    match solver {
        SolverName::Spectral => spectral_order(a),
        SolverName::EtaSpectral => {
            let mut cfg = EtaSpectralConfig { delta: Some(delta as f64), ..Default::default() };
            if let Some(m) = max_iter {
                cfg.max_iter = m;
            }
            eta_spectral(a, &cfg)
        }
        SolverName::Ubi => {
            let mut cfg = UbiConfig::default();
            if let Some(m) = max_iter {
                cfg.rounds = m;
            }
            ubi(a, kind, &cfg)
        }
        SolverName::Faq => {
            let qap = match kind {
                Loss::TwoSum => QapKind::TwoSumB,
                Loss::R2Sum { lambda } => QapKind::TruncatedB(lambda),
                Loss::Huber { delta } => QapKind::HuberB(delta),
            };
            let mut cfg = FaqConfig::default();
            if let Some(m) = max_iter {
                cfg.max_iter = m;
            }
            faq(a, qap, &cfg)
        }
        SolverName::Fwtb | SolverName::FwtbInit => {
            let tiebreak = if solver == SolverName::Fwtb { TieBreak::Naive } else { TieBreak::SpectralInit };
            let mut cfg = FwtbConfig { tiebreak, ..Default::default() };
            if let Some(m) = max_iter {
                cfg.max_iter = m;
            }
            fwtb(a, kind, &cfg)
        }
    }
}
