//! Robust seriation and seriation with duplications.
//!
//! Reorders noisy pairwise-similarity matrices so that similarity decays
//! away from the diagonal, and reconstructs the order of duplicated
//! elements from bin-aggregated similarities.
//!
//! All numeric routines are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod assignment;
pub mod bandwidth;
pub mod duplication;
pub mod error;
pub mod generators;
pub mod io;
pub mod kendall;
pub mod loss;
pub mod matrix;
pub mod permutation;
pub mod projections;
pub mod scalar;
pub mod solvers;
pub mod spectral;

pub use assignment::{assignment_cost, linear_assignment, Sense};
pub use bandwidth::{band_count, estimate_bandwidth};
pub use duplication::{
    alt_proj_dupli, compress, init_expand, mean_assignment_distance, project_dupli_constraints, AssignmentMatrix,
    DupliReport, DuplicationCounts, InnerSolver,
};
pub use error::{Result, SeriationError};
pub use kendall::kendall_tau;
pub use loss::{huber, loss, smooth_loss, smooth_loss_grad, two_sum_quadratic_form, LossKind};
pub use matrix::{CostMatrix, DenseMatrix, SimilarityMatrix};
pub use permutation::Permutation;
pub use projections::{
    dist_to_strong_r, is_strong_r, project_strong_r, project_sum_nonneg, DiagonalBounds, Norm, StrongRMatrix,
};
pub use scalar::Scalar;
pub use solvers::SolverReport;
pub use spectral::{fiedler_pair, fiedler_vector, spectral_order, spectral_order_with, FiedlerPair, LaplacianOperator};

pub type Similarity = SimilarityMatrix<f64>;
pub type Dense = DenseMatrix<f64>;
pub type Costs = CostMatrix<f64>;
pub type Loss = LossKind<f64>;
pub type Report = SolverReport<f64>;
