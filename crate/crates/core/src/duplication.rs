//! Seriation with duplications: `N` fragments grouped into `n` bins, of which
//! only bin-aggregated similarities `A = Z S Zᵀ` are observed.

use crate::assignment::{linear_assignment, Sense};
use crate::bandwidth::estimate_bandwidth;
use crate::error::{Result, SeriationError};
use crate::loss::LossKind;
use crate::matrix::{CostMatrix, DenseMatrix, SimilarityMatrix};
use crate::permutation::Permutation;
use crate::projections::{project_strong_r, project_sum_nonneg, DiagonalBounds, Norm};
use crate::scalar::Scalar;
use crate::solvers::{eta_spectral, ubi, EtaSpectralConfig, UbiConfig};
use crate::spectral::spectral_order;

/// Number of fragments per bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicationCounts {
    c: Vec<usize>,
}

impl DuplicationCounts {
    pub fn new(c: Vec<usize>) -> Result<Self> {
        if c.is_empty() {
            return Err(SeriationError::InvalidArgument("counts vector is empty".into()));
        }
        if let Some(i) = c.iter().position(|&v| v == 0) {
            return Err(SeriationError::InvalidArgument(format!("bin {i} has zero count")));
        }
        Ok(Self { c })
    }

    pub fn ones(n: usize) -> Self {
        Self { c: vec![1; n] }
    }

    pub fn counts(&self) -> &[usize] {
        &self.c
    }

    /// Number of bins `n`.
    pub fn bins(&self) -> usize {
        self.c.len()
    }

    /// Number of fragments `N`.
    pub fn total(&self) -> usize {
        self.c.iter().sum()
    }
}

/// Partition of fragment positions `0..N` into bins: `lists[i]` holds the
/// sorted positions of bin `i`'s fragments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMatrix {
    counts: DuplicationCounts,
    lists: Vec<Vec<usize>>,
}

impl AssignmentMatrix {
    pub fn new(lists: Vec<Vec<usize>>) -> Result<Self> {
        let counts = DuplicationCounts::new(lists.iter().map(Vec::len).collect())?;
        let total = counts.total();
        let mut seen = vec![false; total];
        let mut lists = lists;
        for (i, l) in lists.iter_mut().enumerate() {
            l.sort_unstable();
            for &p in l.iter() {
                if p >= total || seen[p] {
                    return Err(SeriationError::InvalidArgument(format!(
                        "bin {i}: position {p} is out of range or assigned twice"
                    )));
                }
                seen[p] = true;
            }
        }
        Ok(Self { counts, lists })
    }

    /// Fragments of each bin placed consecutively, in bin order.
    pub fn consecutive(counts: &DuplicationCounts) -> Self {
        let mut next = 0;
        let lists = counts
            .counts()
            .iter()
            .map(|&c| {
                let l: Vec<usize> = (next..next + c).collect();
                next += c;
                l
            })
            .collect();
        Self { counts: counts.clone(), lists }
    }

    /// Assignment from the bin of each position.
    pub fn from_bins(bin_of: &[usize], n: usize) -> Result<Self> {
        let mut lists = vec![Vec::new(); n];
        for (p, &b) in bin_of.iter().enumerate() {
            if b >= n {
                return Err(SeriationError::InvalidArgument(format!("bin {b} out of range for {n} bins")));
            }
            lists[b].push(p);
        }
        Self::new(lists)
    }

    pub fn counts(&self) -> &DuplicationCounts {
        &self.counts
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }

    pub fn bins(&self) -> usize {
        self.lists.len()
    }

    pub fn total(&self) -> usize {
        self.counts.total()
    }

    /// Bin of each position.
    pub fn bin_of(&self) -> Vec<usize> {
        let mut b = vec![0; self.total()];
        for (i, l) in self.lists.iter().enumerate() {
            for &p in l {
                b[p] = i;
            }
        }
        b
    }

    /// Moves the fragment at position `k` to position `perm.position(k)`.
    pub fn permuted(&self, perm: &Permutation) -> Result<Self> {
        perm.check_len(self.total())?;
        let lists = self
            .lists
            .iter()
            .map(|l| {
                let mut m: Vec<usize> = l.iter().map(|&p| perm.position(p)).collect();
                m.sort_unstable();
                m
            })
            .collect();
        Ok(Self { counts: self.counts.clone(), lists })
    }

    /// Mirror image: position `p` becomes `N − 1 − p`.
    pub fn flipped(&self) -> Self {
        let last = self.total() - 1;
        let lists = self.lists.iter().map(|l| l.iter().rev().map(|&p| last - p).collect()).collect();
        Self { counts: self.counts.clone(), lists }
    }
}

fn check_dims<T: Scalar>(z: &AssignmentMatrix, s: &DenseMatrix<T>) -> Result<()> {
    if s.n() != z.total() {
        return Err(SeriationError::DimensionMismatch { expected: z.total(), got: s.n() });
    }
    Ok(())
}

/// Spreads each bin-pair similarity evenly over its fragment pairs:
/// `S_kl = A_ij / (c_i c_j)` for `k ∈ L_i`, `l ∈ L_j`.
pub fn init_expand<T: Scalar>(a: &SimilarityMatrix<T>, z: &AssignmentMatrix) -> Result<DenseMatrix<T>> {
    if a.n() != z.bins() {
        return Err(SeriationError::DimensionMismatch { expected: z.bins(), got: a.n() });
    }
    let c = z.counts().counts();
    let bin = z.bin_of();
    let dense = a.to_dense();
    Ok(DenseMatrix::from_fn(z.total(), |k, l| {
        let (i, j) = (bin[k], bin[l]);
        dense.get(i, j) / T::of_usize(c[i] * c[j])
    }))
}

/// Bin-aggregated matrix `Z S Zᵀ`: entry `(i, j)` sums `S` over `L_i × L_j`.
pub fn compress<T: Scalar>(z: &AssignmentMatrix, s: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    check_dims(z, s)?;
    let n = z.bins();
    let bin = z.bin_of();
    let mut out = DenseMatrix::zeros(n);
    for k in 0..s.n() {
        let row = s.row(k);
        for (l, &v) in row.iter().enumerate() {
            let (i, j) = (bin[k], bin[l]);
            out.set(i, j, out.get(i, j) + v);
        }
    }
    Ok(out)
}

/// Euclidean projection of `S` onto `{S ≥ 0 : Z S Zᵀ = A}`, block by block.
pub fn project_dupli_constraints<T: Scalar>(
    s: &DenseMatrix<T>,
    z: &AssignmentMatrix,
    a: &SimilarityMatrix<T>,
) -> Result<DenseMatrix<T>> {
    check_dims(z, s)?;
    if a.n() != z.bins() {
        return Err(SeriationError::DimensionMismatch { expected: z.bins(), got: a.n() });
    }
    let mut out = s.clone();
    let lists = z.lists();
    for i in 0..lists.len() {
        for j in i..lists.len() {
            let target = a.get(i, j);
            let block: Vec<T> = lists[i].iter().flat_map(|&k| lists[j].iter().map(move |&l| s.get(k, l))).collect();
            let proj = project_sum_nonneg(&block, target)?;
            let mut it = proj.into_iter();
            for &k in &lists[i] {
                for &l in &lists[j] {
                    let v = it.next().expect("block size");
                    out.set(k, l, v);
                    if i != j {
                        out.set(l, k, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `‖Z S Zᵀ − A‖_F`.
pub fn feasibility_residual<T: Scalar>(z: &AssignmentMatrix, s: &DenseMatrix<T>, a: &SimilarityMatrix<T>) -> Result<T> {
    compress(z, s)?.frobenius_distance(&a.to_dense())
}

/// Ordering method used inside the alternating projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    Spectral,
    EtaSpectral,
    /// UBI on the Huber loss with the estimated bandwidth.
    HUbi,
}

impl InnerSolver {
    /// Ordering returned by this solver on `s`.
    pub fn order<T: Scalar>(&self, s: &SimilarityMatrix<T>) -> Result<Permutation> {
        Ok(match self {
            InnerSolver::Spectral => spectral_order(s)?.permutation,
            InnerSolver::EtaSpectral => eta_spectral(s, &EtaSpectralConfig::default())?.permutation,
            InnerSolver::HUbi => {
                let delta = T::of_usize(estimate_bandwidth(s).0);
                ubi(s, LossKind::Huber { delta }, &UbiConfig::default())?.permutation
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    FixedPoint,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct DupliReport<T> {
    pub z: AssignmentMatrix,
    pub s: DenseMatrix<T>,
    pub feasibility_residual: T,
    /// Residual after each round.
    pub residual_history: Vec<T>,
    pub iterations: usize,
    pub converged_by: StopReason,
}

/// Alternating projections between strong-R matrices (after reordering by
/// the inner solver) and the duplication constraints, starting from
/// consecutive fragments. Stops when the assignment repeats or after
/// `max_iter` rounds. Each inner ordering is taken in whichever direction
/// moves the fragments less, so a mirrored layout is not a new one.
pub fn alt_proj_dupli<T: Scalar>(
    a: &SimilarityMatrix<T>,
    counts: &DuplicationCounts,
    inner: InnerSolver,
    max_iter: usize,
    bounds: Option<&DiagonalBounds<T>>,
) -> Result<DupliReport<T>> {
    if a.n() != counts.bins() {
        return Err(SeriationError::DimensionMismatch { expected: counts.bins(), got: a.n() });
    }
    if max_iter == 0 {
        return Err(SeriationError::InvalidArgument("need at least one round".into()));
    }
    a.check_connected()?;
    let mut z = AssignmentMatrix::consecutive(counts);
    let mut s = init_expand(a, &z)?;
    let mut history = Vec::new();
    let mut converged_by = StopReason::MaxIter;
    let mut iterations = 0;
    for t in 0..max_iter {
        let round = |e: SeriationError| SeriationError::Round { round: t, source: Box::new(e) };
        let sparse = SimilarityMatrix::from_dense(&s).map_err(round)?;
        let perm = orient(inner.order(&sparse).map_err(round)?);
        let reordered = s.permuted(&perm)?;
        let half = project_strong_r(&reordered, Norm::L1, bounds)?.into_inner();
        let next_z = z.permuted(&perm)?;
        s = project_dupli_constraints(&half, &next_z, a)?;
        history.push(feasibility_residual(&next_z, &s, a)?);
        iterations = t + 1;
        let fixed = next_z == z;
        z = next_z;
        if fixed {
            converged_by = StopReason::FixedPoint;
            break;
        }
    }
    let feasibility_residual = feasibility_residual(&z, &s, a)?;
    Ok(DupliReport { z, s, feasibility_residual, residual_history: history, iterations, converged_by })
}

fn orient(perm: Permutation) -> Permutation {
    let moved = |p: &Permutation| p.positions().iter().enumerate().map(|(i, &q)| i.abs_diff(q)).sum::<usize>();
    let flipped = perm.flip();
    if moved(&flipped) < moved(&perm) {
        flipped
    } else {
        perm
    }
}

/// Summary of per-bin matched distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSummary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

/// Per bin, matches true and recovered fragment positions by minimum total
/// absolute displacement and averages the matched distances; returns the
/// mean, population standard deviation and median over bins.
pub fn mean_assignment_distance(truth: &AssignmentMatrix, out: &AssignmentMatrix) -> Result<DistanceSummary> {
    if truth.counts() != out.counts() {
        return Err(SeriationError::InvalidArgument("assignments have different counts".into()));
    }
    let per_bin: Vec<f64> = truth
        .lists()
        .iter()
        .zip(out.lists())
        .map(|(lt, lo)| {
            let cost = CostMatrix::new(DenseMatrix::from_fn(lt.len(), |a, b| lt[a].abs_diff(lo[b]) as f64))?;
            let m = linear_assignment(&cost, Sense::Min)?;
            let total: f64 = (0..lt.len()).map(|a| cost.get(a, m.position(a))).sum();
            Ok(total / lt.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(summarize(&per_bin))
}

pub(crate) fn summarize(v: &[f64]) -> DistanceSummary {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len();
    let median = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
    DistanceSummary { mean, std, median }
}

/// `min(‖S_true − S‖_F, ‖S_true − flip(S)‖_F) / ‖S_true‖_F`.
pub fn relative_distance<T: Scalar>(truth: &DenseMatrix<T>, s: &DenseMatrix<T>) -> Result<T> {
    let d = truth.frobenius_distance(s)?.min(truth.frobenius_distance(&s.flipped())?);
    Ok(d / truth.frobenius_norm())
}
