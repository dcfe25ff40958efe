//! FWTB: away-step Frank-Wolfe over the permutahedron cut by a tie-break
//! constraint `x_i + 1 ≤ x_j`, which removes the uninformative center.

use std::time::Instant;

use crate::error::{Result, SeriationError};
use crate::loss::{smooth_loss, smooth_loss_grad, LossKind};
use crate::matrix::SimilarityMatrix;
use crate::permutation::Permutation;
use crate::scalar::Scalar;
use crate::solvers::SolverReport;
use crate::spectral::spectral_order;

/// Exact minimizer of `gᵀπ` over permutations with `π_i + 1 ≤ π_j`.
///
/// Unconstrained, the largest `g` takes the smallest position. When that
/// violates the constraint, `i` and `j` take two adjacent positions at the
/// rank of their mean `(g_i + g_j)/2` among the other entries, which keep
/// their sorted order.
pub fn lmo_tiebreak<T: Scalar>(g: &[T], i: usize, j: usize) -> Result<Permutation> {
    let n = g.len();
    if n < 2 || i >= n || j >= n {
        return Err(SeriationError::InvalidArgument(format!("tie-break ({i}, {j}) invalid for n = {n}")));
    }
    if i == j {
        return Err(SeriationError::InvalidArgument("tie-break needs two distinct elements".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g[b].partial_cmp(&g[a]).unwrap().then(a.cmp(&b)));
    let mut forward = vec![0usize; n];
    for (k, &e) in order.iter().enumerate() {
        forward[e] = k;
    }
    if forward[i] < forward[j] {
        return Permutation::new(forward);
    }
    let mid = (g[i] + g[j]) / T::of(2.0);
    let rest: Vec<usize> = order.into_iter().filter(|&e| e != i && e != j).collect();
    let k = rest.iter().position(|&e| g[e] < mid).unwrap_or(n - 2);
    for (r, &e) in rest.iter().enumerate() {
        forward[e] = if r < k { r } else { r + 2 };
    }
    forward[i] = k;
    forward[j] = k + 1;
    Permutation::new(forward)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// `(i, j) = (0, n−1)`.
    Naive,
    /// The first and last elements of the spectral ordering.
    SpectralInit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwtbConfig<T> {
    pub tiebreak: TieBreak,
    pub max_iter: usize,
    /// Stop once the Frank-Wolfe gap is below `tol·max(1, f)`.
    pub tol: T,
}

impl<T: Scalar> Default for FwtbConfig<T> {
    fn default() -> Self {
        Self { tiebreak: TieBreak::Naive, max_iter: 1000, tol: T::of(1e-6) }
    }
}

/// Weight below which an active vertex is dropped.
const PRUNE: f64 = 1e-12;

struct Active<T> {
    vertex: Vec<T>,
    weight: T,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Minimizes `f(x + γd)` over `γ ∈ [0, γ_max]`.
fn line_search<T: Scalar>(
    a: &SimilarityMatrix<T>,
    kind: LossKind<T>,
    x: &[T],
    d: &[T],
    slope: T,
    gmax: T,
) -> Result<T> {
    match kind {
        LossKind::TwoSum => {
            // f(x + γd) = f(x) + γ·slope + γ²·f(d).
            let curv = smooth_loss(a, d, kind)?;
            if curv <= T::zero() {
                return Ok(gmax);
            }
            Ok((-slope / (T::of(2.0) * curv)).max(T::zero()).min(gmax))
        }
        _ => {
            let mut g = vec![T::zero(); x.len()];
            let mut deriv = |s: T| -> Result<T> {
                let y: Vec<T> = x.iter().zip(d).map(|(&xi, &di)| xi + s * di).collect();
                smooth_loss_grad(a, &y, kind, &mut g)?;
                Ok(dot(&g, d))
            };
            if deriv(gmax)? <= T::zero() {
                return Ok(gmax);
            }
            let (mut lo, mut hi) = (T::zero(), gmax);
            for _ in 0..60 {
                let m = (lo + hi) / T::of(2.0);
                if deriv(m)? > T::zero() {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            Ok(lo)
        }
    }
}

/// Away-step Frank-Wolfe on the smooth 2-SUM or HuberSUM objective; the
/// final permutation sorts the relaxed iterate. The trace holds the relaxed
/// objective per iteration.
pub fn fwtb<T: Scalar>(a: &SimilarityMatrix<T>, kind: LossKind<T>, cfg: &FwtbConfig<T>) -> Result<SolverReport<T>> {
    if matches!(kind, LossKind::R2Sum { .. }) {
        return Err(SeriationError::InvalidArgument("FWTB needs the 2-SUM or Huber loss".into()));
    }
    kind.validate()?;
    let n = a.n();
    if n < 2 {
        return Err(SeriationError::InvalidArgument("need at least two elements".into()));
    }
    let started = Instant::now();
    let (ti, tj) = match cfg.tiebreak {
        TieBreak::Naive => (0, n - 1),
        TieBreak::SpectralInit => {
            let s = spectral_order(a)?.permutation;
            (s.element_at(0), s.element_at(n - 1))
        }
    };
    let start = lmo_tiebreak(&vec![T::zero(); n], ti, tj)?.as_real::<T>();
    let mut x = start.clone();
    let mut active = vec![Active { vertex: start, weight: T::one() }];
    let mut grad = vec![T::zero(); n];
    let mut f = smooth_loss_grad(a, &x, kind, &mut grad)?;
    let mut trace = vec![(0, f)];
    let mut iterations = 0;
    let prune = T::of(PRUNE);
    for it in 1..=cfg.max_iter {
        let s = lmo_tiebreak(&grad, ti, tj)?.as_real::<T>();
        let d_fw: Vec<T> = s.iter().zip(&x).map(|(&v, &xi)| v - xi).collect();
        let gap = -dot(&grad, &d_fw);
        if gap <= cfg.tol * f.abs().max(T::one()) {
            break;
        }
        let (away, away_val) = active
            .iter()
            .enumerate()
            .map(|(k, v)| (k, dot(&grad, &v.vertex)))
            .fold((0, T::neg_infinity()), |acc, c| if c.1 > acc.1 { c } else { acc });
        let d_away: Vec<T> = x.iter().zip(&active[away].vertex).map(|(&xi, &v)| xi - v).collect();
        let away_gap = away_val - dot(&grad, &x);
        let use_fw = gap >= away_gap || active.len() == 1;
        let (d, gmax) = if use_fw {
            (d_fw, T::one())
        } else {
            let w = active[away].weight;
            (d_away, w / (T::one() - w))
        };
        let slope = dot(&grad, &d);
        let step = line_search(a, kind, &x, &d, slope, gmax)?;
        if step <= T::zero() {
            break;
        }
        if use_fw {
            for v in active.iter_mut() {
                v.weight *= T::one() - step;
            }
            match active.iter_mut().find(|v| v.vertex == s) {
                Some(v) => v.weight += step,
                None => active.push(Active { vertex: s, weight: step }),
            }
        } else {
            for v in active.iter_mut() {
                v.weight *= T::one() + step;
            }
            active[away].weight -= step;
        }
        active.retain(|v| v.weight > prune);
        let total: T = active.iter().map(|v| v.weight).sum();
        active.iter_mut().for_each(|v| v.weight /= total);
        x.iter_mut().zip(&d).for_each(|(xi, &di)| *xi += step * di);
        f = smooth_loss_grad(a, &x, kind, &mut grad)?;
        iterations = it;
        trace.push((it, f));
    }
    let perm = Permutation::argsort(&x);
    SolverReport::finish(a, perm, kind, trace, iterations, started)
}
