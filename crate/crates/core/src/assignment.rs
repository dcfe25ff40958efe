//! Dense linear assignment (Hungarian method with shortest augmenting paths).

use crate::error::{Result, SeriationError};
use crate::matrix::CostMatrix;
use crate::permutation::Permutation;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Optimal assignment of rows to columns. The returned permutation maps
/// row `i` to column `π(i)` (its "position").
pub fn linear_assignment<T: Scalar>(cost: &CostMatrix<T>, sense: Sense) -> Result<Permutation> {
    let n = cost.n();
    let m = cost.matrix();
    let sign = match sense {
        Sense::Min => T::one(),
        Sense::Max => -T::one(),
    };
    if n == 0 {
        return Ok(Permutation::identity(0));
    }
    let inf = T::infinity();
    // 1-based arrays with a virtual column 0 (classic e-maxx formulation).
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = inf);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = m.row(i0 - 1);
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = sign * row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            if j1 == 0 {
                return Err(SeriationError::Domain("assignment costs produced no finite path".into()));
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut forward = vec![0usize; n];
    for j in 1..=n {
        forward[p[j] - 1] = j - 1;
    }
    Permutation::new(forward)
}

/// `Σ_i C[i, π(i)]`.
pub fn assignment_cost<T: Scalar>(cost: &CostMatrix<T>, perm: &Permutation) -> Result<T> {
    perm.check_len(cost.n())?;
    Ok((0..cost.n()).map(|i| cost.get(i, perm.position(i))).sum())
}
