//! Kendall rank correlation between two position vectors.

use crate::error::{Result, SeriationError};
use crate::permutation::Permutation;

/// Kendall-τ between the position vectors of `a` and `b`, in O(n log n).
///
/// With `flip_invariant` the larger of `τ(a, b)` and `τ(flip(a), b)` is
/// returned; flipping negates τ, so this is `|τ|`.
pub fn kendall_tau(a: &Permutation, b: &Permutation, flip_invariant: bool) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SeriationError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Ok(1.0);
    }
    // Read b's positions in the order a ranks the elements; discordant pairs are inversions.
    let mut seq: Vec<usize> = a.order().iter().map(|&e| b.position(e)).collect();
    let mut buf = vec![0usize; n];
    let inversions = count_inversions(&mut seq, &mut buf);
    let pairs = (n as u128) * (n as u128 - 1) / 2;
    let tau = 1.0 - 2.0 * (inversions as f64) / (pairs as f64);
    Ok(if flip_invariant { tau.abs() } else { tau })
}

fn count_inversions(v: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left_buf, right_buf) = buf.split_at_mut(mid);
    let mut inv = {
        let (l, r) = v.split_at_mut(mid);
        count_inversions(l, left_buf) + count_inversions(r, right_buf)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    inv
}
