//! Bandwidth estimate from the number of stored entries.

use crate::matrix::SimilarityMatrix;
use crate::scalar::Scalar;

/// Entries in an n×n band of half-width δ (diagonal included once).
pub fn band_count(n: usize, delta: usize) -> usize {
    let d = delta.min(n.saturating_sub(1));
    n + (2 * n - 1) * d - d * d
}

/// Smallest δ ≥ 1 whose band holds at least `nnz(A)` entries, together with
/// the matching truncation level λ = δ².
pub fn estimate_bandwidth<T: Scalar>(a: &SimilarityMatrix<T>) -> (usize, T) {
    let n = a.n();
    let nnz = a.nnz();
    let max_delta = n.saturating_sub(1).max(1);
    let mut lo = 1usize;
    let mut hi = max_delta;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if band_count(n, mid) >= nnz {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    (lo, T::of_usize(lo * lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(n: usize, delta: usize) -> SimilarityMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..(i + delta + 1).min(n) {
                t.push((i, j, 1.0));
            }
        }
        SimilarityMatrix::from_triplets(n, t).unwrap()
    }

    #[test]
    fn examples() {
        let a = band(100, 10);
        assert_eq!(a.nnz(), 1990);
        assert_eq!(estimate_bandwidth(&a), (10, 100.0));

        let diag = SimilarityMatrix::from_triplets(7, (0..7).map(|i| (i, i, 1.0))).unwrap();
        assert_eq!(estimate_bandwidth(&diag).0, 1);

        // 50 extra out-of-band pairs add 100 stored entries.
        let mut t: Vec<_> = band(100, 10).entries().to_vec();
        let mut added = 0;
        'outer: for i in 0..100 {
            for j in (i + 12..100).step_by(7) {
                t.push((i, j, 1.0));
                added += 1;
                if added == 50 {
                    break 'outer;
                }
            }
        }
        let a = SimilarityMatrix::from_triplets(100, t).unwrap();
        assert_eq!(a.nnz(), 2090);
        assert_eq!(estimate_bandwidth(&a).0, 11);
    }

    #[test]
    fn band_count_is_monotone() {
        for n in 2..40 {
            for d in 1..n - 1 {
                assert!(band_count(n, d + 1) > band_count(n, d));
            }
            assert_eq!(band_count(n, n - 1), n * n);
        }
    }
}
