//! Synthetic instances with hidden ground truth.
//!
//! Every generator draws from a ChaCha8 stream seeded with a `u64`, so a
//! seed reproduces the same instance on every platform.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::duplication::{compress, AssignmentMatrix, DuplicationCounts};
use crate::error::{Result, SeriationError};
use crate::matrix::{DenseMatrix, SimilarityMatrix};
use crate::permutation::Permutation;
use crate::projections::StrongRMatrix;
use crate::scalar::Scalar;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Band of ones plus sparse out-of-band ones, observed under a hidden shuffle.
#[derive(Debug, Clone)]
pub struct BandedInstance<T> {
    /// Observed matrix: element `k` sits at true position `truth.position(k)`.
    pub a: SimilarityMatrix<T>,
    pub truth: Permutation,
    pub delta: usize,
    /// Number of out-of-band symmetric pairs.
    pub s: usize,
    pub n: usize,
    pub seed: u64,
}

/// `n − δ − 1`, the out-of-band budget below which the true order still
/// minimizes the truncated objective.
pub fn s_lim(n: usize, delta: usize) -> usize {
    n.saturating_sub(delta + 1)
}

/// Number of strictly-upper slots farther than `delta` from the diagonal.
pub fn out_of_band_slots(n: usize, delta: usize) -> usize {
    let m = n.saturating_sub(delta + 1);
    m * (m + 1) / 2
}

/// Unshuffled band matrix with `s` random out-of-band pairs.
pub fn banded_sorted<T: Scalar>(n: usize, delta: usize, s: usize, rng: &mut ChaCha8Rng) -> Result<SimilarityMatrix<T>> {
    if delta >= n {
        return Err(SeriationError::InvalidArgument(format!("bandwidth {delta} must be below n = {n}")));
    }
    let slots = out_of_band_slots(n, delta);
    if s > slots {
        return Err(SeriationError::InvalidArgument(format!(
            "{s} out-of-band pairs requested but only {slots} slots exist"
        )));
    }
    let mut t = Vec::with_capacity(n * (delta + 1) + s);
    for i in 0..n {
        for j in i..(i + delta + 1).min(n) {
            t.push((i, j, T::one()));
        }
    }
    let mut picks = index::sample(rng, slots, s).into_vec();
    picks.sort_unstable();
    // Slots are enumerated gap by gap: gap g = δ+1.. holds n−g pairs (i, i+g).
    let mut gap = delta + 1;
    let mut base = 0usize;
    for idx in picks {
        while idx >= base + (n - gap) {
            base += n - gap;
            gap += 1;
        }
        let i = idx - base;
        t.push((i, i + gap, T::one()));
    }
    SimilarityMatrix::from_triplets(n, t)
}

fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Permutation::new(v).expect("shuffle is a bijection")
}

/// Instance of the band-plus-outliers model with
/// `s = round(s_ratio·(n − δ − 1))` out-of-band pairs, rows and columns
/// shuffled by a uniform random permutation.
pub fn gen_banded<T: Scalar>(n: usize, delta: usize, s_ratio: f64, seed: u64) -> Result<BandedInstance<T>> {
    if !(s_ratio >= 0.0) || !s_ratio.is_finite() {
        return Err(SeriationError::InvalidArgument(format!("s_ratio must be nonnegative, got {s_ratio}")));
    }
    let s = (s_ratio * s_lim(n, delta) as f64).round() as usize;
    let mut rng = rng_from_seed(seed);
    let sorted = banded_sorted::<T>(n, delta, s, &mut rng)?;
    let truth = random_permutation(n, &mut rng);
    let a = sorted.permuted(&truth.inverse())?;
    Ok(BandedInstance { a, truth, delta, s, n, seed })
}

/// Weighted variant of [`gen_banded`]: a band entry at distance `d` has
/// value `1 − d/(δ+1) + 0.25·u` and an out-of-band entry has value
/// `0.4·u'`, with `u, u'` uniform on `[0, 1)` (out-of-band values are
/// kept positive). Thresholding removes outliers before band edges.
pub fn gen_weighted_banded<T: Scalar>(n: usize, delta: usize, s_ratio: f64, seed: u64) -> Result<BandedInstance<T>> {
    let base = gen_banded::<T>(n, delta, s_ratio, seed)?;
    let mut rng = rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15);
    let step = 1.0 / (delta + 1) as f64;
    let a = base.a.map_entries(|i, j, _| {
        let d = base.truth.position(i).abs_diff(base.truth.position(j));
        let v =
            if d <= delta { 1.0 - d as f64 * step + 0.25 * rng.gen::<f64>() } else { 0.4 * (1.0 - rng.gen::<f64>()) };
        T::of(v)
    });
    Ok(BandedInstance { a, ..base })
}

/// Checks that `a`, read in its stored order, is a full band of width
/// `delta` plus exactly `s` out-of-band pairs, all entries equal to one.
pub fn is_banded_model<T: Scalar>(a: &SimilarityMatrix<T>, delta: usize, s: usize) -> bool {
    let n = a.n();
    let mut outside = 0usize;
    for &(i, j, v) in a.entries() {
        if v != T::one() {
            return false;
        }
        if j - i > delta {
            outside += 1;
        }
    }
    let inside = a.entries().len() - outside;
    let band_pairs = (0..n).map(|i| (i + delta + 1).min(n) - i).sum::<usize>();
    inside == band_pairs && outside == s
}

/// Toeplitz `S_kl = |k − l|^{−γ}` with unit diagonal.
pub fn gen_toeplitz_powerlaw<T: Scalar>(n: usize, gamma: T) -> Result<StrongRMatrix<T>> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(SeriationError::InvalidArgument(format!("exponent must be positive, got {gamma}")));
    }
    let m = DenseMatrix::from_fn(n, |k, l| {
        let d = k.abs_diff(l);
        if d == 0 {
            T::one()
        } else {
            T::of_usize(d).powf(-gamma)
        }
    });
    StrongRMatrix::new(m, T::zero())
}

/// Hidden fragment-level matrix of a duplication instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FragmentModel<T> {
    PowerLaw {
        gamma: T,
    },
    /// Band of ones of half-width `delta` plus `s` random out-of-band pairs.
    Banded {
        delta: usize,
        s: usize,
    },
}

#[derive(Debug, Clone)]
pub struct DupliInstance<T> {
    pub s_true: DenseMatrix<T>,
    pub counts: DuplicationCounts,
    pub z_true: AssignmentMatrix,
    /// Observed bin matrix `Z S Zᵀ`, possibly with noise.
    pub a: SimilarityMatrix<T>,
    pub noise_prop: T,
    pub seed: u64,
}

/// Duplication instance with `N` fragments and `n = round(N/ratio)` bins.
///
/// Every bin gets one fragment and each of the `N − n` extra fragments
/// goes to a uniformly random bin; fragment positions are then shuffled.
/// With `noise_prop = p > 0` every observed entry is multiplied by
/// `1 + p·e`, `e` uniform on `[−1, 1]` (drawn once per symmetric pair), and
/// clipped at zero.
pub fn gen_dupli_instance<T: Scalar>(
    total: usize,
    ratio: f64,
    model: FragmentModel<T>,
    noise_prop: T,
    seed: u64,
) -> Result<DupliInstance<T>> {
    if !(ratio >= 1.0) || !ratio.is_finite() {
        return Err(SeriationError::InvalidArgument(format!("duplication ratio must be at least 1, got {ratio}")));
    }
    if !(noise_prop >= T::zero()) {
        return Err(SeriationError::InvalidArgument(format!("noise level must be nonnegative, got {noise_prop}")));
    }
    let n = (total as f64 / ratio).round() as usize;
    if n < 2 || n > total {
        return Err(SeriationError::InvalidArgument(format!("{total} fragments at ratio {ratio} give {n} bins")));
    }
    let mut rng = rng_from_seed(seed);
    let s_true = match model {
        FragmentModel::PowerLaw { gamma } => gen_toeplitz_powerlaw(total, gamma)?.into_inner(),
        FragmentModel::Banded { delta, s } => banded_sorted::<T>(total, delta, s, &mut rng)?.to_dense(),
    };
    let mut c = vec![1usize; n];
    for _ in 0..total - n {
        c[rng.gen_range(0..n)] += 1;
    }
    let counts = DuplicationCounts::new(c)?;
    let mut bins = AssignmentMatrix::consecutive(&counts).bin_of();
    bins.shuffle(&mut rng);
    let z_true = AssignmentMatrix::from_bins(&bins, n)?;
    let mut a = compress(&z_true, &s_true)?;
    let noisy = noise_prop > T::zero();
    for i in 0..n {
        for j in i..n {
            let mut v = a.get(i, j);
            if noisy {
                let e = T::of(rng.gen_range(-1.0..=1.0));
                v = (v * (T::one() + noise_prop * e)).max(T::zero());
            }
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    let a = SimilarityMatrix::from_dense(&a)?;
    Ok(DupliInstance { s_true, counts, z_true, a, noise_prop, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandwidth::band_count;
    use crate::projections::is_strong_r;

    #[test]
    fn weighted_band_keeps_pattern_and_orders_values() {
        let w = gen_weighted_banded::<f64>(120, 8, 2.0, 4).unwrap();
        let b = gen_banded::<f64>(120, 8, 2.0, 4).unwrap();
        assert_eq!(w.truth, b.truth);
        assert_eq!(w.a.nnz(), b.a.nnz());
        let sorted = w.a.permuted(&w.truth).unwrap();
        for &(i, j, v) in sorted.entries() {
            if j - i <= 8 {
                assert!(v >= 1.0 - 8.0 / 9.0 && v < 1.25 - (j - i) as f64 / 9.0 + 1e-12);
            } else {
                assert!(v > 0.0 && v <= 0.4);
            }
        }
        let again = gen_weighted_banded::<f64>(120, 8, 2.0, 4).unwrap();
        assert_eq!(again.a, w.a);
    }

    #[test]
    fn powerlaw_is_strong_r_toeplitz() {
        for gamma in [0.1, 0.5, 1.0, 10.0] {
            let s = gen_toeplitz_powerlaw::<f64>(30, gamma).unwrap();
            assert!(is_strong_r(s.matrix(), 0.0).unwrap());
            for d in 0..30 {
                let v = s.matrix().get(0, d);
                assert!((0..30 - d).all(|i| s.matrix().get(i, i + d) == v));
            }
        }
        let sharp = gen_toeplitz_powerlaw::<f64>(30, 10.0).unwrap();
        assert!(sharp.matrix().get(0, 5) < 1e-6);
        assert!(gen_toeplitz_powerlaw::<f64>(5, 0.0).is_err());
    }

    #[test]
    fn dupli_counts_are_valid() {
        for seed in 0..1000 {
            let inst = gen_dupli_instance::<f64>(40, 1.7, FragmentModel::PowerLaw { gamma: 0.5 }, 0.0, seed).unwrap();
            assert_eq!(inst.counts.total(), 40);
            assert_eq!(inst.counts.bins(), 24);
            assert!(inst.counts.counts().iter().all(|&c| c >= 1));
        }
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let inst = gen_dupli_instance::<f64>(60, 1.33, FragmentModel::Banded { delta: 12, s: 0 }, 0.0, 3).unwrap();
        assert_eq!(inst.counts.bins(), 45);
        assert_eq!(inst.a.to_dense(), compress(&inst.z_true, &inst.s_true).unwrap());
        let unit = gen_dupli_instance::<f64>(30, 1.0, FragmentModel::PowerLaw { gamma: 1.0 }, 0.0, 3).unwrap();
        assert!(unit.counts.counts().iter().all(|&c| c == 1));
        let noisy = gen_dupli_instance::<f64>(60, 1.33, FragmentModel::Banded { delta: 12, s: 0 }, 0.05, 3).unwrap();
        assert_ne!(noisy.a, inst.a);
        assert!(noisy.a.entries().iter().all(|e| e.2 > 0.0));
        assert!(gen_dupli_instance::<f64>(10, 8.0, FragmentModel::PowerLaw { gamma: 1.0 }, 0.0, 0).is_err());
    }

    #[test]
    fn banded_counts_and_membership() {
        for seed in 0..20 {
            let inst = gen_banded::<f64>(100, 10, 2.0, seed).unwrap();
            assert_eq!(inst.s, 178);
            assert_eq!(inst.a.nnz(), band_count(100, 10) + 2 * inst.s);
            let unshuffled = inst.a.permuted(&inst.truth).unwrap();
            assert!(is_banded_model(&unshuffled, 10, inst.s));
        }
    }

    #[test]
    fn reference_instance_size() {
        let inst = gen_banded::<f64>(200, 20, 5.0, 1).unwrap();
        assert_eq!(inst.s, 895);
        assert_eq!(inst.a.nnz(), 9570);
    }

    #[test]
    fn same_seed_same_instance() {
        let a = gen_banded::<f64>(50, 5, 3.0, 42).unwrap();
        let b = gen_banded::<f64>(50, 5, 3.0, 42).unwrap();
        assert_eq!(a.a, b.a);
        assert_eq!(a.truth, b.truth);
        let c = gen_banded::<f64>(50, 5, 3.0, 43).unwrap();
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn too_many_outliers_rejected() {
        assert!(gen_banded::<f64>(10, 3, 100.0, 0).is_err());
        assert!(gen_banded::<f64>(10, 10, 0.0, 0).is_err());
        // Filling every slot is allowed and yields the all-ones matrix.
        let slots = out_of_band_slots(10, 3);
        let mut rng = rng_from_seed(0);
        let full = banded_sorted::<f64>(10, 3, slots, &mut rng).unwrap();
        assert_eq!(full.nnz(), 100);
    }
}
