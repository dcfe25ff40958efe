//! Projections onto strong-Robinson matrices and onto the nonnegative
//! fixed-sum slice.
//!
//! A strong-Robinson (strong-R) matrix has every entry on diagonal `d+1`
//! no larger than every entry on diagonal `d`. Such matrices are exactly
//! those admitting levels `λ_0 ≥ λ_1 ≥ … ≥ λ_n = 0` with each entry of
//! diagonal `d` inside `[λ_{d+1}, λ_d]`. For fixed levels the best entries
//! are clamps of the input, so the projection reduces to a separable convex
//! problem in the levels under a monotonicity chain, which pool-adjacent-
//! violators solves exactly.

use crate::error::{Result, SeriationError};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Dense symmetric matrix certified strong-R.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongRMatrix<T> {
    m: DenseMatrix<T>,
}

impl<T: Scalar> StrongRMatrix<T> {
    pub fn new(m: DenseMatrix<T>, tol: T) -> Result<Self> {
        if !is_strong_r(&m, tol)? {
            return Err(SeriationError::Domain("matrix is not strong-Robinson".into()));
        }
        Ok(Self { m })
    }

    pub(crate) fn new_unchecked(m: DenseMatrix<T>) -> Self {
        Self { m }
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.m
    }

    pub fn into_inner(self) -> DenseMatrix<T> {
        self.m
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }
}

/// Upper bounds `b_k` on the diagonal levels `λ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalBounds<T> {
    b: Vec<T>,
}

impl<T: Scalar> DiagonalBounds<T> {
    pub fn new(b: Vec<T>) -> Result<Self> {
        if b.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(SeriationError::InvalidArgument("bounds must be finite and nonnegative".into()));
        }
        if b.windows(2).any(|w| w[1] > w[0]) {
            return Err(SeriationError::InvalidArgument("bounds must be nonincreasing".into()));
        }
        Ok(Self { b })
    }

    /// `b_0 = 1`, `b_k = k^{−γ}`.
    pub fn power_law(n: usize, gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) {
            return Err(SeriationError::InvalidArgument(format!("exponent must be positive, got {gamma}")));
        }
        Self::new((0..n).map(|k| if k == 0 { T::one() } else { T::of_usize(k).powf(-gamma) }).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// Entrywise absolute deviation.
    L1,
    /// Frobenius.
    L2,
}

/// Per-diagonal `(min, max)`.
fn diagonal_ranges<T: Scalar>(m: &DenseMatrix<T>) -> Vec<(T, T)> {
    let n = m.n();
    (0..n)
        .map(|d| {
            (0..n - d).fold((T::infinity(), T::neg_infinity()), |(lo, hi), i| {
                let v = m.get(i, i + d);
                (lo.min(v), hi.max(v))
            })
        })
        .collect()
}

/// Whether every entry of diagonal `d+1` is at most every entry of diagonal
/// `d`, within `tol`.
pub fn is_strong_r<T: Scalar>(m: &DenseMatrix<T>, tol: T) -> Result<bool> {
    m.check_symmetric(tol)?;
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(SeriationError::Domain("matrix has non-finite entries".into()));
    }
    let r = diagonal_ranges(m);
    Ok(r.windows(2).all(|w| w[1].1 <= w[0].0 + tol))
}

/// One penalty term of the level problem: an entry `s` with weight `w`,
/// charged when the level is below `s` (`upper`) or above it.
#[derive(Debug, Clone, Copy)]
struct Term<T> {
    s: T,
    w: T,
    upper: bool,
}

struct Block<T> {
    terms: Vec<Term<T>>,
    cap: T,
    len: usize,
    value: T,
}

fn merge_sorted<T: Scalar>(a: Vec<Term<T>>, b: Vec<Term<T>>) -> Vec<Term<T>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].s <= b[j].s {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Minimizer over `[0, cap]` of the block cost; terms sorted by `s`.
/// For l1 the largest minimizer is returned.
fn block_argmin<T: Scalar>(terms: &[Term<T>], cap: T, norm: Norm) -> T {
    match norm {
        Norm::L1 => {
            // Right derivative: −Σ_{upper, s > λ} w + Σ_{lower, s ≤ λ} w.
            let mut slope = -terms.iter().filter(|t| t.upper && t.s > T::zero()).map(|t| t.w).sum::<T>()
                + terms.iter().filter(|t| !t.upper && t.s <= T::zero()).map(|t| t.w).sum::<T>();
            let mut k = 0;
            while k < terms.len() && terms[k].s <= T::zero() {
                k += 1;
            }
            let next = |k: usize| if k < terms.len() { terms[k].s.min(cap) } else { cap };
            if slope > T::zero() {
                return T::zero();
            }
            if slope == T::zero() {
                return next(k);
            }
            while k < terms.len() && terms[k].s < cap {
                let s = terms[k].s;
                while k < terms.len() && terms[k].s == s {
                    slope += terms[k].w;
                    k += 1;
                }
                if slope > T::zero() {
                    return s;
                }
                if slope == T::zero() {
                    return next(k);
                }
            }
            cap
        }
        Norm::L2 => {
            // Derivative/2 is Σ_active w(λ − s), active = upper with s > λ or lower with s < λ.
            // Sweep segments between consecutive breakpoints.
            let (mut wu, mut su) = (T::zero(), T::zero());
            for t in terms.iter().filter(|t| t.upper) {
                wu += t.w;
                su += t.w * t.s;
            }
            let (mut wl, mut sl) = (T::zero(), T::zero());
            let mut lo = T::zero();
            let mut k = 0;
            // Terms at or below 0: uppers there are inactive, lowers active.
            while k < terms.len() && terms[k].s <= lo {
                let t = terms[k];
                if t.upper {
                    wu -= t.w;
                    su -= t.w * t.s;
                } else {
                    wl += t.w;
                    sl += t.w * t.s;
                }
                k += 1;
            }
            loop {
                let hi = if k < terms.len() { terms[k].s.min(cap) } else { cap };
                let wsum = wu + wl;
                let deriv_hi = wsum * hi - (su + sl);
                if deriv_hi >= T::zero() {
                    let deriv_lo = wsum * lo - (su + sl);
                    if deriv_lo >= T::zero() || wsum == T::zero() {
                        return lo;
                    }
                    return ((su + sl) / wsum).max(lo).min(hi);
                }
                if hi >= cap {
                    return cap;
                }
                lo = hi;
                while k < terms.len() && terms[k].s <= lo {
                    let t = terms[k];
                    if t.upper {
                        wu -= t.w;
                        su -= t.w * t.s;
                    } else {
                        wl += t.w;
                        sl += t.w * t.s;
                    }
                    k += 1;
                }
            }
        }
    }
}

/// Optimal nonincreasing levels `λ_0..λ_{n−1}` for `s`.
fn optimal_levels<T: Scalar>(s: &DenseMatrix<T>, norm: Norm, bounds: Option<&DiagonalBounds<T>>) -> Result<Vec<T>> {
    let n = s.n();
    let max_s = s.as_slice().iter().fold(T::zero(), |a, &b| a.max(b));
    let two = T::of(2.0);
    let mut stack: Vec<Block<T>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut terms = Vec::with_capacity(2 * (n - k) + 2);
        let w_here = if k == 0 { T::one() } else { two };
        for i in 0..n - k {
            terms.push(Term { s: s.get(i, i + k), w: w_here, upper: true });
        }
        if k > 0 {
            let w_prev = if k == 1 { T::one() } else { two };
            for i in 0..=n - k {
                terms.push(Term { s: s.get(i, i + k - 1), w: w_prev, upper: false });
            }
        }
        terms.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
        let mut cap = max_s;
        if let Some(b) = bounds {
            if let Some(&bk) = b.values().get(k) {
                cap = cap.min(bk);
            }
        }
        let value = block_argmin(&terms, cap, norm);
        let mut block = Block { terms, cap, len: 1, value };
        while let Some(prev) = stack.last() {
            if prev.value >= block.value {
                break;
            }
            let prev = stack.pop().expect("checked nonempty");
            let terms = merge_sorted(prev.terms, block.terms);
            let cap = prev.cap.min(block.cap);
            let value = block_argmin(&terms, cap, norm);
            block = Block { terms, cap, len: prev.len + block.len, value };
        }
        stack.push(block);
    }
    let mut levels = Vec::with_capacity(n);
    for b in &stack {
        levels.extend(std::iter::repeat_n(b.value, b.len));
    }
    Ok(levels)
}

fn check_input<T: Scalar>(s: &DenseMatrix<T>) -> Result<()> {
    if s.as_slice().iter().any(|v| v.is_nan()) {
        return Err(SeriationError::Domain("matrix has NaN entries".into()));
    }
    if s.as_slice().iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return Err(SeriationError::Domain("matrix entries must be finite and nonnegative".into()));
    }
    s.check_symmetric(T::zero())
}

/// Nearest strong-R matrix to `s` in the entrywise l1 or Frobenius norm,
/// optionally with per-diagonal level bounds. The main-diagonal level is
/// capped at `max(s)` (or `b_0`).
pub fn project_strong_r<T: Scalar>(
    s: &DenseMatrix<T>,
    norm: Norm,
    bounds: Option<&DiagonalBounds<T>>,
) -> Result<StrongRMatrix<T>> {
    check_input(s)?;
    let n = s.n();
    if n == 0 {
        return Ok(StrongRMatrix::new_unchecked(s.clone()));
    }
    let levels = optimal_levels(s, norm, bounds)?;
    let r = DenseMatrix::from_fn(n, |i, j| {
        let d = i.abs_diff(j);
        let lo = if d + 1 < n { levels[d + 1] } else { T::zero() };
        s.get(i, j).max(lo).min(levels[d])
    });
    Ok(StrongRMatrix::new_unchecked(r))
}

/// Frobenius distance from `m` to the strong-R matrices.
pub fn dist_to_strong_r<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    let p = project_strong_r(m, Norm::L2, None)?;
    m.frobenius_distance(p.matrix())
}

/// Euclidean projection of `s` onto `{x ≥ 0, Σx = a}`: sort descending,
/// grow the prefix while its uniformly shifted entries stay nonnegative,
/// shift that prefix and zero the rest.
pub fn project_sum_nonneg<T: Scalar>(s: &[T], a: T) -> Result<Vec<T>> {
    if !(a >= T::zero()) || !a.is_finite() {
        return Err(SeriationError::Domain(format!("target sum must be finite and nonnegative, got {a}")));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(SeriationError::Domain("input must be finite".into()));
    }
    let n = s.len();
    if n == 0 {
        return Err(SeriationError::InvalidArgument("cannot project an empty vector".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s[y].partial_cmp(&s[x]).unwrap().then(x.cmp(&y)));
    let mut prefix = T::zero();
    let mut shift = a - s[order[0]];
    let mut kept = 1;
    for (k, &e) in order.iter().enumerate() {
        prefix += s[e];
        let t = (a - prefix) / T::of_usize(k + 1);
        if s[e] + t < T::zero() {
            break;
        }
        shift = t;
        kept = k + 1;
    }
    let mut x = vec![T::zero(); n];
    for &e in &order[..kept] {
        x[e] = (s[e] + shift).max(T::zero());
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn band(n: usize, delta: usize) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(n, |i, j| if i.abs_diff(j) <= delta { 1.0 } else { 0.0 })
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, binary: bool) -> DenseMatrix<f64> {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = if binary { rng.gen_range(0..2) as f64 } else { rng.gen_range(0.0..3.0) };
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    fn cost(s: &DenseMatrix<f64>, r: &DenseMatrix<f64>, norm: Norm) -> f64 {
        s.as_slice()
            .iter()
            .zip(r.as_slice())
            .map(|(a, b)| match norm {
                Norm::L1 => (a - b).abs(),
                Norm::L2 => (a - b).powi(2),
            })
            .sum()
    }

    fn clamp_to_levels(s: &DenseMatrix<f64>, levels: &[f64]) -> DenseMatrix<f64> {
        let n = s.n();
        DenseMatrix::from_fn(n, |i, j| {
            let d = i.abs_diff(j);
            let lo = if d + 1 < n { levels[d + 1] } else { 0.0 };
            s.get(i, j).max(lo).min(levels[d])
        })
    }

    /// Exhaustive search over nonincreasing levels drawn from the entry values.
    fn l1_oracle(s: &DenseMatrix<f64>, caps: &[f64]) -> f64 {
        let n = s.n();
        let mut grid: Vec<f64> = s.as_slice().to_vec();
        grid.push(0.0);
        grid.extend_from_slice(caps);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        let mut best = f64::INFINITY;
        let mut levels = vec![0.0; n];
        fn rec(k: usize, levels: &mut Vec<f64>, grid: &[f64], caps: &[f64], s: &DenseMatrix<f64>, best: &mut f64) {
            let n = levels.len();
            if k == n {
                *best = best.min(cost(s, &clamp_to_levels(s, levels), Norm::L1));
                return;
            }
            for &g in grid {
                if g > caps[k] || (k > 0 && g > levels[k - 1]) {
                    continue;
                }
                levels[k] = g;
                rec(k + 1, levels, grid, caps, s, best);
            }
        }
        rec(0, &mut levels, &grid, caps, s, &mut best);
        best
    }

    /// Enumerates every split of the levels into constant runs, solves each
    /// run by bisection on its derivative, and keeps the best monotone one.
    fn l2_oracle(s: &DenseMatrix<f64>, caps: &[f64]) -> DenseMatrix<f64> {
        let n = s.n();
        let run_cost_deriv = |lo: usize, hi: usize, v: f64| -> f64 {
            let mut d = 0.0;
            for k in lo..hi {
                for i in 0..n - k {
                    let e = s.get(i, i + k);
                    let w = if k == 0 { 1.0 } else { 2.0 };
                    if e > v {
                        d -= 2.0 * w * (e - v);
                    }
                }
                if k > 0 {
                    for i in 0..=n - k {
                        let e = s.get(i, i + k - 1);
                        let w = if k == 1 { 1.0 } else { 2.0 };
                        if e < v {
                            d += 2.0 * w * (v - e);
                        }
                    }
                }
            }
            d
        };
        let mut best = (f64::INFINITY, DenseMatrix::zeros(n));
        for mask in 0..(1u32 << (n - 1)) {
            let mut levels = vec![0.0; n];
            let mut start = 0;
            for k in 0..n {
                if k == n - 1 || mask & (1 << k) != 0 {
                    let cap = caps[start..=k].iter().copied().fold(f64::INFINITY, f64::min);
                    let (mut lo, mut hi) = (0.0, cap);
                    if run_cost_deriv(start, k + 1, 0.0) >= 0.0 {
                        hi = 0.0;
                    } else if run_cost_deriv(start, k + 1, cap) <= 0.0 {
                        lo = cap;
                    }
                    for _ in 0..200 {
                        let m = 0.5 * (lo + hi);
                        if run_cost_deriv(start, k + 1, m) > 0.0 {
                            hi = m;
                        } else {
                            lo = m;
                        }
                    }
                    levels[start..=k].iter_mut().for_each(|l| *l = 0.5 * (lo + hi));
                    start = k + 1;
                }
            }
            if levels.windows(2).any(|w| w[1] > w[0]) {
                continue;
            }
            let r = clamp_to_levels(s, &levels);
            let c = cost(s, &r, Norm::L2);
            if c < best.0 {
                best = (c, r);
            }
        }
        best.1
    }

    #[test]
    fn strong_r_examples() {
        assert!(is_strong_r(&band(8, 2), 0.0).unwrap());
        let toe = DenseMatrix::from_fn(8, |i, j| if i == j { 1.0 } else { (i.abs_diff(j) as f64).powf(-0.5) });
        assert!(is_strong_r(&toe, 0.0).unwrap());
        let mut m = band(8, 2);
        m.set(0, 6, 1.0);
        m.set(6, 0, 1.0);
        assert!(!is_strong_r(&m, 0.0).unwrap());
        m.set(0, 6, 0.5);
        assert!(is_strong_r(&m, 0.0).is_err());
    }

    #[test]
    fn feasible_input_is_fixed() {
        for norm in [Norm::L1, Norm::L2] {
            let b = band(10, 3);
            assert_eq!(project_strong_r(&b, norm, None).unwrap().matrix(), &b);
        }
        assert_eq!(dist_to_strong_r(&band(10, 3)).unwrap(), 0.0);
    }

    #[test]
    fn matches_oracles_on_small_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..100 {
            let s = random_symmetric(&mut rng, 4, false);
            let max_s = s.as_slice().iter().copied().fold(0.0, f64::max);
            let bounds: Option<DiagonalBounds<f64>> =
                if trial % 3 == 0 { Some(DiagonalBounds::power_law(4, 0.7).unwrap()) } else { None };
            let caps: Vec<f64> = (0..4).map(|k| bounds.as_ref().map_or(max_s, |b| b.values()[k].min(max_s))).collect();
            let p1 = project_strong_r(&s, Norm::L1, bounds.as_ref()).unwrap();
            let c1 = cost(&s, p1.matrix(), Norm::L1);
            assert!((c1 - l1_oracle(&s, &caps)).abs() <= 1e-9, "trial {trial}");
            let p2 = project_strong_r(&s, Norm::L2, bounds.as_ref()).unwrap();
            assert!(p2.matrix().max_abs_diff(&l2_oracle(&s, &caps)) <= 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn outputs_are_strong_r_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.gen_range(2..15);
            let s = random_symmetric(&mut rng, n, false);
            let b = DiagonalBounds::power_law(n, 0.5).unwrap();
            for norm in [Norm::L1, Norm::L2] {
                for bounds in [None, Some(&b)] {
                    let p = project_strong_r(&s, norm, bounds).unwrap();
                    assert!(is_strong_r(p.matrix(), 1e-9).unwrap());
                    if let Some(b) = bounds {
                        for i in 0..n {
                            for j in 0..n {
                                assert!(p.matrix().get(i, j) <= b.values()[i.abs_diff(j)] + 1e-12);
                            }
                        }
                    }
                    let again = project_strong_r(p.matrix(), norm, bounds).unwrap();
                    assert!(again.matrix().max_abs_diff(p.matrix()) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn l2_projection_is_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(2..12);
            let s1 = random_symmetric(&mut rng, n, false);
            let s2 = random_symmetric(&mut rng, n, false);
            let p1 = project_strong_r(&s1, Norm::L2, None).unwrap();
            let p2 = project_strong_r(&s2, Norm::L2, None).unwrap();
            let lhs = p1.matrix().frobenius_distance(p2.matrix()).unwrap();
            assert!(lhs <= s1.frobenius_distance(&s2).unwrap() + 1e-12);
        }
    }

    #[test]
    fn binary_input_has_binary_l1_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.gen_range(2..=20);
            let s = random_symmetric(&mut rng, n, true);
            let p = project_strong_r(&s, Norm::L1, None).unwrap();
            assert!(p.matrix().as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut m = band(3, 1);
        m.set(0, 0, -1.0);
        assert!(project_strong_r(&m, Norm::L1, None).is_err());
        m.set(0, 0, f64::NAN);
        assert!(project_strong_r(&m, Norm::L2, None).is_err());
        assert!(DiagonalBounds::new(vec![1.0, 2.0]).is_err());
    }

    fn bisection_oracle(s: &[f64], a: f64) -> Vec<f64> {
        let total = |t: f64| s.iter().map(|&v| (v - t).max(0.0)).sum::<f64>();
        let mx = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut lo, mut hi) = (mx - a - 1.0, mx);
        while total(lo) < a {
            lo -= (hi - lo).max(1.0);
        }
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if total(m) > a {
                lo = m;
            } else {
                hi = m;
            }
        }
        let t = 0.5 * (lo + hi);
        s.iter().map(|&v| (v - t).max(0.0)).collect()
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(project_sum_nonneg(&[1.0, 2.0, 3.0], 6.0).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(project_sum_nonneg(&[0.0, 0.0], 2.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(project_sum_nonneg(&[3.0, 1.0], 2.0).unwrap(), vec![2.0, 0.0]);
        assert!(project_sum_nonneg(&[1.0], -1.0).is_err());
        assert_eq!(project_sum_nonneg(&[5.0, 5.0, 1.0], 0.0).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn simplex_matches_bisection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.gen_range(1..30);
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..5.0)).collect();
            let a = rng.gen_range(0.0..20.0);
            let x = project_sum_nonneg(&s, a).unwrap();
            let o = bisection_oracle(&s, a);
            assert!(x.iter().all(|&v| v >= 0.0));
            assert!((x.iter().sum::<f64>() - a).abs() <= 1e-10 * a.max(1.0));
            for (p, q) in x.iter().zip(&o) {
                assert!((p - q).abs() <= 1e-9, "{x:?} vs {o:?}");
            }
            let again = project_sum_nonneg(&x, a).unwrap();
            for (p, q) in x.iter().zip(&again) {
                assert!((p - q).abs() <= 1e-12);
            }
        }
    }
}
