//! Seriation objectives: 2-SUM, truncated 2-SUM (R2SUM) and Huber-SUM.
//!
//! All objectives sum over ordered pairs `(i, j)`, so every stored
//! off-diagonal entry contributes twice. The diagonal never contributes
//! because the gap `|π_i - π_i|` is zero.

use crate::error::{Result, SeriationError};
use crate::matrix::SimilarityMatrix;
use crate::permutation::Permutation;
use crate::scalar::Scalar;

/// Huber function: `x²` for `|x| ≤ δ`, `δ(2|x| − δ)` beyond.
pub fn huber<T: Scalar>(x: T, delta: T) -> Result<T> {
    if !x.is_finite() {
        return Err(SeriationError::Domain(format!("huber argument {x} is not finite")));
    }
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(SeriationError::Domain(format!("huber width {delta} must be positive")));
    }
    Ok(huber_unchecked(x, delta))
}

#[inline]
pub(crate) fn huber_unchecked<T: Scalar>(x: T, delta: T) -> T {
    let a = x.abs();
    if a <= delta {
        a * a
    } else {
        delta * (a + a - delta)
    }
}

#[inline]
fn huber_derivative<T: Scalar>(x: T, delta: T) -> T {
    let two = T::of(2.0);
    if x.abs() <= delta {
        two * x
    } else {
        two * delta * x.signum()
    }
}

/// Which pairwise penalty an objective applies to position gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind<T> {
    /// `|π_i − π_j|²`
    TwoSum,
    /// `min(λ, |π_i − π_j|²)`
    R2Sum { lambda: T },
    /// `h_δ(|π_i − π_j|)`
    Huber { delta: T },
}

impl<T: Scalar> LossKind<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossKind::TwoSum => Ok(()),
            LossKind::R2Sum { lambda } if lambda > T::zero() && lambda.is_finite() => Ok(()),
            LossKind::R2Sum { lambda } => {
                Err(SeriationError::InvalidArgument(format!("R2SUM truncation level must be positive, got {lambda}")))
            }
            LossKind::Huber { delta } if delta >= T::one() && delta.is_finite() => Ok(()),
            LossKind::Huber { delta } => {
                Err(SeriationError::InvalidArgument(format!("Huber width must be at least 1, got {delta}")))
            }
        }
    }

    /// Penalty for a single gap `d`.
    #[inline]
    pub fn penalty(&self, d: T) -> T {
        match *self {
            LossKind::TwoSum => d * d,
            LossKind::R2Sum { lambda } => (d * d).min(lambda),
            LossKind::Huber { delta } => huber_unchecked(d, delta),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::TwoSum => "2sum",
            LossKind::R2Sum { .. } => "r2sum",
            LossKind::Huber { .. } => "huber",
        }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(SeriationError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Objective value `Σ_{i≠j} A_ij φ(|π_i − π_j|)` of an ordering.
pub fn loss<T: Scalar>(a: &SimilarityMatrix<T>, perm: &Permutation, kind: LossKind<T>) -> Result<T> {
    check_dim(a.n(), perm.len())?;
    kind.validate()?;
    let two = T::of(2.0);
    Ok(a.entries()
        .iter()
        .filter(|&&(i, j, _)| i != j)
        .map(|&(i, j, v)| {
            let d = T::of_usize(perm.position(i).abs_diff(perm.position(j)));
            two * v * kind.penalty(d)
        })
        .sum())
}

/// `xᵀ L_A x` with `L_A = diag(A·1) − A`, i.e. `Σ_{i<j} A_ij (x_i − x_j)²`.
///
/// For a permutation's position vector this is exactly half of
/// [`loss`] with [`LossKind::TwoSum`], which sums over ordered pairs.
pub fn two_sum_quadratic_form<T: Scalar>(a: &SimilarityMatrix<T>, x: &[T]) -> Result<T> {
    check_dim(a.n(), x.len())?;
    Ok(a.entries()
        .iter()
        .map(|&(i, j, v)| {
            let d = x[i] - x[j];
            v * d * d
        })
        .sum())
}

/// Continuous extension of the 2-SUM / Huber-SUM objectives to real
/// vectors, substituting `x_i − x_j` for `π_i − π_j`. Writes the gradient
/// into `grad` and returns the value.
pub fn smooth_loss_grad<T: Scalar>(a: &SimilarityMatrix<T>, x: &[T], kind: LossKind<T>, grad: &mut [T]) -> Result<T> {
    check_dim(a.n(), x.len())?;
    check_dim(a.n(), grad.len())?;
    let two = T::of(2.0);
    grad.iter_mut().for_each(|g| *g = T::zero());
    let mut value = T::zero();
    match kind {
        LossKind::TwoSum => {
            for &(i, j, v) in a.entries() {
                let d = x[i] - x[j];
                value += two * v * d * d;
                let g = two * v * (two * d);
                grad[i] += g;
                grad[j] -= g;
            }
        }
        LossKind::Huber { delta } => {
            for &(i, j, v) in a.entries() {
                let d = x[i] - x[j];
                value += two * v * huber_unchecked(d, delta);
                let g = two * v * huber_derivative(d, delta);
                grad[i] += g;
                grad[j] -= g;
            }
        }
        LossKind::R2Sum { .. } => {
            return Err(SeriationError::InvalidArgument(
                "the truncated quadratic has no smooth extension; use TwoSum or Huber".into(),
            ))
        }
    }
    Ok(value)
}

/// Value of the continuous extension without the gradient.
pub fn smooth_loss<T: Scalar>(a: &SimilarityMatrix<T>, x: &[T], kind: LossKind<T>) -> Result<T> {
    check_dim(a.n(), x.len())?;
    let two = T::of(2.0);
    match kind {
        LossKind::R2Sum { .. } => Err(SeriationError::InvalidArgument(
            "the truncated quadratic has no smooth extension; use TwoSum or Huber".into(),
        )),
        _ => Ok(a.entries().iter().map(|&(i, j, v)| two * v * kind.penalty((x[i] - x[j]).abs())).sum()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_ones3() -> SimilarityMatrix<f64> {
        SimilarityMatrix::from_triplets(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn huber_branches() {
        assert_eq!(huber(0.5, 1.0).unwrap(), 0.25);
        assert_eq!(huber(2.0, 1.0).unwrap(), 3.0);
        assert_eq!(huber(-2.0, 1.0).unwrap(), 3.0);
        let d = 2.5f64;
        assert_eq!(huber(d, d).unwrap(), d * d);
        assert_eq!(d * (2.0 * d - d), d * d);
        assert!(huber(1.0, 0.0).is_err());
        assert!(huber(f64::INFINITY, 1.0).is_err());
        assert_eq!(huber(2.0f32, 1.0).unwrap(), 3.0f32);
    }

    #[test]
    fn hand_computed_losses() {
        let a = all_ones3();
        let id = Permutation::identity(3);
        assert_eq!(loss(&a, &id, LossKind::TwoSum).unwrap(), 12.0);
        assert_eq!(loss(&a, &id, LossKind::R2Sum { lambda: 1.0 }).unwrap(), 6.0);
        assert!(loss(&a, &Permutation::identity(4), LossKind::TwoSum).is_err());
        assert!(loss(&a, &id, LossKind::Huber { delta: 0.5 }).is_err());
    }

    #[test]
    fn quadratic_form_examples() {
        let path = SimilarityMatrix::from_triplets(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(two_sum_quadratic_form(&path, &[0.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(two_sum_quadratic_form(&path, &[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert!(two_sum_quadratic_form(&path, &[0.0]).is_err());
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SimilarityMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                if rng.gen::<f64>() < density {
                    t.push((i, j, rng.gen_range(0.1..3.0)));
                }
            }
        }
        SimilarityMatrix::from_triplets(n, t).unwrap()
    }

    fn random_perm(rng: &mut ChaCha8Rng, n: usize) -> Permutation {
        use rand::seq::SliceRandom;
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(rng);
        Permutation::new(v).unwrap()
    }

    #[test]
    fn quadratic_form_matches_direct_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 5, 0.7);
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let dense = a.to_dense();
        let mut direct = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                direct += dense.get(i, j) * (x[i] - x[j]).powi(2);
            }
        }
        let qf = two_sum_quadratic_form(&a, &x).unwrap();
        assert!((2.0 * qf - direct).abs() <= 1e-12 * direct.abs());
    }

    #[test]
    fn double_sum_is_twice_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(2..=50);
            let a = random_matrix(&mut rng, n, 0.3);
            let p = random_perm(&mut rng, n);
            let l = loss(&a, &p, LossKind::TwoSum).unwrap();
            let q = two_sum_quadratic_form(&a, &p.as_real::<f64>()).unwrap();
            assert!((l - 2.0 * q).abs() <= 1e-10 * l.abs().max(1.0));
        }
    }

    #[test]
    fn losses_are_flip_invariant_and_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(2..=30);
            let a = random_matrix(&mut rng, n, 0.4);
            let p = random_perm(&mut rng, n);
            let delta: f64 = rng.gen_range(1..=5) as f64;
            let kinds = [LossKind::TwoSum, LossKind::R2Sum { lambda: delta * delta }, LossKind::Huber { delta }];
            for k in kinds {
                assert_eq!(loss(&a, &p, k).unwrap(), loss(&a, &p.flip(), k).unwrap());
            }
            let r = loss(&a, &p, kinds[1]).unwrap();
            let h = loss(&a, &p, kinds[2]).unwrap();
            let t = loss(&a, &p, kinds[0]).unwrap();
            assert!(r <= h && h <= t);
        }
    }

    #[test]
    fn smooth_extension_agrees_on_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 12, 0.5);
        let p = random_perm(&mut rng, 12);
        let x = p.as_real::<f64>();
        let mut g = vec![0.0; 12];
        for k in [LossKind::TwoSum, LossKind::Huber { delta: 3.0 }] {
            let v = smooth_loss_grad(&a, &x, k, &mut g).unwrap();
            assert!((v - loss(&a, &p, k).unwrap()).abs() < 1e-9);
            assert!((v - smooth_loss(&a, &x, k).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn smooth_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 10, 0.6);
        for kind in [LossKind::TwoSum, LossKind::Huber { delta: 1.5 }] {
            for _ in 0..20 {
                let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let mut g = vec![0.0; 10];
                smooth_loss_grad(&a, &x, kind, &mut g).unwrap();
                for k in 0..10 {
                    let h = 1e-6;
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    let fd = (smooth_loss(&a, &xp, kind).unwrap() - smooth_loss(&a, &xm, kind).unwrap()) / (2.0 * h);
                    assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0), "{fd} vs {}", g[k]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn pointwise_penalty_ordering(d in 0u32..200, delta in 1u32..30) {
            let d = d as f64;
            let delta = delta as f64;
            let r = LossKind::R2Sum { lambda: delta * delta }.penalty(d);
            let h = LossKind::Huber { delta }.penalty(d);
            let t = LossKind::<f64>::TwoSum.penalty(d);
            prop_assert!(r <= h && h <= t);
        }

        #[test]
        fn huber_is_even_and_continuous(x in -50.0f64..50.0, delta in 0.1f64..10.0) {
            prop_assert_eq!(huber(x, delta).unwrap(), huber(-x, delta).unwrap());
            let eps = 1e-9;
            let left = huber(delta - eps, delta).unwrap();
            let right = huber(delta + eps, delta).unwrap();
            prop_assert!((left - right).abs() < 1e-6);
        }
    }
}
