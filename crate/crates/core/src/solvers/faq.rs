//! FAQ: Frank-Wolfe on the doubly-stochastic relaxation of the quadratic
//! assignment objective `trace(A P B Pᵀ)` with Toeplitz `B`.

use std::time::Instant;

use crate::assignment::{linear_assignment, Sense};
use crate::error::{Result, SeriationError};
use crate::loss::{huber_unchecked, LossKind};
use crate::matrix::{CostMatrix, DenseMatrix, SimilarityMatrix};
use crate::permutation::Permutation;
use crate::scalar::Scalar;
use crate::solvers::SolverReport;

/// Toeplitz position-gap matrix `B_ij = φ(|i − j|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QapKind<T> {
    /// `|i − j|²`
    TwoSumB,
    /// `min(λ, |i − j|²)`
    TruncatedB(T),
    /// `h_δ(|i − j|)`
    HuberB(T),
}

impl<T: Scalar> QapKind<T> {
    /// The seriation loss whose value equals the QAP objective at a permutation.
    pub fn loss_kind(&self) -> LossKind<T> {
        match *self {
            QapKind::TwoSumB => LossKind::TwoSum,
            QapKind::TruncatedB(lambda) => LossKind::R2Sum { lambda },
            QapKind::HuberB(delta) => LossKind::Huber { delta },
        }
    }

    /// `φ(0), …, φ(n−1)`.
    pub fn profile(&self, n: usize) -> Vec<T> {
        (0..n)
            .map(|d| {
                let d = T::of_usize(d);
                match *self {
                    QapKind::TwoSumB => d * d,
                    QapKind::TruncatedB(lambda) => (d * d).min(lambda),
                    QapKind::HuberB(delta) => huber_unchecked(d, delta),
                }
            })
            .collect()
    }

    pub fn matrix(&self, n: usize) -> DenseMatrix<T> {
        let phi = self.profile(n);
        DenseMatrix::from_fn(n, |i, j| phi[i.abs_diff(j)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaqConfig<T> {
    pub max_iter: usize,
    /// Stop once the Frank-Wolfe gap is below `tol·max(1, |f|)`.
    pub tol: T,
}

impl<T: Scalar> Default for FaqConfig<T> {
    fn default() -> Self {
        Self { max_iter: 300, tol: T::of(1e-6) }
    }
}

/// `A Q B` for a permutation matrix `Q` (row `j` of `Q` has its one at
/// column `q(j)`), using the sparsity of `A` and the Toeplitz profile of `B`.
fn a_perm_b<T: Scalar>(a: &SimilarityMatrix<T>, q: &Permutation, phi: &[T], out: &mut DenseMatrix<T>) {
    let n = a.n();
    for i in 0..n {
        let row = out.row_mut(i);
        row.iter_mut().for_each(|x| *x = T::zero());
        for (j, v) in a.row(i) {
            let k = q.position(j);
            for (l, r) in row.iter_mut().enumerate() {
                *r += v * phi[k.abs_diff(l)];
            }
        }
    }
}

fn inner<T: Scalar>(x: &DenseMatrix<T>, y: &DenseMatrix<T>) -> T {
    x.as_slice().iter().zip(y.as_slice()).map(|(&a, &b)| a * b).sum()
}

fn perm_inner<T: Scalar>(m: &DenseMatrix<T>, q: &Permutation) -> T {
    (0..m.n()).map(|i| m.get(i, q.position(i))).sum()
}

/// Runs FAQ, calling `observe(iteration, &P)` on every iterate including the
/// barycenter start.
pub fn faq_observed<T, F>(
    a: &SimilarityMatrix<T>,
    kind: QapKind<T>,
    cfg: &FaqConfig<T>,
    mut observe: F,
) -> Result<SolverReport<T>>
where
    T: Scalar,
    F: FnMut(usize, &DenseMatrix<T>),
{
    let n = a.n();
    if n < 2 {
        return Err(SeriationError::InvalidArgument("need at least two elements".into()));
    }
    let loss_kind = kind.loss_kind();
    loss_kind.validate()?;
    let started = Instant::now();
    let phi = kind.profile(n);
    let inv_n = T::one() / T::of_usize(n);

    let mut p = DenseMatrix::from_fn(n, |_, _| inv_n);
    // M = A P B; at the barycenter this is (A·1)(1ᵀB)/n.
    let deg = a.degrees();
    let bcol: Vec<T> = (0..n).map(|l| (0..n).map(|k| phi[k.abs_diff(l)]).sum()).collect();
    let mut m = DenseMatrix::from_fn(n, |i, l| deg[i] * bcol[l] * inv_n);
    let mut mq = DenseMatrix::zeros(n);
    let mut f = inner(&m, &p);
    let mut trace = vec![(0, f)];
    observe(0, &p);
    let two = T::of(2.0);
    let mut iterations = 0;
    for it in 1..=cfg.max_iter {
        let grad = CostMatrix::new(DenseMatrix::from_fn(n, |i, j| two * m.get(i, j)))?;
        let q = linear_assignment(&grad, Sense::Min)?;
        a_perm_b(a, &q, &phi, &mut mq);
        let f_q = perm_inner(&mq, &q);
        let cross = inner(&mq, &p);
        // ⟨G, Q − P⟩ and the curvature along D = Q − P.
        let b = two * (cross - f);
        let gap = -b;
        if gap <= cfg.tol * f.abs().max(T::one()) {
            break;
        }
        let curv = f_q - two * cross + f;
        let step = if curv <= T::zero() { T::one() } else { (-b / (two * curv)).max(T::zero()).min(T::one()) };
        let keep = T::one() - step;
        for (x, y) in p.as_slice_mut().iter_mut().enumerate() {
            let (i, j) = (x / n, x % n);
            *y = keep * *y + if q.position(i) == j { step } else { T::zero() };
        }
        for (x, &y) in m.as_slice_mut().iter_mut().zip(mq.as_slice()) {
            *x = keep * *x + step * y;
        }
        f = inner(&m, &p);
        iterations = it;
        trace.push((it, f));
        observe(it, &p);
    }
    let rounded = linear_assignment(&CostMatrix::new(p)?, Sense::Max)?;
    SolverReport::finish(a, rounded, loss_kind, trace, iterations, started)
}

/// FAQ from the barycenter `J/n`; the trace holds the relaxed objective,
/// which exact line search keeps nonincreasing.
pub fn faq<T: Scalar>(a: &SimilarityMatrix<T>, kind: QapKind<T>, cfg: &FaqConfig<T>) -> Result<SolverReport<T>> {
    faq_observed(a, kind, cfg, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::loss;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_band(rng: &mut ChaCha8Rng, n: usize, delta: usize, extra: usize) -> SimilarityMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..(i + delta + 1).min(n) {
                t.push((i, j, 1.0));
            }
        }
        for _ in 0..extra {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i.abs_diff(j) > delta {
                t.push((i.min(j), i.max(j), 1.0));
            }
        }
        t.sort_by_key(|x| (x.0, x.1));
        t.dedup_by_key(|x| (x.0, x.1));
        SimilarityMatrix::from_triplets(n, t).unwrap()
    }

    #[test]
    fn qap_objective_matches_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = noisy_band(&mut rng, 15, 2, 10);
        let mut v: Vec<usize> = (0..15).collect();
        v.shuffle(&mut rng);
        let p = Permutation::new(v).unwrap();
        for kind in [QapKind::TwoSumB, QapKind::TruncatedB(4.0), QapKind::HuberB(2.0)] {
            let b = kind.matrix(15);
            let d = a.to_dense();
            let mut direct = 0.0;
            for i in 0..15 {
                for j in 0..15 {
                    direct += d.get(i, j) * b.get(p.position(i), p.position(j));
                }
            }
            let mut m = DenseMatrix::zeros(15);
            a_perm_b(&a, &p, &kind.profile(15), &mut m);
            assert!((perm_inner(&m, &p) - direct).abs() < 1e-9);
            assert!((loss(&a, &p, kind.loss_kind()).unwrap() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn iterates_stay_doubly_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = noisy_band(&mut rng, 30, 3, 20);
        let mut worst: f64 = 0.0;
        let mut min_entry: f64 = 0.0;
        let cfg = FaqConfig { max_iter: 30, tol: 0.0 };
        faq_observed(&a, QapKind::TwoSumB, &cfg, |_, p| {
            for i in 0..30 {
                let r: f64 = p.row(i).iter().sum();
                let c: f64 = (0..30).map(|k| p.get(k, i)).sum();
                worst = worst.max((r - 1.0).abs()).max((c - 1.0).abs());
                min_entry = min_entry.min(p.row(i).iter().copied().fold(f64::INFINITY, f64::min));
            }
        })
        .unwrap();
        assert!(worst <= 1e-10, "{worst}");
        assert!(min_entry >= -1e-12);
    }

    #[test]
    fn relaxed_objective_decreases_and_report_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = noisy_band(&mut rng, 40, 4, 30);
        for kind in [QapKind::TwoSumB, QapKind::TruncatedB(16.0), QapKind::HuberB(4.0)] {
            let r = faq(&a, kind, &FaqConfig::default()).unwrap();
            assert!(r.trace.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12)));
            assert_eq!(r.objective, loss(&a, &r.permutation, r.kind).unwrap());
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = noisy_band(&mut rng, 25, 3, 15);
        let r1 = faq(&a, QapKind::TwoSumB, &FaqConfig::default()).unwrap();
        let r2 = faq(&a, QapKind::TwoSumB, &FaqConfig::default()).unwrap();
        assert_eq!(r1.permutation, r2.permutation);
        assert_eq!(r1.trace, r2.trace);
    }

    #[test]
    fn clean_band_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50;
        let a = noisy_band(&mut rng, n, 4, 0);
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(&mut rng);
        let truth = Permutation::new(v).unwrap();
        let obs = a.permuted(&truth.inverse()).unwrap();
        let r = faq(&obs, QapKind::TwoSumB, &FaqConfig::default()).unwrap();
        let tau = crate::kendall::kendall_tau(&r.permutation, &truth, true).unwrap();
        assert_eq!(tau, 1.0);
    }
}
