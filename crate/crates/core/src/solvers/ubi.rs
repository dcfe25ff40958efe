//! UBI: unconstrained biased iterations on the hyperplane of position sums.
//!
//! Each round minimizes the smooth extension of the loss over
//! `x = Uy + c` (an orthonormal parametrization of `{x : xᵀ1 = n(n−1)/2}`),
//! minus a sigmoid reward for staying on the side of the previous
//! permutation, then sorts the minimizer into the next permutation.

use std::time::Instant;

use crate::error::{Result, SeriationError};
use crate::loss::{loss, smooth_loss_grad, LossKind};
use crate::matrix::SimilarityMatrix;
use crate::permutation::Permutation;
use crate::scalar::Scalar;
use crate::solvers::lbfgs::{minimize, LbfgsConfig, Outcome};
use crate::solvers::{BestSoFar, SolverReport};
use crate::spectral::spectral_order;

/// Orthonormal basis of `1^⊥` with column `j` (1-based, `j < n`) proportional
/// to `(0, …, 0, −(n−j), 1, …, 1)`, the `−(n−j)` at index `j−1`. Products
/// with `U` and `Uᵀ` cost O(n).
#[derive(Debug, Clone)]
pub struct HyperplaneBasis<T> {
    n: usize,
    inv_norm: Vec<T>,
}

impl<T: Scalar> HyperplaneBasis<T> {
    pub fn new(n: usize) -> Self {
        let inv_norm = (1..n)
            .map(|j| {
                let m = T::of_usize(n - j);
                T::one() / (m * (m + T::one())).sqrt()
            })
            .collect();
        Self { n, inv_norm }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n.saturating_sub(1)
    }

    /// `(n−1)/2`, the value of every entry of the center.
    pub fn center(&self) -> T {
        T::of_usize(self.n.saturating_sub(1)) / T::of(2.0)
    }

    /// `x = U y`.
    pub fn apply(&self, y: &[T], x: &mut [T]) {
        let n = self.n;
        let mut prefix = T::zero();
        for i in 0..n {
            let mut xi = prefix;
            if i + 1 < n {
                let z = y[i] * self.inv_norm[i];
                xi -= T::of_usize(n - i - 1) * z;
                prefix += z;
            }
            x[i] = xi;
        }
    }

    /// `y = Uᵀ g`.
    pub fn apply_transpose(&self, g: &[T], y: &mut [T]) {
        let n = self.n;
        let mut suffix = T::zero();
        for j in (1..n).rev() {
            suffix += g[j];
            y[j - 1] = self.inv_norm[j - 1] * (suffix - T::of_usize(n - j) * g[j - 1]);
        }
    }

    /// `𝒜(y) = U y + c`.
    pub fn positions(&self, y: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        self.apply(y, &mut x);
        let c = self.center();
        x.iter_mut().for_each(|v| *v += c);
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UbiConfig<T> {
    /// Biased rounds after the spectral start.
    pub rounds: usize,
    /// Penalty magnitude; `None` makes the bias point stationary along the
    /// bias direction.
    pub mu: Option<T>,
    /// Sigmoid sharpness; `None` uses `1/‖w − c‖²`.
    pub lambda_sig: Option<T>,
    pub memory: usize,
    /// Inner stopping rule: gradient norm below `gtol·max(1, ‖∇f(w)‖)`.
    pub gtol: T,
    pub max_inner: usize,
}

impl<T: Scalar> Default for UbiConfig<T> {
    fn default() -> Self {
        Self { rounds: 10, mu: None, lambda_sig: None, memory: 10, gtol: T::of(1e-6), max_inner: 500 }
    }
}

impl<T: Scalar> UbiConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: Option<T>| v.is_none_or(|v| v > T::zero() && v.is_finite());
        if !positive(self.mu) || !positive(self.lambda_sig) {
            return Err(SeriationError::InvalidArgument("penalty magnitude and sharpness must be positive".into()));
        }
        if self.memory == 0 || !(self.gtol > T::zero()) {
            return Err(SeriationError::InvalidArgument("memory and gradient tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn sigmoid<T: Scalar>(t: T) -> T {
    T::one() / (T::one() + (-t).exp())
}

/// Biased smooth objective `f(Uy + c) − μ·σ(λ·yᵀUᵀ(w − c))` of one round.
pub struct UbiObjective<'a, T> {
    a: &'a SimilarityMatrix<T>,
    kind: LossKind<T>,
    basis: HyperplaneBasis<T>,
    /// `Uᵀ(w − c)`.
    omega: Vec<T>,
    mu: T,
    lambda: T,
}

impl<'a, T: Scalar> UbiObjective<'a, T> {
    /// Objective biased towards `bias`, with explicit penalty parameters.
    pub fn new(a: &'a SimilarityMatrix<T>, kind: LossKind<T>, bias: &Permutation, mu: T, lambda: T) -> Result<Self> {
        bias.check_len(a.n())?;
        if matches!(kind, LossKind::R2Sum { .. }) {
            return Err(SeriationError::InvalidArgument("UBI needs the 2-SUM or Huber loss".into()));
        }
        kind.validate()?;
        let basis = HyperplaneBasis::new(a.n());
        let c = basis.center();
        let wc: Vec<T> = bias.as_real::<T>().into_iter().map(|v| v - c).collect();
        let mut omega = vec![T::zero(); basis.dim()];
        basis.apply_transpose(&wc, &mut omega);
        Ok(Self { a, kind, basis, omega, mu, lambda })
    }

    /// Default parameters for `bias`: `λ = 1/‖w − c‖²` and `μ` chosen so the
    /// gradient at the bias point has no component along `w − c`.
    pub fn with_defaults(
        a: &'a SimilarityMatrix<T>,
        kind: LossKind<T>,
        bias: &Permutation,
        cfg: &UbiConfig<T>,
    ) -> Result<Self> {
        let mut obj = Self::new(a, kind, bias, T::one(), T::one())?;
        let r2: T = obj.omega.iter().map(|&v| v * v).sum();
        obj.lambda = cfg.lambda_sig.unwrap_or(T::one() / r2);
        obj.mu = match cfg.mu {
            Some(mu) => mu,
            None => {
                let w = bias.as_real::<T>();
                let mut g = vec![T::zero(); a.n()];
                let fw = smooth_loss_grad(a, &w, kind, &mut g)?;
                let c = obj.basis.center();
                let radial: T = g.iter().zip(&w).map(|(&gi, &wi)| gi * (wi - c)).sum();
                let t = obj.lambda * r2;
                let s = sigmoid(t);
                let slope = obj.lambda * r2 * s * (T::one() - s);
                let mu = radial / slope;
                if mu > T::zero() {
                    mu
                } else {
                    fw.max(T::one())
                }
            }
        };
        Ok(obj)
    }

    pub fn basis(&self) -> &HyperplaneBasis<T> {
        &self.basis
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    /// Starting point `y = Uᵀ(w − c)`, which maps back onto the bias.
    pub fn bias_point(&self) -> Vec<T> {
        self.omega.clone()
    }

    /// Value at `y`; writes `∇_y` into `grad`.
    pub fn value_grad(&self, y: &[T], grad: &mut [T]) -> T {
        let x = self.basis.positions(y);
        let mut gx = vec![T::zero(); x.len()];
        let fx = smooth_loss_grad(self.a, &x, self.kind, &mut gx).expect("dimensions checked at construction");
        self.basis.apply_transpose(&gx, grad);
        let proj: T = y.iter().zip(&self.omega).map(|(&a, &b)| a * b).sum();
        let s = sigmoid(self.lambda * proj);
        let coef = self.mu * s * (T::one() - s) * self.lambda;
        grad.iter_mut().zip(&self.omega).for_each(|(g, &o)| *g -= coef * o);
        fx - self.mu * s
    }

    pub fn value(&self, y: &[T]) -> T {
        let mut g = vec![T::zero(); y.len()];
        self.value_grad(y, &mut g)
    }

    pub(crate) fn gradient_scale(&self) -> T {
        let mut g = vec![T::zero(); self.omega.len()];
        let y = self.bias_point();
        self.value_grad(&y, &mut g);
        g.iter().map(|&v| v * v).sum::<T>().sqrt().max(T::one())
    }
}

/// UBI from the spectral ordering; reports the best permutation under `kind`
/// among the spectral start and every round's sorted minimizer.
pub fn ubi<T: Scalar>(a: &SimilarityMatrix<T>, kind: LossKind<T>, cfg: &UbiConfig<T>) -> Result<SolverReport<T>> {
    cfg.validate()?;
    if matches!(kind, LossKind::R2Sum { .. }) {
        return Err(SeriationError::InvalidArgument("UBI needs the 2-SUM or Huber loss".into()));
    }
    kind.validate()?;
    let started = Instant::now();
    let mut bias = spectral_order(a)?.permutation;
    let mut best = BestSoFar::new();
    best.offer(0, bias.clone(), loss(a, &bias, kind)?);
    let mut warnings = Vec::new();
    let mut rounds = 0;
    for t in 1..=cfg.rounds {
        let obj = UbiObjective::with_defaults(a, kind, &bias, cfg)?;
        let lcfg = LbfgsConfig { memory: cfg.memory, gtol: cfg.gtol * obj.gradient_scale(), max_iter: cfg.max_inner };
        let m = minimize(|y, g| obj.value_grad(y, g), obj.bias_point(), &lcfg);
        rounds = t;
        if m.outcome == Outcome::LineSearchFailed {
            warnings.push(format!("round {t}: line search failed at gradient norm {:e}", m.grad_norm.to_f64_lossy()));
            break;
        }
        if m.outcome == Outcome::MaxIter {
            warnings.push(format!(
                "round {t}: stopped after {} inner iterations at objective {:e}",
                m.iterations,
                m.value.to_f64_lossy()
            ));
        }
        let next = Permutation::argsort(&obj.basis().positions(&m.x));
        best.offer(t, next.clone(), loss(a, &next, kind)?);
        if next == bias {
            break;
        }
        bias = next;
    }
    let perm = best.perm.take().expect("spectral start offered");
    let mut report = SolverReport::finish(a, perm, kind, best.trace, rounds, started)?;
    report.warnings = warnings;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_basis(n: usize) -> Vec<Vec<f64>> {
        (1..n)
            .map(|j| {
                let mut v = vec![0.0; n];
                v[j - 1] = -((n - j) as f64);
                v[j..].iter_mut().for_each(|x| *x = 1.0);
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / nv).collect()
            })
            .collect()
    }

    #[test]
    fn basis_is_orthonormal_and_fast_products_agree() {
        let n = 9;
        let cols = dense_basis(n);
        for (a, ca) in cols.iter().enumerate() {
            assert!(ca.iter().sum::<f64>().abs() < 1e-12);
            for (b, cb) in cols.iter().enumerate() {
                let d: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                assert!((d - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let basis = HyperplaneBasis::<f64>::new(n);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x = vec![0.0; n];
        basis.apply(&y, &mut x);
        for i in 0..n {
            let e: f64 = (0..n - 1).map(|j| cols[j][i] * y[j]).sum();
            assert!((x[i] - e).abs() < 1e-12);
        }
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut ut = vec![0.0; n - 1];
        basis.apply_transpose(&g, &mut ut);
        for j in 0..n - 1 {
            let e: f64 = (0..n).map(|i| cols[j][i] * g[i]).sum();
            assert!((ut[j] - e).abs() < 1e-12);
        }
        let sum: f64 = basis.positions(&y).iter().sum();
        assert!((sum - (n * (n - 1)) as f64 / 2.0).abs() < 1e-10);
    }

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
    fn objective_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 30;
        let a = noisy_band(&mut rng, n, 3, 20);
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(&mut rng);
        let bias = Permutation::new(v).unwrap();
        for kind in [LossKind::TwoSum, LossKind::Huber { delta: 3.0 }] {
            let obj = UbiObjective::with_defaults(&a, kind, &bias, &UbiConfig::default()).unwrap();
            for _ in 0..20 {
                let y: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-8.0..8.0)).collect();
                let mut g = vec![0.0; n - 1];
                obj.value_grad(&y, &mut g);
                for k in 0..n - 1 {
                    let h = 1e-5;
                    let mut yp = y.clone();
                    let mut ym = y.clone();
                    yp[k] += h;
                    ym[k] -= h;
                    let fd = (obj.value(&yp) - obj.value(&ym)) / (2.0 * h);
                    assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0), "{fd} vs {}", g[k]);
                }
            }
        }
    }

    #[test]
    fn bias_point_is_radially_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = noisy_band(&mut rng, 25, 3, 10);
        let bias = Permutation::identity(25);
        let obj =
            UbiObjective::with_defaults(&a, LossKind::Huber { delta: 3.0 }, &bias, &UbiConfig::default()).unwrap();
        let y = obj.bias_point();
        let mut g = vec![0.0; 24];
        obj.value_grad(&y, &mut g);
        let radial: f64 =
            g.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(radial.abs() < 1e-8 * obj.mu());
    }

    #[test]
    fn without_bias_the_minimizer_collapses_to_the_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = noisy_band(&mut rng, 30, 3, 10);
        let obj = UbiObjective::new(&a, LossKind::TwoSum, &Permutation::identity(30), 0.0, 1.0).unwrap();
        let cfg = LbfgsConfig { memory: 10, gtol: 1e-10, max_iter: 2000 };
        let m = minimize(|y, g| obj.value_grad(y, g), obj.bias_point(), &cfg);
        let start: f64 = obj.bias_point().iter().map(|v| v * v).sum::<f64>().sqrt();
        let end: f64 = m.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(end < 1e-4 * start, "{end} vs {start}");
    }

    #[test]
    fn report_never_worse_than_spectral() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let a = noisy_band(&mut rng, n, 4, 60);
        let kind = LossKind::Huber { delta: 4.0 };
        let r = ubi(&a, kind, &UbiConfig::default()).unwrap();
        let s = spectral_order(&a).unwrap().permutation;
        assert!(r.objective <= loss(&a, &s, kind).unwrap());
        assert_eq!(r.objective, loss(&a, &r.permutation, kind).unwrap());
        assert!(r.trace.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(ubi(&a, LossKind::R2Sum { lambda: 4.0 }, &UbiConfig::default()).is_err());
    }
}
