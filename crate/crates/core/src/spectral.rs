//! Fiedler vector of the graph Laplacian and the spectral ordering.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SeriationError};
use crate::loss::LossKind;
use crate::matrix::SimilarityMatrix;
use crate::permutation::Permutation;
use crate::scalar::Scalar;
use crate::solvers::SolverReport;

/// Largest Krylov basis kept between restarts.
const MAX_KRYLOV: usize = 300;
const RITZ_CHECK: usize = 20;

/// `L = diag(A·1) − A`, applied matrix-free.
#[derive(Debug, Clone)]
pub struct LaplacianOperator<'a, T> {
    a: &'a SimilarityMatrix<T>,
    degree: Vec<T>,
}

impl<'a, T: Scalar> LaplacianOperator<'a, T> {
    pub fn new(a: &'a SimilarityMatrix<T>) -> Self {
        Self { a, degree: a.degrees() }
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn degrees(&self) -> &[T] {
        &self.degree
    }

    /// `y = L x`.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = self.degree[i] * x[i];
            for (j, v) in self.a.row(i) {
                s -= v * x[j];
            }
            *yi = s;
        }
    }

    /// Upper bound on the spectral radius (twice the largest degree).
    pub fn norm_bound(&self) -> T {
        let two = T::of(2.0);
        self.degree.iter().fold(T::zero(), |m, &d| m.max(two * d))
    }
}

/// Fiedler vector with its eigenvalue.
#[derive(Debug, Clone)]
pub struct FiedlerPair<T> {
    pub value: T,
    pub vector: Vec<T>,
    pub residual: T,
    pub matvecs: usize,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn remove_mean<T: Scalar>(x: &mut [T]) {
    let m = x.iter().copied().sum::<T>() / T::of_usize(x.len());
    x.iter_mut().for_each(|v| *v -= m);
}

/// Second-smallest eigenpair of the Laplacian of a connected matrix.
///
/// Lanczos with full reorthogonalization and explicit deflation of the
/// constant vector, restarted from the current Ritz vector. The residual
/// `‖Lx − θx‖` is accepted once it falls below `tol` relative to
/// `max(1, 2·max degree)`. `max_iter` caps the number of mat-vec products.
pub fn fiedler_pair<T: Scalar>(a: &SimilarityMatrix<T>, tol: T, max_iter: usize) -> Result<FiedlerPair<T>> {
    let n = a.n();
    if n < 2 {
        return Err(SeriationError::InvalidArgument("need at least two elements".into()));
    }
    if !(tol > T::zero()) {
        return Err(SeriationError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    a.check_connected()?;
    let op = LaplacianOperator::new(a);
    let scale = op.norm_bound().max(T::one());
    let krylov = (n - 1).min(MAX_KRYLOV);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5e71_a710);
    let mut start: Vec<T> = (0..n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
    remove_mean(&mut start);
    let s = norm(&start);
    start.iter_mut().for_each(|v| *v /= s);

    let mut matvecs = 0usize;
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(krylov + 1);
    let mut w = vec![T::zero(); n];
    let mut lx = vec![T::zero(); n];
    let breakdown = T::epsilon() * T::of(10.0) * scale;
    loop {
        basis.clear();
        basis.push(start.clone());
        let mut alpha: Vec<T> = Vec::with_capacity(krylov);
        let mut beta: Vec<T> = Vec::with_capacity(krylov);
        for k in 0..krylov {
            op.apply(&basis[k], &mut w);
            matvecs += 1;
            let ak = dot(&basis[k], &w);
            alpha.push(ak);
            // Two passes of classical Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                remove_mean(&mut w);
                for v in &basis {
                    let c = dot(v, &w);
                    w.iter_mut().zip(v).for_each(|(wi, &vi)| *wi -= c * vi);
                }
            }
            let bk = norm(&w);
            if k + 1 == krylov || bk <= breakdown {
                break;
            }
            // Ritz residual estimate |β_k · y_k| on the current tridiagonal.
            if (k + 1) % RITZ_CHECK == 0 {
                let (_, y) = smallest_tridiagonal_eigenpair(&alpha, &beta)?;
                if bk * y[k].abs() <= T::of(0.1) * tol * scale {
                    break;
                }
            }
            beta.push(bk);
            basis.push(w.iter().map(|&x| x / bk).collect());
        }
        let m = alpha.len();
        let (_, coeffs) = smallest_tridiagonal_eigenpair(&alpha, &beta[..m - 1])?;
        let mut x = vec![T::zero(); n];
        for (v, &c) in basis.iter().zip(&coeffs) {
            x.iter_mut().zip(v).for_each(|(xi, &vi)| *xi += c * vi);
        }
        remove_mean(&mut x);
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);

        op.apply(&x, &mut lx);
        matvecs += 1;
        let rayleigh = dot(&x, &lx);
        let residual = lx.iter().zip(&x).map(|(&l, &xi)| (l - rayleigh * xi) * (l - rayleigh * xi)).sum::<T>().sqrt();
        if residual <= tol * scale {
            normalize_sign(&mut x);
            return Ok(FiedlerPair { value: rayleigh, vector: x, residual, matvecs });
        }
        if matvecs >= max_iter {
            return Err(SeriationError::NoConvergence { iterations: matvecs, residual: residual.to_f64_lossy() });
        }
        start = x;
    }
}

/// Unit Fiedler vector of a connected matrix; see [`fiedler_pair`].
pub fn fiedler_vector<T: Scalar>(a: &SimilarityMatrix<T>, tol: T, max_iter: usize) -> Result<Vec<T>> {
    fiedler_pair(a, tol, max_iter).map(|p| p.vector)
}

fn normalize_sign<T: Scalar>(x: &mut [T]) {
    let floor = T::epsilon() * T::of(100.0);
    if let Some(&first) = x.iter().find(|v| v.abs() > floor) {
        if first < T::zero() {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Smallest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `d` and off-diagonal `e`, by implicit QL with Wilkinson shifts.
pub(crate) fn smallest_tridiagonal_eigenpair<T: Scalar>(d: &[T], e: &[T]) -> Result<(T, Vec<T>)> {
    let m = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<T> = e.iter().copied().chain(std::iter::once(T::zero())).collect();
    let mut z = vec![T::zero(); m * m];
    for i in 0..m {
        z[i * m + i] = T::one();
    }
    let two = T::of(2.0);
    for l in 0..m {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < m {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= T::epsilon() * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(SeriationError::NoConvergence { iterations: iter, residual: e[l].abs().to_f64_lossy() });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[mm] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = mm;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[mm] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..m {
                    f = z[k * m + i + 1];
                    z[k * m + i + 1] = s * z[k * m + i] + c * f;
                    z[k * m + i] = c * z[k * m + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = T::zero();
        }
    }
    let k = (0..m).min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap().then(a.cmp(&b))).expect("nonempty tridiagonal");
    Ok((d[k], (0..m).map(|r| z[r * m + k]).collect()))
}

/// Sorts the Fiedler vector: the element with the smallest entry goes
/// first, ties by index. The report's objective is the 2-SUM loss.
pub fn spectral_order<T: Scalar>(a: &SimilarityMatrix<T>) -> Result<SolverReport<T>> {
    spectral_order_with(a, T::default_tol(), 50 * a.n())
}

pub fn spectral_order_with<T: Scalar>(a: &SimilarityMatrix<T>, tol: T, max_iter: usize) -> Result<SolverReport<T>> {
    let started = Instant::now();
    let pair = fiedler_pair(a, tol, max_iter)?;
    let perm = Permutation::argsort(&pair.vector);
    SolverReport::finish(a, perm, LossKind::TwoSum, Vec::new(), pair.matvecs, started)
}
