//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LbfgsConfig<T> {
    pub memory: usize,
    /// Absolute gradient-norm target.
    pub gtol: T,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Converged,
    MaxIter,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub grad_norm: T,
    pub iterations: usize,
    pub outcome: Outcome,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi += alpha * xi);
}

struct Probe<T> {
    step: T,
    value: T,
    slope: T,
    x: Vec<T>,
    grad: Vec<T>,
}

/// Minimizes `f`, which writes its gradient into the second argument and
/// returns the value.
pub(crate) fn minimize<T, F>(mut f: F, x0: Vec<T>, cfg: &LbfgsConfig<T>) -> Minimum<T>
where
    T: Scalar,
    F: FnMut(&[T], &mut [T]) -> T,
{
    let dim = x0.len();
    let mut x = x0;
    let mut g = vec![T::zero(); dim];
    let mut fx = f(&x, &mut g);
    let mut pairs: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(cfg.memory);
    let mut dir = vec![T::zero(); dim];
    let mut alphas = vec![T::zero(); cfg.memory];
    for it in 0..cfg.max_iter {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= cfg.gtol {
            return Minimum { x, value: fx, grad_norm: gnorm, iterations: it, outcome: Outcome::Converged };
        }
        // Two-loop recursion.
        dir.iter_mut().zip(&g).for_each(|(d, &gi)| *d = -gi);
        for (k, (s, y, rho)) in pairs.iter().enumerate().rev() {
            let a = *rho * dot(s, &dir);
            alphas[k] = a;
            axpy(-a, y, &mut dir);
        }
        let gamma = match pairs.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => T::one() / gnorm,
        };
        dir.iter_mut().for_each(|d| *d *= gamma);
        for (k, (s, y, rho)) in pairs.iter().enumerate() {
            let b = *rho * dot(y, &dir);
            axpy(alphas[k] - b, s, &mut dir);
        }
        let mut slope = dot(&g, &dir);
        if !(slope < T::zero()) {
            pairs.clear();
            dir.iter_mut().zip(&g).for_each(|(d, &gi)| *d = -gi / gnorm);
            slope = -gnorm;
        }
        let Some(probe) = strong_wolfe(&mut f, &x, fx, slope, &dir) else {
            return Minimum { x, value: fx, grad_norm: gnorm, iterations: it, outcome: Outcome::LineSearchFailed };
        };
        let s: Vec<T> = dir.iter().map(|&d| probe.step * d).collect();
        let y: Vec<T> = probe.grad.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, T::one() / sy));
        }
        x = probe.x;
        g = probe.grad;
        fx = probe.value;
    }
    let gnorm = dot(&g, &g).sqrt();
    let outcome = if gnorm <= cfg.gtol { Outcome::Converged } else { Outcome::MaxIter };
    Minimum { x, value: fx, grad_norm: gnorm, iterations: cfg.max_iter, outcome }
}

fn evaluate<T, F>(f: &mut F, x0: &[T], dir: &[T], step: T) -> Probe<T>
where
    T: Scalar,
    F: FnMut(&[T], &mut [T]) -> T,
{
    let x: Vec<T> = x0.iter().zip(dir).map(|(&a, &d)| a + step * d).collect();
    let mut grad = vec![T::zero(); x.len()];
    let value = f(&x, &mut grad);
    let slope = dot(&grad, dir);
    Probe { step, value, slope, x, grad }
}

/// Bracketing and zoom phases of the strong-Wolfe search (c1 = 1e-4, c2 = 0.9).
fn strong_wolfe<T, F>(f: &mut F, x0: &[T], f0: T, slope0: T, dir: &[T]) -> Option<Probe<T>>
where
    T: Scalar,
    F: FnMut(&[T], &mut [T]) -> T,
{
    let c1 = T::of(1e-4);
    let c2 = T::of(0.9);
    let mut prev = Probe { step: T::zero(), value: f0, slope: slope0, x: Vec::new(), grad: Vec::new() };
    let mut step = T::one();
    for i in 0..40 {
        let cur = evaluate(f, x0, dir, step);
        if !cur.value.is_finite() {
            step = (prev.step + step) / T::of(2.0);
            continue;
        }
        if cur.value > f0 + c1 * step * slope0 || (i > 0 && cur.value >= prev.value) {
            return zoom(f, x0, f0, slope0, dir, prev, cur);
        }
        if cur.slope.abs() <= -c2 * slope0 {
            return Some(cur);
        }
        if cur.slope >= T::zero() {
            return zoom(f, x0, f0, slope0, dir, cur, prev);
        }
        prev = cur;
        step *= T::of(2.0);
    }
    None
}

fn zoom<T, F>(f: &mut F, x0: &[T], f0: T, slope0: T, dir: &[T], mut lo: Probe<T>, mut hi: Probe<T>) -> Option<Probe<T>>
where
    T: Scalar,
    F: FnMut(&[T], &mut [T]) -> T,
{
    let c1 = T::of(1e-4);
    let c2 = T::of(0.9);
    let two = T::of(2.0);
    for _ in 0..60 {
        let width = hi.step - lo.step;
        if width.abs() <= T::epsilon() * lo.step.abs().max(T::one()) {
            break;
        }
        // Minimizer of the quadratic through lo (value and slope) and hi (value).
        let denom = two * (hi.value - lo.value - lo.slope * width);
        let mut step =
            if denom > T::zero() { lo.step - lo.slope * width * width / denom } else { lo.step + width / two };
        let a = lo.step.min(hi.step);
        let b = lo.step.max(hi.step);
        let margin = T::of(0.1) * (b - a);
        if !step.is_finite() || step < a + margin || step > b - margin {
            step = (a + b) / two;
        }
        let cur = evaluate(f, x0, dir, step);
        if cur.value > f0 + c1 * step * slope0 || cur.value >= lo.value {
            hi = cur;
        } else {
            if cur.slope.abs() <= -c2 * slope0 {
                return Some(cur);
            }
            if cur.slope * (hi.step - lo.step) >= T::zero() {
                hi = lo;
            }
            lo = cur;
        }
    }
    // Accept a sufficient-decrease point when curvature cannot be met to precision.
    if lo.step > T::zero() && lo.value < f0 {
        Some(lo)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let cfg = LbfgsConfig { memory: 8, gtol: 1e-9, max_iter: 500 };
        let m = minimize(f, vec![-1.2, 1.0], &cfg);
        assert_eq!(m.outcome, Outcome::Converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let scales: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 * 20.0).collect();
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..x.len() {
                g[i] = scales[i] * (x[i] - 1.0);
                v += 0.5 * scales[i] * (x[i] - 1.0).powi(2);
            }
            v
        };
        let cfg = LbfgsConfig { memory: 10, gtol: 1e-8, max_iter: 1000 };
        let m = minimize(f, vec![0.0; 50], &cfg);
        assert_eq!(m.outcome, Outcome::Converged);
        assert!(m.x.iter().all(|&v| (v - 1.0).abs() < 1e-8));
    }
}
