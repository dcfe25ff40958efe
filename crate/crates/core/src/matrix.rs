//! Sparse symmetric similarity matrices and small dense helpers.

use crate::error::{Result, SeriationError};
use crate::permutation::Permutation;
use crate::scalar::Scalar;

/// Symmetric nonnegative similarity matrix stored as its upper triangle.
///
/// Only strictly positive entries are kept. A symmetric adjacency list is
/// built once at construction so mat-vec products and row scans are cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    n: usize,
    entries: Vec<(usize, usize, T)>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> SimilarityMatrix<T> {
    /// Builds a matrix from `(i, j, value)` triples. Pairs with `i > j` are
    /// mirrored into the upper triangle; zero values are dropped.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut entries = Vec::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(SeriationError::InvalidArgument(format!("index ({i}, {j}) out of range for n = {n}")));
            }
            if !v.is_finite() || v < T::zero() {
                return Err(SeriationError::Domain(format!("entry ({i}, {j}) = {v} must be finite and nonnegative")));
            }
            if v == T::zero() {
                continue;
            }
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            entries.push((a, b, v));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(SeriationError::InvalidArgument(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
            }
        }
        Ok(Self::from_sorted_entries(n, entries))
    }

    fn from_sorted_entries(n: usize, entries: Vec<(usize, usize, T)>) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in &entries {
            counts[i + 1] += 1;
            if i != j {
                counts[j + 1] += 1;
            }
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let row_ptr = counts.clone();
        let total = row_ptr[n];
        let mut cols = vec![0usize; total];
        let mut vals = vec![T::zero(); total];
        let mut fill = counts;
        for &(i, j, v) in &entries {
            cols[fill[i]] = j;
            vals[fill[i]] = v;
            fill[i] += 1;
            if i != j {
                cols[fill[j]] = i;
                vals[fill[j]] = v;
                fill[j] += 1;
            }
        }
        // rows end up column-sorted: lower-triangle entries are pushed in
        // increasing row order before the row's own upper-triangle entries.
        Self { n, entries, row_ptr, cols, vals }
    }

    /// Keeps every strictly positive entry of a symmetric dense matrix.
    pub fn from_dense(m: &DenseMatrix<T>) -> Result<Self> {
        let n = m.n();
        m.check_symmetric(T::zero())?;
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = m.get(i, j);
                if v != T::zero() {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, triplets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Upper-triangle entries `(i, j, v)` with `i <= j`, sorted.
    pub fn entries(&self) -> &[(usize, usize, T)] {
        &self.entries
    }

    /// Number of nonzeros of the full symmetric matrix: the diagonal counts
    /// once and every off-diagonal pair twice.
    pub fn nnz(&self) -> usize {
        self.entries.iter().map(|&(i, j, _)| if i == j { 1 } else { 2 }).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => T::zero(),
        }
    }

    /// Stored neighbours of row `i` (the diagonal entry included, once).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// Row sums `A·1`.
    pub fn degrees(&self) -> Vec<T> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn max_value(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, &(_, _, v)| acc.max(v))
    }

    pub fn min_value(&self) -> Option<T> {
        self.entries.iter().map(|&(_, _, v)| v).fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.min(v))))
    }

    /// Same sparsity pattern with values replaced entry by entry, in the order
    /// of [`entries`](Self::entries). Non-positive replacements are dropped.
    pub fn map_entries<F>(&self, mut f: F) -> Self
    where
        F: FnMut(usize, usize, T) -> T,
    {
        let entries: Vec<_> =
            self.entries.iter().map(|&(i, j, v)| (i, j, f(i, j, v))).filter(|&(_, _, v)| v > T::zero()).collect();
        Self::from_sorted_entries(self.n, entries)
    }

    /// Entries whose value is at least `threshold`.
    pub fn thresholded(&self, threshold: T) -> Self {
        let entries: Vec<_> = self.entries.iter().copied().filter(|&(_, _, v)| v >= threshold).collect();
        Self::from_sorted_entries(self.n, entries)
    }

    /// Relabels element `i` as `perm.position(i)`, i.e. returns `Π A Πᵀ`
    /// laid out in the order encoded by `perm`.
    pub fn permuted(&self, perm: &Permutation) -> Result<Self> {
        perm.check_len(self.n)?;
        let triplets = self.entries.iter().map(|&(i, j, v)| (perm.position(i), perm.position(j), v));
        Self::from_triplets(self.n, triplets)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.n);
        for &(i, j, v) in &self.entries {
            m.set(i, j, v);
            m.set(j, i, v);
        }
        m
    }

    /// Connected components of the support graph, each sorted, ordered by
    /// smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut comps = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![start];
            label[start] = id;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for (v, _) in self.row(u) {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.connected_components().len() == 1
    }

    /// `Err(Disconnected)` listing component sizes unless connected.
    pub fn check_connected(&self) -> Result<()> {
        let comps = self.connected_components();
        if comps.len() > 1 {
            return Err(SeriationError::Disconnected { sizes: comps.iter().map(Vec::len).collect() });
        }
        Ok(())
    }
}

/// Square dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> T>(n: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(SeriationError::DimensionMismatch { expected: n, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_slice_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn check_symmetric(&self, tol: T) -> Result<()> {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let (a, b) = (self.get(i, j), self.get(j, i));
                if (a - b).abs() > tol || a.is_nan() || b.is_nan() {
                    return Err(SeriationError::Asymmetric { i, j });
                }
            }
        }
        Ok(())
    }

    /// `B[π(i)][π(j)] = A[i][j]`.
    pub fn permuted(&self, perm: &Permutation) -> Result<Self> {
        perm.check_len(self.n)?;
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            let pi = perm.position(i);
            for j in 0..self.n {
                out.set(pi, perm.position(j), self.get(i, j));
            }
        }
        Ok(out)
    }

    /// Matrix with rows and columns reversed.
    pub fn flipped(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| self.get(n - 1 - i, n - 1 - j))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn frobenius_distance(&self, other: &Self) -> Result<T> {
        if other.n != self.n {
            return Err(SeriationError::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// Square matrix of finite costs for assignment problems.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T>(DenseMatrix<T>);

impl<T: Scalar> CostMatrix<T> {
    pub fn new(m: DenseMatrix<T>) -> Result<Self> {
        if let Some(pos) = m.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(SeriationError::Domain(format!(
                "cost entry ({}, {}) is not finite",
                pos / m.n().max(1),
                pos % m.n().max(1)
            )));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(DenseMatrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.0.get(i, j)
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_mirrored_and_zeros_dropped() {
        let a = SimilarityMatrix::from_triplets(3, [(1, 0, 2.0), (2, 2, 1.0), (0, 2, 0.0)]).unwrap();
        assert_eq!(a.entries(), &[(0, 1, 2.0), (2, 2, 1.0)]);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.degrees(), vec![2.0, 2.0, 1.0]);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(SimilarityMatrix::from_triplets(2, [(0, 2, 1.0)]).is_err());
        assert!(SimilarityMatrix::from_triplets(2, [(0, 1, -1.0)]).is_err());
        assert!(SimilarityMatrix::from_triplets(2, [(0, 1, f64::NAN)]).is_err());
        assert!(SimilarityMatrix::from_triplets(2, [(0, 1, 1.0), (1, 0, 2.0)]).is_err());
    }

    #[test]
    fn rows_are_column_sorted() {
        let a = SimilarityMatrix::from_triplets(4, [(0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0), (3, 3, 1.0), (0, 1, 1.0)])
            .unwrap();
        for i in 0..4 {
            let cols: Vec<_> = a.row(i).map(|(j, _)| j).collect();
            let mut sorted = cols.clone();
            sorted.sort_unstable();
            assert_eq!(cols, sorted);
        }
        assert_eq!(a.get(3, 2), 1.0);
    }

    #[test]
    fn components() {
        let a = SimilarityMatrix::from_triplets(5, [(0, 1, 1.0), (3, 4, 1.0)]).unwrap();
        assert_eq!(a.connected_components(), vec![vec![0, 1], vec![2], vec![3, 4]]);
        assert_eq!(a.check_connected(), Err(SeriationError::Disconnected { sizes: vec![2, 1, 2] }));
    }

    #[test]
    fn permuted_matches_dense_permutation() {
        let a = SimilarityMatrix::from_triplets(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 0, 3.0)]).unwrap();
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(a.permuted(&p).unwrap().to_dense(), a.to_dense().permuted(&p).unwrap());
    }
}
