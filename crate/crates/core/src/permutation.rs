//! Permutations stored as position vectors.
//!
//! `forward[i]` is the position of element `i` in the ordering; the inverse
//! view `order()[k]` is the element sitting at position `k`.

use crate::error::{Result, SeriationError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from a position vector, checking it is a bijection.
    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (i, &p) in forward.iter().enumerate() {
            if p >= n || inverse[p] != usize::MAX {
                return Err(SeriationError::InvalidArgument(format!(
                    "not a permutation: position {p} of element {i} is out of range or repeated"
                )));
            }
            inverse[p] = i;
        }
        Ok(Self { forward, inverse })
    }

    pub fn identity(n: usize) -> Self {
        let v: Vec<usize> = (0..n).collect();
        Self { forward: v.clone(), inverse: v }
    }

    /// Builds the permutation whose element at position `k` is `order[k]`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        Ok(Self::new(order)?.inverse())
    }

    /// Positions obtained by sorting `keys` ascending, ties broken by index.
    pub fn argsort<T: Scalar>(keys: &[T]) -> Self {
        let mut order: Vec<usize> = (0..keys.len()).collect();
        order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).unwrap().then(a.cmp(&b)));
        Self::from_order(order).expect("argsort yields a permutation")
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn position(&self, element: usize) -> usize {
        self.forward[element]
    }

    #[inline]
    pub fn element_at(&self, position: usize) -> usize {
        self.inverse[position]
    }

    pub fn positions(&self) -> &[usize] {
        &self.forward
    }

    /// Elements listed in position order.
    pub fn order(&self) -> &[usize] {
        &self.inverse
    }

    pub fn inverse(&self) -> Self {
        Self { forward: self.inverse.clone(), inverse: self.forward.clone() }
    }

    /// The mirror ordering `T(π) = (n-1)·1 - π`.
    pub fn flip(&self) -> Self {
        let n = self.len();
        let forward = self.forward.iter().map(|&p| n - 1 - p).collect();
        let inverse = self.inverse.iter().rev().copied().collect();
        Self { forward, inverse }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_len(other.len())?;
        Self::new(other.forward.iter().map(|&p| self.forward[p]).collect())
    }

    /// Positions as a real vector.
    pub fn as_real<T: Scalar>(&self) -> Vec<T> {
        self.forward.iter().map(|&p| T::of_usize(p)).collect()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(SeriationError::DimensionMismatch { expected: n, got: self.len() });
        }
        Ok(())
    }
}
