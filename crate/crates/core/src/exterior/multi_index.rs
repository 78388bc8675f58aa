//! Canonical basis labels `dx^{i1} ∧ … ∧ dx^{ik}` with `i1 < … < ik`.

use crate::error::{Error, Result};

/// Strictly increasing list of axis indices; the empty index labels the
/// scalar (degree-0) slot.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(indices: Vec<u8>) -> Result<Self> {
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::structural(format!(
                "multi-index {indices:?} is not strictly increasing"
            )));
        }
        Ok(MultiIndex(indices))
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn single(i: u8) -> Self {
        MultiIndex(vec![i])
    }

    /// The full index `(0, 1, …, dim-1)` labelling the volume slot.
    pub fn full(dim: usize) -> Self {
        MultiIndex((0..dim as u8).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    pub fn max_index(&self) -> Option<u8> {
        self.0.last().copied()
    }

    pub fn contains(&self, i: u8) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Wedge of two basis labels: `None` if an index repeats, otherwise
    /// the merged label with the sign of the sorting permutation.
    pub fn wedge(&self, other: &MultiIndex) -> Option<(i8, MultiIndex)> {
        let mut merged = Vec::with_capacity(self.0.len() + other.0.len());
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        let mut sign = 1i8;
        while i < a.len() && j < b.len() {
            if a[i] == b[j] {
                return None;
            }
            if a[i] < b[j] {
                merged.push(a[i]);
                i += 1;
            } else {
                // b[j] jumps over the remaining a-entries
                if (a.len() - i) % 2 == 1 {
                    sign = -sign;
                }
                merged.push(b[j]);
                j += 1;
            }
        }
        merged.extend_from_slice(&a[i..]);
        merged.extend_from_slice(&b[j..]);
        Some((sign, MultiIndex(merged)))
    }

    /// Remove the index at `pos`, returning the contraction sign `(-1)^pos`
    /// and the reduced label.
    pub fn remove_at(&self, pos: usize) -> (i8, MultiIndex) {
        let sign = if pos.is_multiple_of(2) { 1 } else { -1 };
        let mut v = self.0.clone();
        v.remove(pos);
        (sign, MultiIndex(v))
    }
}
