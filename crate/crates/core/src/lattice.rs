//! Multi-index arithmetic, boxes, and truncation lattices.
//!
//! Everything downstream (moments, operators, fiber analysis) works with
//! points and boxes in `Z^n`. Indices are plain integer vectors with two
//! orders on them: the componentwise partial order (`le_all` / `lt_all`),
//! which is the one the math cares about, and the derived lexicographic
//! `Ord`, which is only used for deterministic storage and enumeration.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("slice outside box: level {level} >= extent {extent} along axis {axis}")]
    SliceOutsideBox {
        axis: usize,
        level: i64,
        extent: i64,
    },
}

/// A point of `Z^n`.
///
/// `Ord`/`PartialOrd` are lexicographic (deterministic map keys and
/// enumeration); the componentwise partial order used by the theory is
/// exposed as [`MultiIndex::le_all`] and [`MultiIndex::lt_all`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    entries: Vec<i64>,
}

impl MultiIndex {
    pub fn new(entries: Vec<i64>) -> Self {
        assert!(!entries.is_empty(), "multi-index dimension must be >= 1");
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0; dim])
    }

    /// The unit index along `axis` (0-based): one 1-entry, zeros elsewhere.
    pub fn unit(dim: usize, axis: usize) -> Self {
        assert!(axis < dim);
        let mut e = vec![0; dim];
        e[axis] = 1;
        Self::new(e)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn entry(&self, axis: usize) -> i64 {
        self.entries[axis]
    }

    fn check_dim(&self, other: &Self) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "multi-index dimension mismatch: {} vs {}",
            self.dim(),
            other.dim()
        );
    }

    /// Componentwise `<=` (a partial order, not the derived `Ord`).
    pub fn le_all(&self, other: &Self) -> bool {
        self.check_dim(other);
        self.entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| a <= b)
    }

    /// Componentwise strict `<` in every coordinate.
    pub fn lt_all(&self, other: &Self) -> bool {
        self.check_dim(other);
        self.entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| a < b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_dim(other);
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_dim(other);
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn max_with(&self, other: &Self) -> Self {
        self.check_dim(other);
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| (*a).max(*b))
                .collect(),
        )
    }

    /// Componentwise `max(0, -self)`; the smallest `k` with `k + self >= 0`.
    pub fn clamp_deficit(&self) -> Self {
        Self::new(self.entries.iter().map(|a| (-a).max(0)).collect())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|a| *a >= 0)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        Self::new(v)
    }
}

impl From<&[i64]> for MultiIndex {
    fn from(v: &[i64]) -> Self {
        Self::new(v.to_vec())
    }
}

/// Half-open box `{k : lower_j <= k_j < upper_j}` in `Z^n`.
///
/// Empty boxes (some `lower_j >= upper_j`) are valid and iterate to nothing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexBox {
    lower: MultiIndex,
    upper: MultiIndex,
}

impl fmt::Display for IndexBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.lower, self.upper)
    }
}

impl IndexBox {
    pub fn new(lower: MultiIndex, upper: MultiIndex) -> Self {
        assert_eq!(lower.dim(), upper.dim(), "box corner dimension mismatch");
        Self { lower, upper }
    }

    /// A one-point box `{k}`.
    pub fn singleton(k: &MultiIndex) -> Self {
        let upper = MultiIndex::new(k.entries().iter().map(|e| e + 1).collect());
        Self::new(k.clone(), upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &MultiIndex {
        &self.lower
    }

    pub fn upper(&self) -> &MultiIndex {
        &self.upper
    }

    /// Extent `d_j = upper_j - lower_j` along each axis (may be negative).
    pub fn dimensions(&self) -> Vec<i64> {
        self.upper
            .entries()
            .iter()
            .zip(self.lower.entries())
            .map(|(b, a)| b - a)
            .collect()
    }

    pub fn cardinality(&self) -> u64 {
        self.dimensions()
            .iter()
            .map(|d| (*d).max(0) as u64)
            .product()
    }

    pub fn is_empty(&self) -> bool {
        self.cardinality() == 0
    }

    pub fn contains(&self, k: &MultiIndex) -> bool {
        assert_eq!(self.dim(), k.dim());
        k.entries()
            .iter()
            .zip(self.lower.entries().iter().zip(self.upper.entries()))
            .all(|(v, (a, b))| a <= v && v < b)
    }

    /// The sub-box with coordinate `axis` pinned to `upper_axis - 1 - level_from_top`.
    ///
    /// `level_from_top = 0` is the top slice, `d_axis - 1` the bottom one.
    pub fn top_slice(&self, axis: usize, level_from_top: i64) -> Result<IndexBox, LatticeError> {
        if axis >= self.dim() {
            return Err(LatticeError::AxisOutOfRange {
                axis,
                dim: self.dim(),
            });
        }
        let extent = self.upper.entry(axis) - self.lower.entry(axis);
        if level_from_top < 0 || level_from_top >= extent {
            return Err(LatticeError::SliceOutsideBox {
                axis,
                level: level_from_top,
                extent,
            });
        }
        let pinned = self.upper.entry(axis) - 1 - level_from_top;
        let mut lo = self.lower.entries().to_vec();
        let mut hi = self.upper.entries().to_vec();
        lo[axis] = pinned;
        hi[axis] = pinned + 1;
        Ok(IndexBox::new(MultiIndex::new(lo), MultiIndex::new(hi)))
    }

    /// The box with the top slice along `axis` removed (`upper_axis` lowered by 1).
    pub fn without_top_slice(&self, axis: usize) -> IndexBox {
        assert!(axis < self.dim());
        let mut hi = self.upper.entries().to_vec();
        hi[axis] -= 1;
        IndexBox::new(self.lower.clone(), MultiIndex::new(hi))
    }

    /// Lexicographic iteration over the box points.
    pub fn iter(&self) -> BoxIter {
        BoxIter::new(self.lower.clone(), self.upper.clone())
    }
}

pub struct BoxIter {
    lower: MultiIndex,
    upper: MultiIndex,
    next: Option<Vec<i64>>,
}

impl BoxIter {
    fn new(lower: MultiIndex, upper: MultiIndex) -> Self {
        let empty = lower
            .entries()
            .iter()
            .zip(upper.entries())
            .any(|(a, b)| a >= b);
        let next = if empty {
            None
        } else {
            Some(lower.entries().to_vec())
        };
        Self { lower, upper, next }
    }
}

impl Iterator for BoxIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        // lexicographic increment, last axis fastest
        for axis in (0..succ.len()).rev() {
            succ[axis] += 1;
            if succ[axis] < self.upper.entry(axis) {
                self.next = Some(succ);
                break;
            }
            succ[axis] = self.lower.entry(axis);
        }
        Some(MultiIndex::new(current))
    }
}

/// Finite sub-lattice `{k in N^n : k <= max_index}` standing in for the
/// monomial basis during computations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncationLattice {
    max_index: MultiIndex,
}

impl TruncationLattice {
    pub fn new(max_index: MultiIndex) -> Self {
        assert!(
            max_index.is_nonnegative(),
            "truncation lattice lives in N^n, got {max_index}"
        );
        Self { max_index }
    }

    pub fn dim(&self) -> usize {
        self.max_index.dim()
    }

    pub fn max_index(&self) -> &MultiIndex {
        &self.max_index
    }

    pub fn contains(&self, k: &MultiIndex) -> bool {
        k.is_nonnegative() && k.le_all(&self.max_index)
    }

    pub fn cardinality(&self) -> u64 {
        self.max_index
            .entries()
            .iter()
            .map(|m| (*m + 1) as u64)
            .product()
    }

    /// Lexicographic, deterministic enumeration.
    pub fn iter(&self) -> BoxIter {
        let upper = MultiIndex::new(self.max_index.entries().iter().map(|m| m + 1).collect());
        BoxIter::new(MultiIndex::zeros(self.dim()), upper)
    }

    /// Smallest lattice containing this one translated by every prefix sum of
    /// `shifts` (including the empty prefix), clipped to `N^n`.
    ///
    /// This is the padding that keeps all intermediate indices of an operator
    /// product inside the computed lattice.
    pub fn shifted(&self, shifts: &[MultiIndex]) -> TruncationLattice {
        let dim = self.dim();
        let mut envelope = self.max_index.clone();
        let mut prefix = MultiIndex::zeros(dim);
        for shift in shifts {
            assert_eq!(shift.dim(), dim, "shift dimension mismatch");
            prefix = prefix.add(shift);
            // max over k <= max_index of (k + prefix) clipped to N^n is
            // attained at k = max_index; clip negatives to 0.
            let translated = MultiIndex::new(
                self.max_index
                    .entries()
                    .iter()
                    .zip(prefix.entries())
                    .map(|(m, p)| (m + p).max(0))
                    .collect(),
            );
            envelope = envelope.max_with(&translated);
        }
        TruncationLattice::new(envelope)
    }
}
