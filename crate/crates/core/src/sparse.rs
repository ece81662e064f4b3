//! Column-oriented sparse vectors and operators over a [`LevelBasis`](crate::fock_basis::LevelBasis).
//!
//! Operators store one column per source state for a *prefix* of the basis
//! (all states up to some level), which is enough for every truncated product
//! used in the algebraic checks.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::Neg;

use num_traits::Num;

use crate::exec::{map_range, Execution};

pub trait Scalar: Num + Neg<Output = Self> + Clone + Send + Sync + Debug {}
impl<T: Num + Neg<Output = T> + Clone + Send + Sync + Debug> Scalar for T {}

/// Sorted, zero-free list of `(index, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec<S> {
    entries: Vec<(usize, S)>,
}

impl<S: Scalar> Default for SparseVec<S> {
    fn default() -> Self {
        SparseVec { entries: Vec::new() }
    }
}

impl<S: Scalar> SparseVec<S> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(i: usize) -> Self {
        SparseVec { entries: vec![(i, S::one())] }
    }

    pub fn from_map(map: BTreeMap<usize, S>) -> Self {
        SparseVec { entries: map.into_iter().filter(|(_, v)| !v.is_zero()).collect() }
    }

    /// Sums duplicate indices and drops zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, S)>) -> Self {
        let mut acc = Accumulator::new();
        for (i, v) in pairs {
            acc.add(i, v);
        }
        acc.finish()
    }

    pub fn from_dense(values: &[S]) -> Self {
        SparseVec {
            entries: values.iter().cloned().enumerate().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, S)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(usize, S)> {
        self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize) -> S {
        match self.entries.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(pos) => self.entries[pos].1.clone(),
            Err(_) => S::zero(),
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|(i, _)| *i)
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        SparseVec { entries: self.entries.iter().map(|(i, v)| (*i, v.clone() * c.clone())).collect() }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &Self, c: &S) -> Self {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((ia, va)), Some((ib, vb))) => {
                    if ia < ib {
                        out.push((*ia, va.clone()));
                        a.next();
                    } else if ib < ia {
                        let v = vb.clone() * c.clone();
                        if !v.is_zero() {
                            out.push((*ib, v));
                        }
                        b.next();
                    } else {
                        let v = va.clone() + vb.clone() * c.clone();
                        if !v.is_zero() {
                            out.push((*ia, v));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some((ia, va)), None) => {
                    out.push((*ia, va.clone()));
                    a.next();
                }
                (None, Some((ib, vb))) => {
                    let v = vb.clone() * c.clone();
                    if !v.is_zero() {
                        out.push((*ib, v));
                    }
                    b.next();
                }
                (None, None) => break,
            }
        }
        SparseVec { entries: out }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, &-S::one())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, &S::one())
    }

    pub fn to_dense(&self, len: usize) -> Vec<S> {
        let mut out = vec![S::zero(); len];
        for (i, v) in &self.entries {
            out[*i] = v.clone();
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SparseVec<T> {
        SparseVec::from_pairs(self.entries.iter().map(|(i, v)| (*i, f(v))))
    }
}

/// Unordered accumulation of `(index, value)` contributions.
#[derive(Debug, Default)]
pub struct Accumulator<S> {
    map: BTreeMap<usize, S>,
}

impl<S: Scalar> Accumulator<S> {
    pub fn new() -> Self {
        Accumulator { map: BTreeMap::new() }
    }

    pub fn add(&mut self, i: usize, v: S) {
        if v.is_zero() {
            return;
        }
        match self.map.get_mut(&i) {
            Some(slot) => *slot = slot.clone() + v,
            None => {
                self.map.insert(i, v);
            }
        }
    }

    pub fn add_vec(&mut self, v: &SparseVec<S>, c: &S) {
        for (i, x) in v.entries() {
            self.add(*i, x.clone() * c.clone());
        }
    }

    pub fn finish(self) -> SparseVec<S> {
        SparseVec::from_map(self.map)
    }
}

/// Linear map from the first `cols()` basis states into a `rows()`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<S> {
    rows: usize,
    columns: Vec<SparseVec<S>>,
}

impl<S: Scalar> SparseOperator<S> {
    pub fn from_columns(rows: usize, columns: Vec<SparseVec<S>>) -> Self {
        debug_assert!(columns.iter().all(|c| c.max_index().is_none_or(|m| m < rows)));
        SparseOperator { rows, columns }
    }

    /// Builds column `j` as `f(j)` for `j < cols`.
    pub fn from_fn<F>(exec: Execution, rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(usize) -> SparseVec<S> + Sync + Send,
    {
        Self::from_columns(rows, map_range(exec, cols, f))
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseOperator { rows, columns: vec![SparseVec::zero(); cols] }
    }

    pub fn identity(rows: usize, cols: usize) -> Self {
        SparseOperator { rows, columns: (0..cols).map(SparseVec::unit).collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &SparseVec<S> {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseVec<S>] {
        &self.columns
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.nnz()).sum()
    }

    pub fn entry(&self, i: usize, j: usize) -> S {
        self.columns[j].get(i)
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(|c| c.is_zero())
    }

    /// Applies the operator; every index of `v` must be a stored column.
    pub fn apply(&self, v: &SparseVec<S>) -> SparseVec<S> {
        let mut acc = Accumulator::new();
        for (j, x) in v.entries() {
            assert!(*j < self.cols(), "operator has no column {j} (only {} stored)", self.cols());
            acc.add_vec(&self.columns[*j], x);
        }
        acc.finish()
    }

    /// Keeps only the first `cols` columns.
    pub fn restrict_columns(&self, cols: usize) -> Self {
        assert!(cols <= self.cols());
        SparseOperator { rows: self.rows, columns: self.columns[..cols].to_vec() }
    }

    /// `self ∘ rhs` on the columns of `rhs`.
    pub fn compose(&self, rhs: &Self, exec: Execution) -> Self {
        SparseOperator::from_fn(exec, self.rows, rhs.cols(), |j| self.apply(rhs.column(j)))
    }

    pub fn add_scaled(&self, other: &Self, c: &S) -> Self {
        assert_eq!(self.cols(), other.cols(), "column count mismatch");
        let columns =
            self.columns.iter().zip(&other.columns).map(|(a, b)| a.add_scaled(b, c)).collect();
        SparseOperator { rows: self.rows.max(other.rows), columns }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, &-S::one())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, &S::one())
    }

    pub fn scale(&self, c: &S) -> Self {
        SparseOperator { rows: self.rows, columns: self.columns.iter().map(|v| v.scale(c)).collect() }
    }

    /// `self ∘ rhs − rhs ∘ self` on the common column prefix `cols`.
    pub fn commutator(&self, rhs: &Self, cols: usize, exec: Execution) -> Self {
        SparseOperator::from_fn(exec, self.rows.max(rhs.rows), cols, |j| {
            let ab = self.apply(rhs.column(j));
            let ba = rhs.apply(self.column(j));
            ab.sub(&ba)
        })
    }

    /// True when every stored entry lies on the diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.columns.iter().enumerate().all(|(j, c)| c.entries().iter().all(|(i, _)| *i == j))
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.cols()).map(|j| self.entry(j, j)).collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SparseOperator<T> {
        SparseOperator { rows: self.rows, columns: self.columns.iter().map(|c| c.map(&f)).collect() }
    }
}
