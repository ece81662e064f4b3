//! Exact rational linear algebra: sparse row reduction, null spaces and the
//! inertia of symmetric matrices via symmetric-pivot LDLᵀ.

use std::ops::Add;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::scalar::Q;
use crate::sparse::SparseVec;

/// Inertia of a symmetric form.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Signature {
    pub positive: usize,
    pub zero: usize,
    pub negative: usize,
}

impl Signature {
    pub fn new(positive: usize, zero: usize, negative: usize) -> Self {
        Signature { positive, zero, negative }
    }

    pub fn dim(&self) -> usize {
        self.positive + self.zero + self.negative
    }

    pub fn is_positive_definite(&self) -> bool {
        self.zero == 0 && self.negative == 0
    }
}

impl Add for Signature {
    type Output = Signature;

    fn add(self, o: Signature) -> Signature {
        Signature::new(self.positive + o.positive, self.zero + o.zero, self.negative + o.negative)
    }
}

/// Reduced row echelon form of a sparse matrix given by rows.
#[derive(Debug, Clone)]
pub struct Rref {
    pub ncols: usize,
    /// `(pivot column, row)`; each row has a 1 at its pivot and zeros at all other pivots.
    pub rows: Vec<(usize, SparseVec<Q>)>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|(p, _)| *p).collect()
    }

    /// Basis of `{x : A x = 0}`, one vector per free column (in increasing order).
    pub fn nullspace(&self) -> Vec<SparseVec<Q>> {
        let pivots: std::collections::HashSet<usize> = self.rows.iter().map(|(p, _)| *p).collect();
        let free: Vec<usize> = (0..self.ncols).filter(|c| !pivots.contains(c)).collect();
        let mut slot = vec![usize::MAX; self.ncols];
        for (k, f) in free.iter().enumerate() {
            slot[*f] = k;
        }
        let mut entries: Vec<Vec<(usize, Q)>> = free.iter().map(|f| vec![(*f, Q::one())]).collect();
        for (p, row) in &self.rows {
            for (c, v) in row.entries() {
                if c != p {
                    entries[slot[*c]].push((*p, -v.clone()));
                }
            }
        }
        entries.into_iter().map(SparseVec::from_pairs).collect()
    }
}

/// Row-reduces `rows` (each a sparse row over `ncols` columns).
pub fn rref(rows: &[SparseVec<Q>], ncols: usize) -> Rref {
    let mut reduced: Vec<(usize, SparseVec<Q>)> = Vec::new();
    let mut pivot_row = vec![usize::MAX; ncols];
    for row in rows {
        let mut r = row.clone();
        // eliminate existing pivots; reduced rows only touch free columns
        let hits: Vec<(usize, Q)> = r
            .entries()
            .iter()
            .filter(|(c, _)| pivot_row[*c] != usize::MAX)
            .cloned()
            .collect();
        for (c, v) in hits {
            r = r.add_scaled(&reduced[pivot_row[c]].1, &-v);
        }
        let Some(&(p, ref lead)) = r.entries().first() else { continue };
        let r = r.scale(&(Q::one() / lead.clone()));
        for (_, other) in reduced.iter_mut() {
            let v = other.get(p);
            if !v.is_zero() {
                *other = other.add_scaled(&r, &-v);
            }
        }
        pivot_row[p] = reduced.len();
        reduced.push((p, r));
    }
    reduced.sort_by_key(|(p, _)| *p);
    Rref { ncols, rows: reduced }
}

pub fn nullspace(rows: &[SparseVec<Q>], ncols: usize) -> Vec<SparseVec<Q>> {
    rref(rows, ncols).nullspace()
}

/// Exact inertia of a symmetric matrix by LDLᵀ with symmetric pivoting.
///
/// When every remaining diagonal entry vanishes but some `a_ij` does not, the
/// congruence `e_i ← e_i + e_j` creates the diagonal entry `2 a_ij`.
pub fn signature(mut a: Vec<Vec<Q>>) -> Signature {
    let n = a.len();
    debug_assert!(a.iter().all(|r| r.len() == n));
    let mut active: Vec<usize> = (0..n).collect();
    let mut sig = Signature::default();
    while !active.is_empty() {
        let pivot = active
            .iter()
            .copied()
            .filter(|&k| !a[k][k].is_zero())
            .min_by_key(|&k| active.iter().filter(|&&c| !a[k][c].is_zero()).count());
        let k = match pivot {
            Some(k) => k,
            None => {
                let off = active.iter().copied().find_map(|i| {
                    active.iter().copied().find(|&j| j != i && !a[i][j].is_zero()).map(|j| (i, j))
                });
                match off {
                    None => {
                        sig.zero += active.len();
                        break;
                    }
                    Some((i, j)) => {
                        for &c in &active {
                            let v = a[j][c].clone();
                            a[i][c] += v;
                        }
                        for &r in &active {
                            let v = a[r][j].clone();
                            a[r][i] += v;
                        }
                        i
                    }
                }
            }
        };
        let pivot_val = a[k][k].clone();
        if pivot_val.is_positive() {
            sig.positive += 1;
        } else {
            sig.negative += 1;
        }
        active.retain(|&x| x != k);
        let pivot_row: Vec<(usize, Q)> = active
            .iter()
            .filter(|&&c| !a[k][c].is_zero())
            .map(|&c| (c, a[k][c].clone()))
            .collect();
        let inv = Q::one() / pivot_val;
        for &(r, ref ark) in &pivot_row {
            let factor = ark * &inv;
            for (c, akc) in &pivot_row {
                let delta = &factor * akc;
                a[r][*c] -= delta;
            }
        }
    }
    sig
}

/// Dense helper: rows of a matrix as sparse rows.
pub fn dense_rows(a: &[Vec<Q>]) -> Vec<SparseVec<Q>> {
    a.iter().map(|r| SparseVec::from_dense(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<Q>> {
        rows.iter().map(|r| r.iter().map(|x| q(*x)).collect()).collect()
    }

    #[test]
    fn inertia_of_hyperbolic_plane() {
        assert_eq!(signature(m(&[&[0, 1], &[1, 0]])), Signature::new(1, 0, 1));
    }

    #[test]
    fn inertia_with_kernel() {
        assert_eq!(signature(m(&[&[1, 1], &[1, 1]])), Signature::new(1, 1, 0));
        assert_eq!(signature(m(&[&[0, 0], &[0, 0]])), Signature::new(0, 2, 0));
        assert_eq!(signature(m(&[&[2, 0, 0], &[0, -3, 0], &[0, 0, 0]])), Signature::new(1, 1, 1));
    }

    #[test]
    fn nullspace_of_rank_one() {
        let rows = dense_rows(&m(&[&[1, 2, 3], &[2, 4, 6]]));
        let ns = nullspace(&rows, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for r in &rows {
                let s: Q = r.entries().iter().map(|(i, x)| x * v.get(*i)).sum();
                assert!(s.is_zero());
            }
        }
    }

    proptest! {
        // inertia is invariant under congruence by an invertible triangular matrix
        #[test]
        fn inertia_congruence_invariant(d in proptest::collection::vec(-2i64..=2, 4),
                                        l in proptest::collection::vec(-3i64..=3, 6)) {
            let n = 4;
            let mut lower = vec![vec![q(0); n]; n];
            let mut k = 0;
            for i in 0..n {
                lower[i][i] = q(1);
                for j in 0..i {
                    lower[i][j] = q(l[k]);
                    k += 1;
                }
            }
            // A = L D Lᵀ
            let mut a = vec![vec![q(0); n]; n];
            for i in 0..n {
                for j in 0..n {
                    for t in 0..n {
                        a[i][j] += &lower[i][t] * q(d[t]) * &lower[j][t];
                    }
                }
            }
            let expect = Signature::new(
                d.iter().filter(|x| **x > 0).count(),
                d.iter().filter(|x| **x == 0).count(),
                d.iter().filter(|x| **x < 0).count(),
            );
            prop_assert_eq!(signature(a.clone()), expect);
            let ns = nullspace(&dense_rows(&a), n);
            prop_assert_eq!(ns.len(), expect.zero);
        }
    }
}
