//! Covariant constraints per mass level: `H′_r`, its isotropic part `H″_r`,
//! and the signature of the quotient `H^phys_r = H′_r / H″_r`.
//!
//! The quotient inertia is obtained from the Gram matrix `S = C G⁻¹ Cᵀ` of
//! the orthogonal complement of `H′ = ker C` (with `C` the stacked, row-reduced
//! `L_m`). For a nondegenerate `G`, `H′ ∩ H′^⊥` is the kernel of `S` and
//! `n±(H′) = n±(G) − n±(S) − n₀(S)`. The direct LDLᵀ of the Gram restricted to
//! `H′` is kept as an independent cross-check.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::config::{Gauge, Metric, ModelConfig};
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::fock_basis::{enumerate_basis, level_degeneracy, LevelBasis};
use crate::linalg::{self, Signature};
use crate::oscillator::{dot, gram_with, IndefiniteGram};
use crate::scalar::{q, qf, Q};
use crate::sparse::{Accumulator, SparseVec};
use crate::virasoro::{build_m2, OnShellMomentum, Virasoro};

#[derive(Debug)]
pub struct ConstraintSolution {
    pub r: Q,
    pub level: usize,
    pub momentum: OnShellMomentum,
    pub basis: LevelBasis,
    pub metric: Metric,
    pub gram: IndefiniteGram,
    /// Null-space basis of the stacked `L_m`, as vectors over the whole basis.
    pub basis_of_hprime: Vec<SparseVec<Q>>,
    /// Spanning set of `H′ ∩ H′^⊥`, linearly independent.
    pub radical_basis: Vec<SparseVec<Q>>,
    /// `(n₊, 0, n₋)` of the form induced on the quotient.
    pub quotient_signature: Signature,
    /// Rows of the reduced constraint matrix over the level-`ℓ` slice (local indices).
    constraint_rows: Vec<SparseVec<Q>>,
}

/// Level `ℓ` with `2ℓ − 2a = r`, if integral and nonnegative.
pub fn level_for_mass(r: &Q, a: &Q) -> Option<usize> {
    let twice = (r + a * q(2)) * qf(1, 2);
    if !twice.is_integer() || twice.is_negative() {
        return None;
    }
    twice.to_integer().to_usize()
}

/// Rational on-shell momentum `p = ((r+1)/2, (r−1)/2, 0, …)` with `p² = −r`.
pub fn default_momentum(r: &Q, d: usize) -> Vec<Q> {
    let mut p = vec![Q::zero(); d];
    p[0] = (r + q(1)) * qf(1, 2);
    p[1] = (r - q(1)) * qf(1, 2);
    p
}

pub fn solve_constraints(r: &Q, p: Vec<Q>, config: &ModelConfig, exec: Execution) -> Result<ConstraintSolution> {
    if config.gauge != Gauge::Covariant {
        return Err(Error::GaugeMismatch("constraints are imposed in the covariant formulation".into()));
    }
    let level = level_for_mass(r, &config.a).ok_or_else(|| Error::NotInSpectrum(r.to_string()))?;
    if level > config.level_cutoff {
        return Err(Error::NotInSpectrum(format!("{r} (level {level} above cutoff {})", config.level_cutoff)));
    }
    let metric = Metric::minkowski(config.d);
    let momentum = OnShellMomentum::new(r.clone(), p, &metric)?;
    let basis = enumerate_basis(config.d, level);
    let gram = gram_with(&basis, &metric, exec);
    let slice = basis.level_range(level);
    let offset = slice.start;
    let dim = slice.len();

    // stacked L_m, 1 <= m <= ℓ, restricted to the level-ℓ slice; L_m with m > ℓ vanish there
    let vir = Virasoro::new(&basis, &metric, momentum.p().to_vec())?;
    let columns: Vec<Vec<(usize, SparseVec<Q>)>> = map_range(exec, dim, |local| {
        (1..=level as i64).map(|m| (m as usize, vir.apply_l(m, offset + local))).collect()
    });
    let mut row_map: BTreeMap<usize, Vec<(usize, Q)>> = BTreeMap::new();
    for (local, per_m) in columns.into_iter().enumerate() {
        for (_, v) in per_m {
            for (i, x) in v.into_entries() {
                row_map.entry(i).or_default().push((local, x));
            }
        }
    }
    let rows: Vec<SparseVec<Q>> = row_map.into_values().map(SparseVec::from_pairs).collect();
    let reduced = linalg::rref(&rows, dim);
    let basis_of_hprime: Vec<SparseVec<Q>> = reduced
        .nullspace()
        .into_iter()
        .map(|v| SparseVec::from_pairs(v.into_entries().into_iter().map(|(i, x)| (i + offset, x))))
        .collect();
    let constraint_rows: Vec<SparseVec<Q>> = reduced.rows.into_iter().map(|(_, r)| r).collect();

    // the monomial Gram block is diagonal for a diagonal metric
    let diag: Vec<Q> = slice.clone().map(|i| gram.entry(i, i)).collect();
    let off_diagonal = slice.clone().any(|j| gram.matrix().column(j).nnz() > 1);
    if off_diagonal || diag.iter().any(|x| x.is_zero()) {
        return Err(Error::Dimension("level Gram block is not diagonal and invertible".into()));
    }
    let g_pos = diag.iter().filter(|x| x.is_positive()).count();
    let g_neg = dim - g_pos;

    // W = G⁻¹ C'ᵀ, S = C' W
    let w: Vec<SparseVec<Q>> = constraint_rows
        .iter()
        .map(|row| SparseVec::from_pairs(row.entries().iter().map(|(i, x)| (*i, x / &diag[*i]))))
        .collect();
    let c = constraint_rows.len();
    let s: Vec<Vec<Q>> = map_range(exec, c, |i| (0..c).map(|j| dot(&constraint_rows[i], &w[j])).collect());
    let s_sig = linalg::signature(s.clone());
    let ker = linalg::nullspace(&linalg::dense_rows(&s), c);
    let radical_basis: Vec<SparseVec<Q>> = ker
        .iter()
        .map(|y| {
            let mut acc = Accumulator::new();
            for (j, yj) in y.entries() {
                acc.add_vec(&w[*j], yj);
            }
            let v = acc.finish();
            SparseVec::from_pairs(v.into_entries().into_iter().map(|(i, x)| (i + offset, x)))
        })
        .collect();
    let quotient_signature = Signature::new(
        g_pos - s_sig.positive - s_sig.zero,
        0,
        g_neg - s_sig.negative - s_sig.zero,
    );
    Ok(ConstraintSolution {
        r: r.clone(),
        level,
        momentum,
        basis,
        metric,
        gram,
        basis_of_hprime,
        radical_basis,
        quotient_signature,
        constraint_rows,
    })
}

impl ConstraintSolution {
    pub fn dim_hprime(&self) -> usize {
        self.basis_of_hprime.len()
    }

    pub fn dim_radical(&self) -> usize {
        self.radical_basis.len()
    }

    pub fn dim_phys(&self) -> usize {
        self.dim_hprime() - self.dim_radical()
    }

    pub fn constraint_rank(&self) -> usize {
        self.constraint_rows.len()
    }

    /// Gram matrix restricted to `H′` in the null-space coordinates.
    pub fn gram_on_hprime(&self, exec: Execution) -> Vec<Vec<Q>> {
        let gk: Vec<SparseVec<Q>> = self.basis_of_hprime.iter().map(|k| self.gram.matrix().apply(k)).collect();
        let k = &self.basis_of_hprime;
        map_range(exec, k.len(), |i| (0..k.len()).map(|j| dot(&k[i], &gk[j])).collect())
    }

    /// Inertia of the Gram on `H′` by direct LDLᵀ; `n₀` must equal `dim H″`.
    pub fn direct_signature(&self, exec: Execution) -> Signature {
        linalg::signature(self.gram_on_hprime(exec))
    }

    /// Exact verification of every invariant of the solution.
    pub fn verify(&self, a: &Q, exec: Execution) -> Result<()> {
        let vir = Virasoro::new(&self.basis, &self.metric, self.momentum.p().to_vec())?;
        let m2 = build_m2(Gauge::Covariant, &self.basis, &self.metric, a, exec)?;
        let fail = |what: &str| Err(Error::Dimension(format!("constraint solution check failed: {what}")));
        let apply_l = |m: i64, v: &SparseVec<Q>| {
            let mut acc = Accumulator::new();
            for (j, x) in v.entries() {
                acc.add_vec(&vir.apply_l(m, *j), x);
            }
            acc.finish()
        };
        let ok = map_range(exec, self.basis_of_hprime.len(), |i| {
            let v = &self.basis_of_hprime[i];
            let mass = m2.apply(v).add_scaled(v, &-self.r.clone());
            mass.is_zero() && (1..=self.level as i64).all(|m| apply_l(m, v).is_zero())
        });
        if !ok.iter().all(|x| *x) {
            return fail("H′ vector violates M² = r or L_m = 0");
        }
        for v in &self.radical_basis {
            if !(1..=self.level as i64).all(|m| apply_l(m, v).is_zero()) {
                return fail("radical vector outside H′");
            }
        }
        let orth = map_range(exec, self.radical_basis.len(), |i| {
            let gv = self.gram.matrix().apply(&self.radical_basis[i]);
            self.basis_of_hprime.iter().all(|k| dot(k, &gv).is_zero())
        });
        if !orth.iter().all(|x| *x) {
            return fail("radical vector not orthogonal to H′");
        }
        let offset = self.basis.level_range(self.level).start;
        let local: Vec<SparseVec<Q>> = self
            .radical_basis
            .iter()
            .map(|v| SparseVec::from_pairs(v.entries().iter().map(|(i, x)| (i - offset, x.clone()))))
            .collect();
        if linalg::rref(&local, self.basis.level_count(self.level)).rank() != local.len() {
            return fail("radical spanning set is dependent");
        }
        Ok(())
    }
}

/// Quotient signature for an arbitrary `(d, a)`.
pub fn ghost_probe(r: &Q, p: Vec<Q>, d: usize, a: &Q, exec: Execution) -> Result<Signature> {
    let mut config = ModelConfig::new(d, a.clone(), Gauge::Covariant, 0);
    config.level_cutoff = level_for_mass(r, a).ok_or_else(|| Error::NotInSpectrum(r.to_string()))?;
    Ok(solve_constraints(r, p, &config.validate()?, exec)?.quotient_signature)
}

#[derive(Debug, Clone, Serialize)]
pub struct NoGhostRow {
    #[serde(serialize_with = "crate::util::serialize_q")]
    pub r: Q,
    pub level: usize,
    pub dim_hprime: usize,
    pub dim_radical: usize,
    pub dim_phys: usize,
    pub signature: Signature,
    pub lightcone_degeneracy: String,
    #[serde(rename = "match")]
    pub matches: bool,
}

/// One row per level `0..=max_level`, using [`default_momentum`] on each shell.
pub fn noghost_report(d: usize, a: &Q, max_level: usize, exec: Execution) -> Result<Vec<NoGhostRow>> {
    let config = ModelConfig::new(d, a.clone(), Gauge::Covariant, max_level).validate()?;
    (0..=max_level)
        .map(|level| {
            let r = q(2 * level as i64) - a * q(2);
            let sol = solve_constraints(&r, default_momentum(&r, d), &config, exec)?;
            let lc: BigUint = if d >= 2 { level_degeneracy(level, d - 2) } else { BigUint::zero() };
            let matches = sol.quotient_signature.is_positive_definite()
                && BigUint::from(sol.dim_phys()) == lc;
            Ok(NoGhostRow {
                r,
                level,
                dim_hprime: sol.dim_hprime(),
                dim_radical: sol.dim_radical(),
                dim_phys: sol.dim_phys(),
                signature: sol.quotient_signature,
                lightcone_degeneracy: lc.to_string(),
                matches,
            })
        })
        .collect()
}
