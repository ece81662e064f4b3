//! Exact oscillator algebra on a truncated Fock basis.
//!
//! `α_n^μ` with `n < 0` prepends a creation mode (dropping states above the
//! cutoff); with `n > 0` it contracts against existing modes through
//! `[α_m^μ, α_n^ν] = m δ_{m+n} η^{μν}`. Identities are only asserted on the
//! "safe" prefix of low levels where truncation cannot leak into the result.

use std::sync::OnceLock;

use num_traits::{One, Zero};

use crate::config::Metric;
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::fock_basis::{LevelBasis, ModeIndex};
use crate::linalg::{self, Signature};
use crate::scalar::{cq, q, Q, CQ};
use crate::sparse::{Accumulator, SparseOperator, SparseVec};

/// Result of `α_n^μ` acting on the basis state with index `idx`.
pub fn apply_alpha_state(
    basis: &LevelBasis,
    metric: &Metric,
    n: i64,
    mu: usize,
    idx: usize,
) -> SparseVec<Q> {
    let state = basis.state(idx);
    if n < 0 {
        let mode = ModeIndex::new((-n) as u32, mu as u32);
        if state.level() + mode.n as usize > basis.cutoff() {
            return SparseVec::zero();
        }
        let target = state.with_mode(mode);
        let j = basis.index_of(&target).expect("basis is closed under creation below the cutoff");
        SparseVec::unit(j)
    } else {
        // diagonal metric: only (n, μ) itself contracts
        let mode = ModeIndex::new(n as u32, mu as u32);
        let mult = state.multiplicity(mode);
        if mult == 0 {
            return SparseVec::zero();
        }
        let target = state.without_mode(mode).expect("mode present");
        let j = basis.index_of(&target).expect("basis is closed under annihilation");
        let coeff = q(n * mult as i64 * metric.sign(mu) as i64);
        SparseVec::from_pairs([(j, coeff)])
    }
}

pub fn apply_alpha(basis: &LevelBasis, metric: &Metric, n: i64, mu: usize, v: &SparseVec<Q>) -> SparseVec<Q> {
    let mut acc = Accumulator::new();
    for (j, c) in v.entries() {
        acc.add_vec(&apply_alpha_state(basis, metric, n, mu, *j), c);
    }
    acc.finish()
}

fn check_mode(basis: &LevelBasis, metric: &Metric, n: i64, mu: usize) -> Result<()> {
    if metric.directions() != basis.directions() {
        return Err(Error::Dimension(format!(
            "metric has {} directions, basis has {}",
            metric.directions(),
            basis.directions()
        )));
    }
    basis.check_direction(mu)?;
    if n == 0 {
        return Err(Error::InvalidConfig("α_0 is the center-of-mass momentum, not an oscillator".into()));
    }
    if n.unsigned_abs() as usize > basis.cutoff() {
        return Err(Error::ModeAboveCutoff { n, cutoff: basis.cutoff() });
    }
    Ok(())
}

/// `α_n^μ` on the whole basis.
pub fn alpha(n: i64, mu: usize, basis: &LevelBasis, metric: &Metric) -> Result<SparseOperator<Q>> {
    alpha_restricted(n, mu, basis, metric, basis.cutoff(), Execution::Sequential)
}

/// `α_n^μ` with columns only for source states of level `<= max_source_level`.
pub fn alpha_restricted(
    n: i64,
    mu: usize,
    basis: &LevelBasis,
    metric: &Metric,
    max_source_level: usize,
    exec: Execution,
) -> Result<SparseOperator<Q>> {
    check_mode(basis, metric, n, mu)?;
    let cols = basis.prefix_len(max_source_level);
    Ok(SparseOperator::from_fn(exec, basis.len(), cols, |j| apply_alpha_state(basis, metric, n, mu, j)))
}

/// Exact, symmetric, level-block-diagonal Fock inner product.
#[derive(Debug)]
pub struct IndefiniteGram {
    matrix: SparseOperator<Q>,
    level_ranges: Vec<std::ops::Range<usize>>,
    signature: OnceLock<Signature>,
}

impl IndefiniteGram {
    pub fn matrix(&self) -> &SparseOperator<Q> {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> Q {
        self.matrix.entry(i, j)
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// `⟨u, v⟩` for real rational vectors.
    pub fn pair(&self, u: &SparseVec<Q>, v: &SparseVec<Q>) -> Q {
        let gv = self.matrix.apply(v);
        dot(u, &gv)
    }

    /// Dense copy of the block for one level.
    pub fn level_block(&self, level: usize) -> Vec<Vec<Q>> {
        let r = self.level_ranges[level].clone();
        r.clone().map(|i| r.clone().map(|j| self.entry(i, j)).collect()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix
            .columns()
            .iter()
            .enumerate()
            .all(|(j, col)| col.entries().iter().all(|(i, v)| self.matrix.entry(j, *i) == *v))
    }

    pub fn is_block_diagonal(&self) -> bool {
        self.level_ranges.iter().all(|r| {
            r.clone().all(|j| self.matrix.column(j).entries().iter().all(|(i, _)| r.contains(i)))
        })
    }

    /// Exact inertia `(n₊, n₀, n₋)`, computed blockwise by symmetric-pivot LDLᵀ.
    pub fn signature(&self) -> Signature {
        *self.signature.get_or_init(|| {
            let mut total = Signature::default();
            for level in 0..self.level_ranges.len() {
                total = total + linalg::signature(self.level_block(level));
            }
            total
        })
    }

    pub fn level_signature(&self, level: usize) -> Signature {
        linalg::signature(self.level_block(level))
    }
}

pub fn dot(u: &SparseVec<Q>, v: &SparseVec<Q>) -> Q {
    let (a, b) = (u.entries(), v.entries());
    let (mut i, mut j) = (0, 0);
    let mut acc = Q::zero();
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += &a[i].1 * &b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Builds the Gram matrix level by level from `⟨α_{-n}^μ u', v⟩ = ⟨u', α_n^μ v⟩`
/// with `⟨Ω₀, Ω₀⟩ = 1`.
pub fn gram(basis: &LevelBasis, metric: &Metric) -> IndefiniteGram {
    gram_with(basis, metric, Execution::default())
}

pub fn gram_with(basis: &LevelBasis, metric: &Metric, exec: Execution) -> IndefiniteGram {
    // columns[v] holds the column ⟨·, v⟩
    let mut columns: Vec<SparseVec<Q>> = vec![SparseVec::unit(0)];
    for level in 1..=basis.cutoff() {
        let range = basis.level_range(level);
        let known = &columns;
        let new_cols = map_range(exec, range.len(), |local| {
            let v = range.start + local;
            let mut acc = Accumulator::new();
            let mut seen = std::collections::HashSet::new();
            for (mode, _) in basis.state(v).grouped() {
                let w = apply_alpha_state(basis, metric, mode.n as i64, mode.mu as usize, v);
                // ⟨u' + mode, v⟩ = Σ_w c_w ⟨u', w⟩
                let mut contrib: Accumulator<Q> = Accumulator::new();
                for (wi, cw) in w.entries() {
                    for (u_prime, g) in known[*wi].entries() {
                        contrib.add(*u_prime, g.clone() * cw.clone());
                    }
                }
                for (u_prime, val) in contrib.finish().into_entries() {
                    let u = basis.state(u_prime).with_mode(mode);
                    let ui = basis.index_of(&u).expect("level preserved");
                    if seen.insert(ui) {
                        acc.add(ui, val);
                    }
                }
            }
            acc.finish()
        });
        columns.extend(new_cols);
    }
    let level_ranges = (0..=basis.cutoff()).map(|l| basis.level_range(l)).collect();
    IndefiniteGram {
        matrix: SparseOperator::from_columns(basis.len(), columns),
        level_ranges,
        signature: OnceLock::new(),
    }
}

/// Operator of the form `coeff · n^{-1/2} · matrix` with a rational matrix.
#[derive(Debug, Clone)]
pub struct ScaledOperator {
    pub coeff: CQ,
    pub mode: u32,
    pub matrix: SparseOperator<Q>,
}

/// Operator of the form `coeff · radicand^{-1/2} · matrix`.
#[derive(Debug, Clone)]
pub struct RadicalOperator {
    pub coeff: CQ,
    pub radicand: u64,
    pub matrix: SparseOperator<Q>,
}

impl RadicalOperator {
    /// Rational value when `radicand` is a perfect square (or the matrix vanishes).
    pub fn to_exact(&self) -> Option<SparseOperator<CQ>> {
        if self.matrix.is_zero() {
            return Some(SparseOperator::zero(self.matrix.rows(), self.matrix.cols()));
        }
        let root = (self.radicand as f64).sqrt().round() as u64;
        if root * root != self.radicand {
            return None;
        }
        let c = CQ::new(self.coeff.re.clone() / q(root as i64), self.coeff.im.clone() / q(root as i64));
        Some(self.matrix.map(|x| CQ::new(x.clone(), Q::zero()) * c.clone()))
    }
}

impl ScaledOperator {
    /// `self ∘ rhs` on `cols` columns.
    pub fn compose(&self, rhs: &ScaledOperator, cols: usize, exec: Execution) -> RadicalOperator {
        RadicalOperator {
            coeff: self.coeff.clone() * rhs.coeff.clone(),
            radicand: self.mode as u64 * rhs.mode as u64,
            matrix: self.matrix.compose(&rhs.matrix.restrict_columns(cols), exec),
        }
    }

    /// `[self, rhs]` on `cols` columns; both factors carry the same coefficient product.
    pub fn commutator(&self, rhs: &ScaledOperator, cols: usize, exec: Execution) -> RadicalOperator {
        RadicalOperator {
            coeff: self.coeff.clone() * rhs.coeff.clone(),
            radicand: self.mode as u64 * rhs.mode as u64,
            matrix: self.matrix.commutator(&rhs.matrix, cols, exec),
        }
    }
}

/// `(a_n^k, (a_n^k)*)` from `α_n^k = -i√n a_n^k` and `α_{-n}^k = i√n (a_n^k)*`.
pub fn ladder_from_alpha(n: i64, k: usize, basis: &LevelBasis, metric: &Metric) -> Result<(ScaledOperator, ScaledOperator)> {
    if n < 1 {
        return Err(Error::InvalidConfig("ladder operators need n >= 1".into()));
    }
    if metric.negative_count() != 0 {
        return Err(Error::GaugeMismatch("ladder operators are defined on light-cone (transverse) directions".into()));
    }
    let i = cq(Q::zero(), Q::one());
    let annihilation = ScaledOperator { coeff: i.clone(), mode: n as u32, matrix: alpha(n, k, basis, metric)? };
    let creation = ScaledOperator { coeff: -i, mode: n as u32, matrix: alpha(-n, k, basis, metric)? };
    Ok((annihilation, creation))
}

/// `(X, P)` with `x_n^k = X/√2` and `p_n^k = P/√2`, both rational-complex matrices.
pub fn position_momentum(n: i64, k: usize, basis: &LevelBasis, metric: &Metric) -> Result<(SparseOperator<CQ>, SparseOperator<CQ>)> {
    // x = (2n)^{-1/2}(a* + a) = (i/(√2 n))(α_n − α_{-n});  p = i(n/2)^{1/2}(a* − a) = (α_{-n} + α_n)/√2
    let an = alpha(n, k, basis, metric)?;
    let cn = alpha(-n, k, basis, metric)?;
    let to_c = |m: &SparseOperator<Q>, c: CQ| m.map(|x| CQ::new(x.clone(), Q::zero()) * c.clone());
    let x = to_c(&an.sub(&cn), cq(Q::zero(), Q::one() / q(n)));
    let p = to_c(&cn.add(&an), cq(Q::one(), Q::zero()));
    Ok((x, p))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CcrRecord {
    pub m: i64,
    pub n: i64,
    pub mu: usize,
    pub nu: usize,
    pub safe_level: usize,
    pub pass: bool,
}

/// Cached `α_n^μ` for `1 <= |n| <= max_mode`, columns up to `max_source_level`.
pub struct AlphaTable {
    max_mode: usize,
    directions: usize,
    ops: Vec<SparseOperator<Q>>,
}

impl AlphaTable {
    pub fn new(basis: &LevelBasis, metric: &Metric, max_mode: usize, max_source_level: usize, exec: Execution) -> Result<Self> {
        let directions = basis.directions();
        let keys: Vec<(i64, usize)> = (1..=max_mode as i64)
            .flat_map(|n| [-n, n])
            .flat_map(|n| (0..directions).map(move |mu| (n, mu)))
            .collect();
        for &(n, mu) in &keys {
            check_mode(basis, metric, n, mu)?;
        }
        let ops = map_range(exec, keys.len(), |i| {
            let (n, mu) = keys[i];
            alpha_restricted(n, mu, basis, metric, max_source_level, Execution::Sequential)
                .expect("checked above")
        });
        Ok(AlphaTable { max_mode, directions, ops })
    }

    pub fn get(&self, n: i64, mu: usize) -> &SparseOperator<Q> {
        let k = n.unsigned_abs() as usize;
        assert!(k >= 1 && k <= self.max_mode && mu < self.directions);
        let slot = 2 * (k - 1) + usize::from(n > 0);
        &self.ops[slot * self.directions + mu]
    }
}

/// Checks `[α_m^μ, α_n^ν] = m δ_{m+n} η^{μν}` for all nonzero `m, n` with
/// `|m| + |n| <= max_sum` on the safe subspace of level `<= N − |m| − |n|`.
pub fn ccr_check(basis: &LevelBasis, metric: &Metric, max_sum: usize, exec: Execution) -> Result<Vec<CcrRecord>> {
    let cutoff = basis.cutoff();
    let max_sum = max_sum.min(cutoff);
    if max_sum < 2 {
        return Ok(Vec::new());
    }
    let table = AlphaTable::new(basis, metric, max_sum - 1, cutoff.saturating_sub(1), exec)?;
    let d = basis.directions();
    let mut pairs = Vec::new();
    for total in 2..=max_sum as i64 {
        for am in 1..total {
            let an = total - am;
            for (sm, sn) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                pairs.push((sm * am, sn * an));
            }
        }
    }
    let jobs: Vec<(i64, i64, usize, usize)> = pairs
        .iter()
        .flat_map(|&(m, n)| (0..d).flat_map(move |mu| (0..d).map(move |nu| (m, n, mu, nu))))
        .collect();
    let records = map_range(exec, jobs.len(), |i| {
        let (m, n, mu, nu) = jobs[i];
        let safe_level = cutoff - (m.unsigned_abs() + n.unsigned_abs()) as usize;
        let cols = basis.prefix_len(safe_level);
        let comm = table.get(m, mu).commutator(table.get(n, nu), cols, Execution::Sequential);
        let expected = if m + n == 0 && mu == nu { q(m * metric.sign(mu) as i64) } else { Q::zero() };
        let residual = comm.sub(&SparseOperator::identity(basis.len(), cols).scale(&expected));
        CcrRecord { m, n, mu, nu, safe_level, pass: residual.is_zero() }
    });
    Ok(records)
}
