//! Virasoro generators `L_m`, the mass operator `M²` in both gauges and the
//! light-cone Hamiltonian `p⁻`, all as exact sparse operators.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::config::{Gauge, Metric};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock_basis::LevelBasis;
use crate::oscillator::{apply_alpha, apply_alpha_state, ladder_from_alpha};
use crate::scalar::{q, qf, Q, CQ};
use crate::sparse::{Accumulator, SparseOperator, SparseVec};

/// Minkowski square `η_{μν} p^μ p^ν`.
pub fn minkowski_square(p: &[Q], metric: &Metric) -> Q {
    p.iter().enumerate().map(|(mu, x)| x * x * q(metric.sign(mu) as i64)).sum()
}

/// A point `p` on the mass shell `V_r = {p : p² + r = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OnShellMomentum {
    r: Q,
    p: Vec<Q>,
}

impl OnShellMomentum {
    /// Requires `p² + r = 0`; for `r >= 0` also `p⁰ > 0` and `p ≠ 0`.
    pub fn new(r: Q, p: Vec<Q>, metric: &Metric) -> Result<Self> {
        if p.len() != metric.directions() {
            return Err(Error::Dimension(format!(
                "momentum has {} components, expected {}",
                p.len(),
                metric.directions()
            )));
        }
        let residual = minkowski_square(&p, metric) + &r;
        if !residual.is_zero() {
            return Err(Error::OffShell(residual.to_string()));
        }
        if !r.is_negative() {
            if p.iter().all(|x| x.is_zero()) {
                return Err(Error::InvalidMomentum("p = 0 is not allowed on the r >= 0 shells".into()));
            }
            if !p[0].is_positive() {
                return Err(Error::InvalidMomentum("positive shell requires p^0 > 0".into()));
            }
        }
        Ok(OnShellMomentum { r, p })
    }

    /// On-shell point with `r = -p²` (any sign of `p⁰` when `r < 0`).
    pub fn from_momentum(p: Vec<Q>, metric: &Metric) -> Result<Self> {
        let r = -minkowski_square(&p, metric);
        Self::new(r, p, metric)
    }

    pub fn r(&self) -> &Q {
        &self.r
    }

    pub fn p(&self) -> &[Q] {
        &self.p
    }
}

/// Light-cone momentum `(p⁺, p̃)` with `p⁺ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LightConeMomentum {
    p_plus: Q,
    p_tilde: Vec<Q>,
}

impl LightConeMomentum {
    pub fn new(p_plus: Q, p_tilde: Vec<Q>) -> Result<Self> {
        if !p_plus.is_positive() {
            return Err(Error::InvalidMomentum("light-cone gauge requires p+ > 0".into()));
        }
        Ok(LightConeMomentum { p_plus, p_tilde })
    }

    pub fn p_plus(&self) -> &Q {
        &self.p_plus
    }

    pub fn p_tilde_sq(&self) -> Q {
        self.p_tilde.iter().map(|x| x * x).sum()
    }
}

/// Covariant oscillator data plus a fixed center-of-mass momentum.
pub struct Virasoro<'a> {
    basis: &'a LevelBasis,
    metric: &'a Metric,
    momentum: Vec<Q>,
    half_p_sq: Q,
}

impl<'a> Virasoro<'a> {
    pub fn new(basis: &'a LevelBasis, metric: &'a Metric, momentum: Vec<Q>) -> Result<Self> {
        if metric.directions() != basis.directions() || momentum.len() != metric.directions() {
            return Err(Error::Dimension("basis, metric and momentum must share the direction count".into()));
        }
        let half_p_sq = minkowski_square(&momentum, metric) * qf(1, 2);
        Ok(Virasoro { basis, metric, momentum, half_p_sq })
    }

    pub fn basis(&self) -> &LevelBasis {
        self.basis
    }

    pub fn directions(&self) -> usize {
        self.metric.directions()
    }

    // α_second^μ α_first^μ on a basis state
    fn pair_on_state(&self, first: i64, second: i64, mu: usize, idx: usize) -> SparseVec<Q> {
        let w = apply_alpha_state(self.basis, self.metric, first, mu, idx);
        if w.is_zero() {
            return w;
        }
        apply_alpha(self.basis, self.metric, second, mu, &w)
    }

    // directions that can be annihilated by α_n on this state
    fn annihilable(&self, n: i64, idx: usize) -> Vec<usize> {
        let mut mus: Vec<usize> = self
            .basis
            .state(idx)
            .modes()
            .iter()
            .filter(|m| m.n as i64 == n)
            .map(|m| m.mu as usize)
            .collect();
        mus.dedup();
        mus
    }

    /// `L_m e_idx` with `L_0 = ½p² + Σ_{n≥1} α_{-n}·α_n` and, for `m ≠ 0`,
    /// `L_m = α_m·p + ½ Σ_{n≠0,m} α_{m-n}·α_n` (annihilators applied first).
    pub fn apply_l(&self, m: i64, idx: usize) -> SparseVec<Q> {
        let cutoff = self.basis.cutoff() as i64;
        let mut acc: Accumulator<Q> = Accumulator::new();
        let eta = |mu: usize| q(self.metric.sign(mu) as i64);
        if m == 0 {
            acc.add(idx, self.half_p_sq.clone());
            for n in 1..=cutoff {
                for mu in self.annihilable(n, idx) {
                    acc.add_vec(&self.pair_on_state(n, -n, mu, idx), &eta(mu));
                }
            }
            return acc.finish();
        }
        if m.abs() <= cutoff {
            for (mu, pmu) in self.momentum.iter().enumerate() {
                if pmu.is_zero() {
                    continue;
                }
                let v = apply_alpha_state(self.basis, self.metric, m, mu, idx);
                acc.add_vec(&v, &(pmu * eta(mu)));
            }
        }
        let half = qf(1, 2);
        let lo = (-cutoff).max(m - cutoff);
        let hi = cutoff.min(m + cutoff);
        for k in lo..=hi {
            if k == 0 || k == m {
                continue;
            }
            let (left, right) = (m - k, k);
            // normal order: a positive (annihilating) index acts first
            let (first, second) = if left > 0 && right < 0 { (left, right) } else { (right, left) };
            let mus: Vec<usize> = if first > 0 {
                self.annihilable(first, idx)
            } else {
                (0..self.directions()).collect()
            };
            for mu in mus {
                let v = self.pair_on_state(first, second, mu, idx);
                acc.add_vec(&v, &(eta(mu) * &half));
            }
        }
        acc.finish()
    }

    /// `L_m` with columns for sources of level `<= max_source_level`.
    pub fn build_l(&self, m: i64, max_source_level: usize, exec: Execution) -> SparseOperator<Q> {
        let cols = self.basis.prefix_len(max_source_level);
        SparseOperator::from_fn(exec, self.basis.len(), cols, |j| self.apply_l(m, j))
    }

    pub fn build_l0(&self, exec: Execution) -> SparseOperator<Q> {
        self.build_l(0, self.basis.cutoff(), exec)
    }

    pub fn build_lm(&self, m: i64, exec: Execution) -> Result<SparseOperator<Q>> {
        if m.unsigned_abs() as usize > self.basis.cutoff() {
            return Err(Error::ModeAboveCutoff { n: m, cutoff: self.basis.cutoff() });
        }
        Ok(self.build_l(m, self.basis.cutoff(), exec))
    }

    /// Level of the safe subspace for the pair `(m, n)`.
    pub fn safe_level(&self, m: i64, n: i64) -> Option<usize> {
        let used = (m.unsigned_abs() + n.unsigned_abs()) as usize;
        self.basis.cutoff().checked_sub(used)
    }

    /// `[L_m, L_n] − (m−n) L_{m+n} − (c/12)(m³−m) δ_{m+n,0}` on the safe subspace,
    /// with `c` equal to the number of oscillator directions.
    pub fn bracket_residual(&self, m: i64, n: i64, exec: Execution) -> Result<SparseOperator<Q>> {
        self.bracket_residual_with_central(m, n, &q(self.directions() as i64), exec)
    }

    pub fn bracket_residual_with_central(&self, m: i64, n: i64, c: &Q, exec: Execution) -> Result<SparseOperator<Q>> {
        let safe = self.safe_level(m, n).ok_or(Error::ModeAboveCutoff { n: m.abs() + n.abs(), cutoff: self.basis.cutoff() })?;
        let lm = self.build_l(m, safe + n.unsigned_abs() as usize, exec);
        let ln = self.build_l(n, safe + m.unsigned_abs() as usize, exec);
        let lmn = self.build_l(m + n, safe, exec);
        let cols = self.basis.prefix_len(safe);
        let comm = SparseOperator::from_fn(exec, self.basis.len(), cols, |j| {
            lm.apply(ln.column(j)).sub(&ln.apply(lm.column(j)))
        });
        let mut residual = comm.sub(&lmn.scale(&q(m - n)));
        if m + n == 0 {
            let central = c * q(m * m * m - m) / q(12);
            residual = residual.sub(&SparseOperator::identity(self.basis.len(), cols).scale(&central));
        }
        Ok(residual)
    }

    /// Measures the central charge from `([L_2, L_{-2}] − 4 L_0) Ω₀ = (c/2) Ω₀`.
    pub fn fit_central_charge(&self) -> Result<Q> {
        if self.basis.cutoff() < 2 {
            return Err(Error::ModeAboveCutoff { n: 2, cutoff: self.basis.cutoff() });
        }
        let vac = self.basis.vacuum_index();
        let lm2 = self.apply_l(-2, vac);
        let mut acc = Accumulator::new();
        for (j, c) in lm2.entries() {
            acc.add_vec(&self.apply_l(2, *j), c);
        }
        let l2 = self.apply_l(2, vac);
        for (j, c) in l2.entries() {
            acc.add_vec(&self.apply_l(-2, *j), &-c.clone());
        }
        acc.add_vec(&self.apply_l(0, vac), &q(-4));
        let v = acc.finish();
        let coeff = v.get(vac);
        if v.entries().iter().any(|(i, _)| *i != vac) {
            return Err(Error::Dimension("central term is not proportional to the vacuum".into()));
        }
        Ok(coeff * q(2))
    }
}

/// `M² = 2 Σ_n α_{-n}·α_n − 2a` (covariant) or `2(Σ_n Σ_k n (a_n^k)* a_n^k − a)` (light cone).
pub fn build_m2(gauge: Gauge, basis: &LevelBasis, metric: &Metric, a: &Q, exec: Execution) -> Result<SparseOperator<Q>> {
    let n_states = basis.len();
    let number = match gauge {
        Gauge::Covariant => {
            if metric.directions() != basis.directions() {
                return Err(Error::Dimension("metric/basis direction mismatch".into()));
            }
            let zero = vec![Q::zero(); metric.directions()];
            let vir = Virasoro::new(basis, metric, zero)?;
            vir.build_l(0, basis.cutoff(), exec)
        }
        Gauge::LightCone => {
            let mut total = SparseOperator::zero(n_states, n_states);
            for n in 1..=basis.cutoff() as i64 {
                for k in 0..basis.directions() {
                    let (ann, cre) = ladder_from_alpha(n, k, basis, metric)?;
                    let number = cre.compose(&ann, n_states, exec);
                    let exact = number.to_exact().expect("a* a has a rational prefactor");
                    total = total.add(&real_part(&exact)?.scale(&q(n)));
                }
            }
            total
        }
    };
    Ok(number.scale(&q(2)).sub(&SparseOperator::identity(n_states, n_states).scale(&(a * q(2)))))
}

fn real_part(op: &SparseOperator<CQ>) -> Result<SparseOperator<Q>> {
    if op.columns().iter().any(|c| c.entries().iter().any(|(_, v)| !v.im.is_zero())) {
        return Err(Error::Dimension("operator has an imaginary part".into()));
    }
    Ok(op.map(|v| v.re.clone()))
}

/// `p⁻ = (p̃² + M²) / (2 p⁺)` on the transverse Fock space.
pub fn build_p_minus(pm: &LightConeMomentum, basis: &LevelBasis, metric: &Metric, a: &Q, exec: Execution) -> Result<SparseOperator<Q>> {
    let m2 = build_m2(Gauge::LightCone, basis, metric, a, exec)?;
    let n = basis.len();
    let shifted = m2.add(&SparseOperator::identity(n, n).scale(&pm.p_tilde_sq()));
    Ok(shifted.scale(&(Q::one() / (pm.p_plus() * q(2)))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub level: usize,
    #[serde(serialize_with = "crate::util::serialize_q")]
    pub mass_squared: Q,
    pub degeneracy: usize,
}

/// Reads the spectrum off a mass operator that must be diagonal in the monomial basis.
pub fn mass_spectrum(m2: &SparseOperator<Q>, basis: &LevelBasis) -> Result<Vec<SpectrumRow>> {
    if !m2.is_diagonal() {
        return Err(Error::Dimension("mass operator is not diagonal in the monomial basis".into()));
    }
    let diag = m2.diagonal();
    let mut rows: BTreeMap<(usize, Q), usize> = BTreeMap::new();
    for (i, v) in diag.iter().enumerate() {
        *rows.entry((basis.level_of(i), v.clone())).or_default() += 1;
    }
    Ok(rows
        .into_iter()
        .map(|((level, mass_squared), degeneracy)| SpectrumRow { level, mass_squared, degeneracy })
        .collect())
}
