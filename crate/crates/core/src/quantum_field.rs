//! Second quantization over the positive-energy one-string space.
//!
//! A one-string vector is stored per mass level as a sum of rank-one terms
//! `a(p̃) ⊗ x`: complex amplitudes on a midpoint grid over the shell
//! `p⁰ = +√(p̃² + r)` and an exact internal Fock vector. The multi-string space
//! is spanned by monomials `∏ a*(uᵢ)^{kᵢ} Ω` over a finite dictionary `{uᵢ}`,
//! truncated at a total particle number.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_range, map_slice, Execution};
use crate::propagator::{smeared_commutator, TimeDomain};
use crate::scalar::{q, q_to_f64, Q};
use crate::smearing::{InternalSpace, SmearingFunction, SpacetimeBump};
use crate::sparse::{Accumulator, SparseVec};
use crate::virasoro::Virasoro;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellControls {
    /// Half-width of the momentum box in each spatial direction.
    pub cutoff: f64,
    pub step: f64,
}

impl Default for ShellControls {
    fn default() -> Self {
        ShellControls { cutoff: 60.0, step: 0.05 }
    }
}

/// Midpoint nodes on `[−Λ, Λ]^{d_cm−1}` lifted to `V_r⁺`, weights `dp̃ / (2p⁰)`.
#[derive(Debug, Clone)]
pub struct ShellGrid {
    pub r: f64,
    pub momenta: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ShellGrid {
    pub fn new(r: f64, d_cm: usize, controls: &ShellControls) -> Result<Self> {
        if r < 0.0 {
            return Err(Error::InvalidConfig(format!("r = {r} has no positive-energy shell in H₊")));
        }
        if d_cm < 2 {
            return Err(Error::Dimension("d_cm must be at least 2".into()));
        }
        let dims = d_cm - 1;
        let per_axis = (2.0 * controls.cutoff / controls.step).round() as usize;
        let total = per_axis.pow(dims as u32);
        let cell = controls.step.powi(dims as i32);
        let mut momenta = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let mut p = vec![0.0; dims];
            for slot in p.iter_mut().rev() {
                let k = rest % per_axis;
                rest /= per_axis;
                *slot = -controls.cutoff + (k as f64 + 0.5) * controls.step;
            }
            momenta.push(p);
        }
        let energies: Vec<f64> = momenta.iter().map(|p| (p.iter().map(|x| x * x).sum::<f64>() + r).sqrt()).collect();
        let weights = energies.iter().map(|w| cell / (2.0 * w)).collect();
        Ok(ShellGrid { r, momenta, energies, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(p⁰, p̃)` at node `k`.
    pub fn four_momentum(&self, k: usize) -> Vec<f64> {
        std::iter::once(self.energies[k]).chain(self.momenta[k].iter().cloned()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ShellTerm {
    pub amplitudes: Vec<Complex64>,
    pub internal: SparseVec<Q>,
}

#[derive(Debug, Clone)]
pub struct ShellComponent {
    pub level: usize,
    pub grid: Arc<ShellGrid>,
    pub terms: Vec<ShellTerm>,
}

#[derive(Debug, Clone, Default)]
pub struct OneStringVector {
    pub components: Vec<ShellComponent>,
}

impl OneStringVector {
    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.terms.is_empty())
    }

    pub fn levels(&self) -> Vec<usize> {
        self.components.iter().filter(|c| !c.terms.is_empty()).map(|c| c.level).collect()
    }
}

/// Shared data for field computations: internal space, `d_cm` and shell grids.
#[derive(Debug)]
pub struct FieldContext {
    pub space: InternalSpace,
    pub d_cm: usize,
    pub controls: ShellControls,
    grids: HashMap<usize, Arc<ShellGrid>>,
}

impl FieldContext {
    pub fn new(space: InternalSpace, d_cm: usize, controls: ShellControls) -> Result<Self> {
        if d_cm < 2 || d_cm > space.basis.directions() {
            return Err(Error::Dimension(format!("d_cm = {d_cm} must lie in [2, d]")));
        }
        let mut grids = HashMap::new();
        for level in 0..=space.basis.cutoff() {
            let r = space.mass_squared_f64(level);
            if r >= 0.0 {
                grids.insert(level, Arc::new(ShellGrid::new(r, d_cm, &controls)?));
            }
        }
        Ok(FieldContext { space, d_cm, controls, grids })
    }

    pub fn shell(&self, level: usize) -> Option<&Arc<ShellGrid>> {
        self.grids.get(&level)
    }

    fn check(&self, f: &SmearingFunction) -> Result<()> {
        if f.d_cm() != self.d_cm {
            return Err(Error::Dimension(format!("test function has d_cm = {}, context {}", f.d_cm(), self.d_cm)));
        }
        Ok(())
    }

    /// `(Π₊F)_r(p) = √(2π) F̃(p) P_r f`; levels with `r < 0` are dropped.
    pub fn pi_plus(&self, f: &SmearingFunction, exec: Execution) -> Result<OneStringVector> {
        self.check(f)?;
        let mut components = Vec::new();
        for level in self.space.levels(&f.internal) {
            let Some(grid) = self.grids.get(&level) else { continue };
            let scale = (2.0 * PI).sqrt();
            let amplitudes = map_range(exec, grid.len(), |k| scale * f.spacetime.fourier(&grid.four_momentum(k)));
            components.push(ShellComponent {
                level,
                grid: grid.clone(),
                terms: vec![ShellTerm { amplitudes, internal: self.space.level_part(&f.internal, level) }],
            });
        }
        Ok(OneStringVector { components })
    }

    /// `⟨u, v⟩ = Σ_r ∫ dμ_r ⟨u_r(p), v_r(p)⟩_F`, antilinear in `u`.
    pub fn pairing(&self, u: &OneStringVector, v: &OneStringVector) -> Complex64 {
        let mut total = Complex64::zero();
        for cu in &u.components {
            for cv in v.components.iter().filter(|c| c.level == cu.level) {
                for tu in &cu.terms {
                    for tv in &cv.terms {
                        let internal = self.space.pair_f64(&tu.internal, &tv.internal);
                        if internal == 0.0 {
                            continue;
                        }
                        let s: Complex64 = cu
                            .grid
                            .weights
                            .iter()
                            .zip(tu.amplitudes.iter().zip(&tv.amplitudes))
                            .map(|(w, (a, b))| a.conj() * b * w)
                            .sum();
                        total += s * internal;
                    }
                }
            }
        }
        total
    }

    /// Applies every `L_m`, `1 ≤ m ≤ ℓ`, at every node of `Π₊F`.
    pub fn observable_check(&self, f: &SmearingFunction, tolerance: f64, exec: Execution) -> Result<ObservableReport> {
        let u = self.pi_plus(f, exec)?;
        let d = self.space.basis.directions();
        let zero_p = vec![Q::zero(); d];
        let base = Virasoro::new(&self.space.basis, &self.space.metric, zero_p)?;
        let unit: Vec<Virasoro> = (0..self.d_cm)
            .map(|mu| {
                let mut p = vec![Q::zero(); d];
                p[mu] = q(1);
                Virasoro::new(&self.space.basis, &self.space.metric, p)
            })
            .collect::<Result<_>>()?;
        let apply = |vir: &Virasoro, m: i64, x: &SparseVec<Q>| {
            let mut acc = Accumulator::new();
            for (j, c) in x.entries() {
                acc.add_vec(&vir.apply_l(m, *j), c);
            }
            acc.finish()
        };
        let mut levels = Vec::new();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for comp in &u.components {
            // L_m(p) x = L_m(0) x + Σ_μ p^μ (L_m(e_μ) − L_m(0)) x, exactly; then evaluated per node
            let mut per_m = Vec::new();
            for m in 1..=comp.level as i64 {
                let parts: Vec<(Vec<(usize, f64)>, Vec<Vec<(usize, f64)>>)> = comp
                    .terms
                    .iter()
                    .map(|t| {
                        let b = apply(&base, m, &t.internal);
                        let a: Vec<Vec<(usize, f64)>> =
                            unit.iter().map(|v| to_f64(&apply(v, m, &t.internal).sub(&b))).collect();
                        (to_f64(&b), a)
                    })
                    .collect();
                per_m.push(parts);
            }
            let internal_f64: Vec<Vec<(usize, f64)>> = comp.terms.iter().map(|t| to_f64(&t.internal)).collect();
            let node = |k: usize| {
                let p = comp.grid.four_momentum(k);
                let mut norm_sq = HashMap::<usize, Complex64>::new();
                for (t, x) in comp.terms.iter().zip(&internal_f64) {
                    for (i, c) in x {
                        *norm_sq.entry(*i).or_default() += t.amplitudes[k] * c;
                    }
                }
                let size = norm_sq.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let mut res = 0.0f64;
                for parts in &per_m {
                    let mut out = HashMap::<usize, Complex64>::new();
                    for (t, (b, a)) in comp.terms.iter().zip(parts) {
                        let amp = t.amplitudes[k];
                        for (i, c) in b {
                            *out.entry(*i).or_default() += amp * c;
                        }
                        for (mu, a_mu) in a.iter().enumerate() {
                            for (i, c) in a_mu {
                                *out.entry(*i).or_default() += amp * (p[mu] * c);
                            }
                        }
                    }
                    res = res.max(out.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
                }
                (res, size)
            };
            let samples = map_range(exec, comp.grid.len(), node);
            let level_worst = samples.iter().fold(0.0f64, |m, s| m.max(s.0));
            scale = samples.iter().fold(scale, |m, s| m.max(s.1));
            worst = worst.max(level_worst);
            levels.push(LevelResidual { level: comp.level, r: comp.grid.r, max_residual: level_worst, nodes: comp.grid.len() });
        }
        let relative = if scale > 0.0 { worst / scale } else { 0.0 };
        Ok(ObservableReport { observable: relative <= tolerance, max_residual: worst, relative_residual: relative, tolerance, levels })
    }
}

fn to_f64(v: &SparseVec<Q>) -> Vec<(usize, f64)> {
    v.entries().iter().map(|(i, x)| (*i, q_to_f64(x))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelResidual {
    pub level: usize,
    pub r: f64,
    pub max_residual: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableReport {
    pub observable: bool,
    pub max_residual: f64,
    /// `max_residual / max_p ‖(Π₊F)(p)‖`.
    pub relative_residual: f64,
    pub tolerance: f64,
    pub levels: Vec<LevelResidual>,
}

/// Coefficients over the monomial basis of a [`MultiStringSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStringState(pub Vec<Complex64>);

/// Symmetric Fock space over a dictionary, truncated at `cutoff` particles.
#[derive(Debug, Clone)]
pub struct MultiStringSpace {
    pub overlaps: Vec<Vec<Complex64>>,
    pub cutoff: usize,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl MultiStringSpace {
    pub fn new(ctx: &FieldContext, dictionary: &[OneStringVector], cutoff: usize) -> Self {
        let overlaps = dictionary.iter().map(|u| dictionary.iter().map(|v| ctx.pairing(u, v)).collect()).collect();
        Self::from_overlaps(overlaps, cutoff)
    }

    /// From the one-string Gram `⟨uᵢ, uⱼ⟩` directly.
    pub fn from_overlaps(overlaps: Vec<Vec<Complex64>>, cutoff: usize) -> Self {
        let k = overlaps.len();
        let mut states: Vec<Vec<u32>> = vec![vec![0; k]];
        let mut frontier = states.clone();
        for _ in 0..cutoff {
            let mut next = Vec::new();
            for s in &frontier {
                // extend only at or after the last occupied slot so each multiset appears once
                let last = s.iter().rposition(|&c| c > 0).unwrap_or(0);
                for i in last..k {
                    let mut t = s.clone();
                    t[i] += 1;
                    next.push(t);
                }
            }
            states.extend(next.iter().cloned());
            frontier = next;
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        MultiStringSpace { overlaps, cutoff, states, index }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn occupation(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn particle_number(&self, i: usize) -> usize {
        self.states[i].iter().map(|&c| c as usize).sum()
    }

    pub fn vacuum(&self) -> MultiStringState {
        self.basis_state(0)
    }

    pub fn basis_state(&self, i: usize) -> MultiStringState {
        let mut c = vec![Complex64::zero(); self.dim()];
        c[i] = Complex64::new(1.0, 0.0);
        MultiStringState(c)
    }

    /// `a*(uᵢ)`; components pushed past the cutoff are dropped.
    pub fn create(&self, i: usize, x: &MultiStringState) -> MultiStringState {
        let mut out = vec![Complex64::zero(); self.dim()];
        for (s, c) in x.0.iter().enumerate() {
            if c.is_zero() || self.particle_number(s) >= self.cutoff {
                continue;
            }
            let mut t = self.states[s].clone();
            t[i] += 1;
            out[self.index[&t]] += c;
        }
        MultiStringState(out)
    }

    /// `a(uᵢ)`, antilinear in `uᵢ`: `[a(u), a*(v)] = ⟨u, v⟩`.
    pub fn annihilate(&self, i: usize, x: &MultiStringState) -> MultiStringState {
        let mut out = vec![Complex64::zero(); self.dim()];
        for (s, c) in x.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (j, &k) in self.states[s].iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let mut t = self.states[s].clone();
                t[j] -= 1;
                out[self.index[&t]] += c * self.overlaps[i][j] * k as f64;
            }
        }
        MultiStringState(out)
    }

    /// `Φ(Fᵢ) = a(Π₊Fᵢ) + a*(Π₊Fᵢ)`.
    pub fn phi(&self, i: usize, x: &MultiStringState) -> MultiStringState {
        let a = self.annihilate(i, x);
        let b = self.create(i, x);
        MultiStringState(a.0.iter().zip(&b.0).map(|(p, q)| p + q).collect())
    }

    /// Fock pairing of two monomials.
    pub fn monomial_pairing(&self, s: usize, t: usize) -> Complex64 {
        let mut memo = HashMap::new();
        self.pair_rec(&self.states[s], &self.states[t], &mut memo)
    }

    fn pair_rec(&self, s: &[u32], t: &[u32], memo: &mut HashMap<(Vec<u32>, Vec<u32>), Complex64>) -> Complex64 {
        let ns: u32 = s.iter().sum();
        let nt: u32 = t.iter().sum();
        if ns != nt {
            return Complex64::zero();
        }
        if ns == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if let Some(v) = memo.get(&(s.to_vec(), t.to_vec())) {
            return *v;
        }
        // ⟨a*(uᵢ) s', t⟩ = ⟨s', a(uᵢ) t⟩
        let i = s.iter().position(|&c| c > 0).expect("nonempty");
        let mut s1 = s.to_vec();
        s1[i] -= 1;
        let mut total = Complex64::zero();
        for (j, &k) in t.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let mut t1 = t.to_vec();
            t1[j] -= 1;
            total += self.overlaps[i][j] * k as f64 * self.pair_rec(&s1, &t1, memo);
        }
        memo.insert((s.to_vec(), t.to_vec()), total);
        total
    }

    pub fn pairing(&self, x: &MultiStringState, y: &MultiStringState) -> Complex64 {
        let mut total = Complex64::zero();
        for (s, a) in x.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (t, b) in y.0.iter().enumerate() {
                if b.is_zero() || self.particle_number(s) != self.particle_number(t) {
                    continue;
                }
                total += a.conj() * b * self.monomial_pairing(s, t);
            }
        }
        total
    }

    /// `[Φᵢ, Φⱼ]` on every monomial with at most `cutoff − 1` particles.
    pub fn commutator_check(&self, i: usize, j: usize) -> CommutatorScalar {
        let expected = self.overlaps[i][j] - self.overlaps[j][i];
        let mut deviation = 0.0f64;
        let mut checked = 0;
        for s in 0..self.dim() {
            if self.particle_number(s) + 1 > self.cutoff {
                continue;
            }
            let x = self.basis_state(s);
            let a = self.phi(i, &self.phi(j, &x));
            let b = self.phi(j, &self.phi(i, &x));
            for (t, (p, q)) in a.0.iter().zip(&b.0).enumerate() {
                let want = if t == s { expected } else { Complex64::zero() };
                deviation = deviation.max((p - q - want).norm());
            }
            checked += 1;
        }
        CommutatorScalar { value: expected, max_deviation: deviation, states_checked: checked }
    }

    /// `max |⟨x, Φy⟩ − ⟨Φx, y⟩|` over monomials below the cutoff.
    pub fn hermiticity_residual(&self, i: usize) -> f64 {
        let low: Vec<usize> = (0..self.dim()).filter(|&s| self.particle_number(s) < self.cutoff).collect();
        let mut worst = 0.0f64;
        for &s in &low {
            for &t in &low {
                let x = self.basis_state(s);
                let y = self.basis_state(t);
                let lhs = self.pairing(&x, &self.phi(i, &y));
                let rhs = self.pairing(&self.phi(i, &x), &y);
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CommutatorScalar {
    #[serde(serialize_with = "serialize_complex")]
    pub value: Complex64,
    pub max_deviation: f64,
    pub states_checked: usize,
}

fn serialize_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldCcrPair {
    pub f: usize,
    pub g: usize,
    #[serde(serialize_with = "serialize_complex")]
    pub fock: Complex64,
    #[serde(serialize_with = "serialize_complex")]
    pub propagator: Complex64,
    pub scalar_deviation: f64,
    pub relative_mismatch: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldCcrReport {
    pub pairs: Vec<FieldCcrPair>,
    pub max_relative_mismatch: f64,
}

/// Three smearing functions with massive internal parts (levels 2, and 2 + 1) and the
/// pairs `(0,1), (0,2), (1,2)`; needs a level cutoff of at least 2 and `d ≥ 6`.
pub fn standard_ccr_family(space: &InternalSpace) -> Result<(Vec<SmearingFunction>, Vec<(usize, usize)>)> {
    let v1 = space.single_mode(2, 2)?;
    let v2 = v1.add(&space.single_mode(2, 5)?);
    let v3 = space.single_mode(2, 2)?.add(&space.single_mode(1, 3)?);
    let b = |t: f64, x: f64| SpacetimeBump::new(vec![t, x], vec![1.0, 0.8]);
    let tests = vec![
        SmearingFunction::new(b(0.0, 0.0)?, v1),
        SmearingFunction::new(b(3.0, 0.5)?, v2),
        SmearingFunction::new(b(-2.5, -1.0)?, v3),
    ];
    Ok((tests, vec![(0, 1), (0, 2), (1, 2)]))
}

/// Compares `[Φ(F), Φ(G)]` on the truncated multi-string space with `−i⟨F, EG⟩`.
pub fn field_ccr(
    ctx: &FieldContext,
    tests: &[SmearingFunction],
    pairs: &[(usize, usize)],
    particle_cutoff: usize,
    td: &TimeDomain,
    exec: Execution,
) -> Result<FieldCcrReport> {
    if particle_cutoff < 2 {
        return Err(Error::InvalidConfig("particle cutoff must be at least 2".into()));
    }
    let dictionary: Vec<OneStringVector> = tests.iter().map(|f| ctx.pi_plus(f, exec)).collect::<Result<_>>()?;
    let space = MultiStringSpace::new(ctx, &dictionary, particle_cutoff);
    let rows = map_slice(exec, pairs, |&(i, j)| -> Result<FieldCcrPair> {
        if i >= tests.len() || j >= tests.len() {
            return Err(Error::InvalidConfig(format!("pair ({i}, {j}) out of range")));
        }
        let fock = space.commutator_check(i, j);
        let propagator = smeared_commutator(&tests[i], &tests[j], &ctx.space, td, Execution::Sequential)?;
        let mismatch = (fock.value - propagator).norm() / propagator.norm().max(f64::MIN_POSITIVE);
        Ok(FieldCcrPair { f: i, g: j, fock: fock.value, propagator, scalar_deviation: fock.max_deviation, relative_mismatch: mismatch })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max_relative_mismatch = rows.iter().fold(0.0f64, |m, r| m.max(r.relative_mismatch));
    Ok(FieldCcrReport { pairs: rows, max_relative_mismatch })
}
