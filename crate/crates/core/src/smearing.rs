//! Test functions `F = b ⊗ f`: a product bump on spacetime times an exact
//! internal Fock vector, and the internal space they are paired in.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::config::Metric;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock_basis::{enumerate_basis, FockBasisState, LevelBasis, ModeIndex};
use crate::oscillator::{gram_with, IndefiniteGram};
use crate::quadrature::GaussLegendre;
use crate::scalar::{q, q_to_f64, Q};
use crate::sparse::SparseVec;

/// `exp(−1/(1 − s²))` on `|s| < 1`, zero elsewhere.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

struct CosineRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn cosine_rule() -> &'static CosineRule {
    static RULE: OnceLock<CosineRule> = OnceLock::new();
    RULE.get_or_init(|| {
        // half interval [0, 1]; the profile is even
        let pairs = GaussLegendre::new(12).composite(0.0, 1.0, 192);
        let nodes = pairs.iter().map(|p| p.0).collect();
        let weights = pairs.iter().map(|p| 2.0 * p.1 * bump(p.0)).collect();
        CosineRule { nodes, weights }
    })
}

/// `β(κ) = ∫_{−1}^{1} bump(s) cos(κs) ds`, accurate for `|κ| ≲ 400`.
pub fn bump_cosine(kappa: f64) -> f64 {
    let rule = cosine_rule();
    rule.nodes.iter().zip(&rule.weights).map(|(s, w)| w * (kappa * s).cos()).sum()
}

/// Product of per-coordinate bumps; coordinate 0 is time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeBump {
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
}

impl SpacetimeBump {
    pub fn new(center: Vec<f64>, radius: Vec<f64>) -> Result<Self> {
        if center.len() != radius.len() || center.is_empty() {
            return Err(Error::Dimension("bump center and radius lengths differ".into()));
        }
        if radius.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidConfig("bump radii must be positive".into()));
        }
        Ok(SpacetimeBump { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn factor(&self, axis: usize, x: f64) -> f64 {
        bump((x - self.center[axis]) / self.radius[axis])
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (0..self.dim()).map(|i| self.factor(i, x[i])).product()
    }

    pub fn support(&self, axis: usize) -> (f64, f64) {
        (self.center[axis] - self.radius[axis], self.center[axis] + self.radius[axis])
    }

    /// `(2π)^{−D/2} ∫ e^{−ip·x} b(x) dx` with `p·x = −p⁰t + Σ pᵢxᵢ`.
    pub fn fourier(&self, p: &[f64]) -> Complex64 {
        let dim = self.dim();
        let mut modulus = (2.0 * PI).powf(-(dim as f64) / 2.0);
        let mut phase = 0.0;
        for i in 0..dim {
            let s = if i == 0 { -1.0 } else { 1.0 };
            modulus *= self.radius[i] * bump_cosine(p[i] * self.radius[i]);
            phase -= s * p[i] * self.center[i];
        }
        Complex64::from_polar(modulus, phase)
    }

    pub fn shifted(&self, by: &[f64]) -> Self {
        let center = self.center.iter().zip(by).map(|(c, b)| c + b).collect();
        SpacetimeBump { center, radius: self.radius.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmearingFunction {
    pub spacetime: SpacetimeBump,
    pub internal: SparseVec<Q>,
}

impl SmearingFunction {
    pub fn new(spacetime: SpacetimeBump, internal: SparseVec<Q>) -> Self {
        SmearingFunction { spacetime, internal }
    }

    pub fn d_cm(&self) -> usize {
        self.spacetime.dim()
    }
}

/// Covariant internal Fock space: basis, exact Gram and intercept.
#[derive(Debug)]
pub struct InternalSpace {
    pub basis: LevelBasis,
    pub metric: Metric,
    pub gram: IndefiniteGram,
    pub a: Q,
}

impl InternalSpace {
    pub fn new(d: usize, a: Q, level_cutoff: usize, exec: Execution) -> Self {
        let basis = enumerate_basis(d, level_cutoff);
        let metric = Metric::minkowski(d);
        let gram = gram_with(&basis, &metric, exec);
        InternalSpace { basis, metric, gram, a }
    }

    pub fn mass_squared(&self, level: usize) -> Q {
        q(2 * level as i64) - &self.a * q(2)
    }

    pub fn mass_squared_f64(&self, level: usize) -> f64 {
        q_to_f64(&self.mass_squared(level))
    }

    /// `P_r v`, the level-`ℓ` part.
    pub fn level_part(&self, v: &SparseVec<Q>, level: usize) -> SparseVec<Q> {
        let range = self.basis.level_range(level);
        SparseVec::from_pairs(v.entries().iter().filter(|(i, _)| range.contains(i)).cloned())
    }

    /// Levels carrying a nonzero component of `v`, ascending.
    pub fn levels(&self, v: &SparseVec<Q>) -> Vec<usize> {
        let mut out: Vec<usize> = v.entries().iter().map(|(i, _)| self.basis.level_of(*i)).collect();
        out.dedup();
        out
    }

    pub fn pair(&self, u: &SparseVec<Q>, v: &SparseVec<Q>) -> Q {
        self.gram.pair(u, v)
    }

    pub fn pair_f64(&self, u: &SparseVec<Q>, v: &SparseVec<Q>) -> f64 {
        q_to_f64(&self.pair(u, v))
    }

    /// `α_{−n}^μ Ω₀`, or `Ω₀` for `n = 0`.
    pub fn single_mode(&self, n: u32, mu: u32) -> Result<SparseVec<Q>> {
        if n == 0 {
            return Ok(SparseVec::unit(self.basis.vacuum_index()));
        }
        self.basis.check_direction(mu as usize)?;
        let state = FockBasisState::from_modes(vec![ModeIndex::new(n, mu)]);
        let idx = self
            .basis
            .index_of(&state)
            .ok_or(Error::ModeAboveCutoff { n: n as i64, cutoff: self.basis.cutoff() })?;
        Ok(SparseVec::unit(idx))
    }

    pub fn is_zero(v: &SparseVec<Q>) -> bool {
        v.entries().iter().all(|(_, x)| x.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_flat_at_the_edge() {
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.5), 0.0);
        assert!((bump(0.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(bump(0.999) < 1e-200);
    }

    #[test]
    fn cosine_transform_at_zero_matches_direct_quadrature() {
        let direct = GaussLegendre::new(20).integrate(-1.0, 1.0, 400, bump);
        assert!((bump_cosine(0.0) - direct).abs() < 1e-14);
        assert!(bump_cosine(200.0).abs() < 1e-5);
    }

    #[test]
    fn fourier_phase_tracks_the_center() {
        let b = SpacetimeBump::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let c = b.shifted(&[1.0, 2.0]);
        let p = [0.7, -0.3];
        let ratio = c.fourier(&p) / b.fourier(&p);
        let want = Complex64::from_polar(1.0, 0.7 - (-0.3 * 2.0));
        assert!((ratio - want).norm() < 1e-12);
    }

    #[test]
    fn internal_space_pairs_single_modes() {
        let s = InternalSpace::new(4, q(1), 2, Execution::Sequential);
        let t = s.single_mode(1, 0).unwrap();
        let x = s.single_mode(2, 3).unwrap();
        assert_eq!(s.pair(&t, &t), q(-1));
        assert_eq!(s.pair(&x, &x), q(2));
        assert_eq!(s.levels(&x.add(&t)), vec![1, 2]);
        assert_eq!(s.mass_squared(0), q(-2));
        assert!(s.single_mode(3, 0).is_err());
    }
}
