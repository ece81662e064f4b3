//! Classical open-string solutions: mode sums, constraint components and the
//! light-cone Hamiltonian flow.

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `X^μ(τ,σ) = x^μ + p^μτ + i Σ_{n≠0} α_n^μ e^{−inτ} cos(nσ)/n` with `α_{−n} = conj(α_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldsheetSolution {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// `modes[n−1][μ] = α_n^μ` for `n ≥ 1`.
    #[serde(skip)]
    pub modes: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldsheetPoint {
    pub x: Vec<f64>,
    pub dtau: Vec<f64>,
    pub dsigma: Vec<f64>,
}

/// Minkowski product with `η = diag(−1, +1, …)`.
pub fn minkowski<T>(a: &[T], b: &[T]) -> T
where
    T: Copy + Zero + std::ops::Mul<Output = T> + std::ops::Sub<Output = T> + std::ops::Add<Output = T>,
{
    let mut s = T::zero();
    for (mu, (x, y)) in a.iter().zip(b).enumerate() {
        if mu == 0 {
            s = s - *x * *y;
        } else {
            s = s + *x * *y;
        }
    }
    s
}

impl WorldsheetSolution {
    pub fn new(x: Vec<f64>, p: Vec<f64>, modes: Vec<Vec<Complex64>>) -> Result<Self> {
        let d = x.len();
        if p.len() != d || modes.iter().any(|m| m.len() != d) {
            return Err(Error::Dimension("x, p and every mode must have d components".into()));
        }
        Ok(WorldsheetSolution { x, p, modes })
    }

    pub fn center_of_mass(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        Self::new(x, p, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn max_mode(&self) -> usize {
        self.modes.len()
    }

    /// `α_n^μ` for any integer `n`, with `α_0 = p`.
    pub fn alpha(&self, n: i64, mu: usize) -> Complex64 {
        match n {
            0 => Complex64::new(self.p[mu], 0.0),
            n if n > 0 => self.modes.get(n as usize - 1).map_or(Complex64::zero(), |m| m[mu]),
            n => self.modes.get((-n) as usize - 1).map_or(Complex64::zero(), |m| m[mu].conj()),
        }
    }

    // z = α_n e^{−inτ}
    fn phased(&self, n: usize, mu: usize, tau: f64) -> Complex64 {
        self.modes[n - 1][mu] * Complex64::from_polar(1.0, -(n as f64) * tau)
    }

    /// `X`, `∂_τX`, `∂_σX` from the mode sum; derivatives are analytic.
    pub fn evaluate(&self, tau: f64, sigma: f64) -> Result<WorldsheetPoint> {
        if !(0.0..=std::f64::consts::PI).contains(&sigma) {
            return Err(Error::InvalidConfig(format!("σ = {sigma} outside [0, π]")));
        }
        let d = self.dim();
        let mut x: Vec<f64> = (0..d).map(|mu| self.x[mu] + self.p[mu] * tau).collect();
        let mut dtau = self.p.clone();
        let mut dsigma = vec![0.0; d];
        for n in 1..=self.max_mode() {
            let nf = n as f64;
            let (c, s) = ((nf * sigma).cos(), (nf * sigma).sin());
            for mu in 0..d {
                let z = self.phased(n, mu, tau);
                x[mu] -= 2.0 / nf * z.im * c;
                dtau[mu] += 2.0 * z.re * c;
                dsigma[mu] += 2.0 * z.im * s;
            }
        }
        Ok(WorldsheetPoint { x, dtau, dsigma })
    }

    /// `(∂_τ² − ∂_σ²)X`, the two second derivatives summed separately per mode.
    pub fn wave_residual(&self, tau: f64, sigma: f64) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for n in 1..=self.max_mode() {
            let nf = n as f64;
            let c = (nf * sigma).cos();
            for (mu, slot) in out.iter_mut().enumerate() {
                let z = self.phased(n, mu, tau);
                let d2tau = 2.0 * nf * z.im * c;
                let d2sigma = 2.0 * nf * z.im * c;
                *slot += d2tau - d2sigma;
            }
        }
        out
    }

    /// `(∂_τX ± ∂_σX)²` at a worldsheet point.
    pub fn constraint_density(&self, tau: f64, sigma: f64, sign: f64) -> Result<f64> {
        let pt = self.evaluate(tau, sigma)?;
        let v: Vec<f64> = pt.dtau.iter().zip(&pt.dsigma).map(|(a, b)| a + sign * b).collect();
        Ok(minkowski(&v, &v))
    }

    /// Classical `L_n = ½ Σ_k α_{n−k}·α_k` (no ordering constant).
    pub fn constraint_fourier(&self, n: i64) -> Complex64 {
        let big = self.max_mode() as i64;
        let mut s = Complex64::zero();
        for k in (n - big).max(-big)..=(n + big).min(big) {
            let a: Vec<Complex64> = (0..self.dim()).map(|mu| self.alpha(n - k, mu)).collect();
            let b: Vec<Complex64> = (0..self.dim()).map(|mu| self.alpha(k, mu)).collect();
            s += minkowski(&a, &b);
        }
        s * 0.5
    }

    /// Cosine coefficients `(x, p, x_n, p_n)` at time `τ`, `n = 1..N`.
    pub fn cosine_coefficients(&self, tau: f64) -> CosineCoefficients {
        let d = self.dim();
        let x = (0..d).map(|mu| self.x[mu] + self.p[mu] * tau).collect();
        let mut xn = Vec::new();
        let mut pn = Vec::new();
        for n in 1..=self.max_mode() {
            let nf = n as f64;
            xn.push((0..d).map(|mu| -SQRT2 / nf * self.phased(n, mu, tau).im).collect());
            pn.push((0..d).map(|mu| SQRT2 * self.phased(n, mu, tau).re).collect());
        }
        CosineCoefficients { x, p: self.p.clone(), xn, pn }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosineCoefficients {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub xn: Vec<Vec<f64>>,
    pub pn: Vec<Vec<f64>>,
}

/// Light-cone gauge data `(x⁻, p⁺, x̃, p̃, x̃_n, p̃_n)`; `x^± = (x⁰ ± x^{d−1})/√2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LightConeData {
    pub x_minus: f64,
    pub p_plus: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// `xn[n−1][k]`.
    pub xn: Vec<Vec<f64>>,
    pub pn: Vec<Vec<f64>>,
}

impl LightConeData {
    pub fn new(x_minus: f64, p_plus: f64, x: Vec<f64>, p: Vec<f64>, xn: Vec<Vec<f64>>, pn: Vec<Vec<f64>>) -> Result<Self> {
        if !(p_plus > 0.0) {
            return Err(Error::InvalidMomentum(format!("p⁺ = {p_plus} must be positive")));
        }
        let t = x.len();
        if p.len() != t || xn.len() != pn.len() || xn.iter().chain(&pn).any(|v| v.len() != t) {
            return Err(Error::Dimension("transverse data lengths differ".into()));
        }
        Ok(LightConeData { x_minus, p_plus, x, p, xn, pn })
    }

    pub fn transverse(&self) -> usize {
        self.x.len()
    }

    /// `Σ_k (p_{nk}² + n² x_{nk}²)` for mode `n ≥ 1`.
    pub fn mode_energy(&self, n: usize) -> f64 {
        let nf = n as f64;
        self.xn[n - 1].iter().zip(&self.pn[n - 1]).map(|(x, p)| p * p + nf * nf * x * x).sum()
    }

    /// `p⁻ = (p̃² + Σ_n (p̃_n² + n² x̃_n²)) / (2p⁺)`.
    pub fn p_minus(&self) -> f64 {
        let p2: f64 = self.p.iter().map(|v| v * v).sum();
        let modes: f64 = (1..=self.xn.len()).map(|n| self.mode_energy(n)).sum();
        (p2 + modes) / (2.0 * self.p_plus)
    }

    /// Closed-form flow to light-cone time `s = x⁺`.
    pub fn flow(&self, s: f64) -> LightConeData {
        let pp = self.p_plus;
        let x = self.x.iter().zip(&self.p).map(|(x, p)| x + p * s / pp).collect();
        let mut xn = self.xn.clone();
        let mut pn = self.pn.clone();
        for n in 1..=self.xn.len() {
            let nf = n as f64;
            let (c, sn) = ((nf * s / pp).cos(), (nf * s / pp).sin());
            for k in 0..self.transverse() {
                let (x0, p0) = (self.xn[n - 1][k], self.pn[n - 1][k]);
                xn[n - 1][k] = x0 * c + p0 / nf * sn;
                pn[n - 1][k] = p0 * c - nf * x0 * sn;
            }
        }
        LightConeData { x_minus: self.x_minus + self.p_minus() * s / pp, p_plus: pp, x, p: self.p.clone(), xn, pn }
    }

    /// The worldsheet in Cartesian components (`d = transverse + 2`) with `X⁺ = p⁺τ`;
    /// `α⁻_m = (1/p⁺) ½ Σ_k α̃_{m−k}·α̃_k` solves every constraint component.
    pub fn to_worldsheet(&self) -> WorldsheetSolution {
        let t = self.transverse();
        let d = t + 2;
        let big = self.xn.len();
        // transverse α_n = (p_n − i n x_n)/√2, for n = 1..N
        let at = |n: i64, k: usize| -> Complex64 {
            match n {
                0 => Complex64::new(self.p[k], 0.0),
                n if n.unsigned_abs() as usize > big => Complex64::zero(),
                n => {
                    let m = n.unsigned_abs() as usize;
                    let z = Complex64::new(self.pn[m - 1][k], -(m as f64) * self.xn[m - 1][k]) / SQRT2;
                    if n > 0 {
                        z
                    } else {
                        z.conj()
                    }
                }
            }
        };
        let minus = |m: i64| -> Complex64 {
            let mut s = Complex64::zero();
            for k in -(big as i64)..=(big as i64) {
                for j in 0..t {
                    s += at(m - k, j) * at(k, j);
                }
            }
            s * 0.5 / self.p_plus
        };
        let p_minus = minus(0).re;
        let mut p = vec![0.0; d];
        let mut x = vec![0.0; d];
        p[0] = (self.p_plus + p_minus) / SQRT2;
        p[d - 1] = (self.p_plus - p_minus) / SQRT2;
        x[0] = self.x_minus / SQRT2;
        x[d - 1] = -self.x_minus / SQRT2;
        for k in 0..t {
            p[k + 1] = self.p[k];
            x[k + 1] = self.x[k];
        }
        let modes = (1..=2 * big)
            .map(|n| {
                let am = minus(n as i64);
                let mut v = vec![Complex64::zero(); d];
                v[0] = am / SQRT2;
                v[d - 1] = -am / SQRT2;
                for k in 0..t {
                    v[k + 1] = at(n as i64, k);
                }
                v
            })
            .collect();
        WorldsheetSolution { x, p, modes }
    }
}

/// Trajectory of [`LightConeData::flow`] at the given light-cone times.
pub fn lightcone_flow(initial: &LightConeData, times: &[f64]) -> Vec<LightConeData> {
    times.iter().map(|&s| initial.flow(s)).collect()
}
