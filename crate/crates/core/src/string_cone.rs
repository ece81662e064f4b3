//! Field equation with finitely many internal Gaussian modes,
//! `U_tt = Σ_k ∂_k²U + Σ_{n,k} (∂²_{nk} − 2n x_{nk} ∂_{nk})U + c U`,
//! solved by leapfrog on a uniform grid over the center-of-mass and internal coordinates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{sum_range, Execution};
use crate::lattice::Grid;
use crate::smearing::bump;

/// Unit-speed metric on `(x¹…x^{d_cm−1}, x_{nk})`; all spatial weights are `+1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StringLightConeMetric {
    pub d_cm: usize,
    /// `(n, k)` for each internal coordinate, in axis order.
    pub internal: Vec<(usize, usize)>,
}

impl StringLightConeMetric {
    pub fn new(d_cm: usize, modes: usize, colors: usize) -> Result<Self> {
        if d_cm < 1 {
            return Err(Error::InvalidConfig("d_cm must be at least 1".into()));
        }
        let internal = (1..=modes).flat_map(|n| (1..=colors).map(move |k| (n, k))).collect();
        Ok(StringLightConeMetric { d_cm, internal })
    }

    pub fn cm_dims(&self) -> usize {
        self.d_cm - 1
    }

    pub fn spatial_dims(&self) -> usize {
        self.cm_dims() + self.internal.len()
    }

    /// Drift coefficient `n` for each axis (zero on center-of-mass axes).
    pub fn drift(&self) -> Vec<f64> {
        std::iter::repeat_n(0.0, self.cm_dims()).chain(self.internal.iter().map(|&(n, _)| n as f64)).collect()
    }

    pub fn axis_labels(&self) -> Vec<String> {
        (1..self.d_cm)
            .map(|k| format!("x{k}"))
            .chain(self.internal.iter().map(|(n, k)| format!("x_{n}^{k}")))
            .collect()
    }

    /// `−(dx⁰)² + Σ dx²` over all spatial axes.
    pub fn interval(&self, dt: f64, dx: &[f64]) -> f64 {
        -dt * dt + dx.iter().map(|v| v * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeConfig {
    pub d_cm: usize,
    pub modes: usize,
    pub colors: usize,
    pub h: f64,
    pub courant: f64,
    /// Zeroth-order coefficient `c` in `U_tt = … + cU` (`2a`).
    pub constant: f64,
    pub radius: f64,
    pub t_final: f64,
    /// Extra room between the cone at `t_final` and the boundary.
    pub margin: f64,
    pub snapshots: usize,
}

impl Default for ConeConfig {
    fn default() -> Self {
        ConeConfig {
            d_cm: 2,
            modes: 1,
            colors: 1,
            h: 0.05,
            courant: 0.5,
            constant: 2.0,
            radius: 1.0,
            t_final: 2.0,
            margin: 0.5,
            snapshots: 8,
        }
    }
}

impl ConeConfig {
    pub fn metric(&self) -> Result<StringLightConeMetric> {
        StringLightConeMetric::new(self.d_cm, self.modes, self.colors)
    }

    pub fn half_width(&self) -> f64 {
        self.radius + self.t_final + self.margin
    }

    /// Number of steps; `dt = t_final / steps` never exceeds `courant·h`.
    pub fn steps(&self) -> usize {
        (self.t_final / (self.courant * self.h) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps() as f64
    }

    pub fn refined(&self, factor: usize) -> Self {
        ConeConfig { h: self.h / factor as f64, ..self.clone() }
    }
}

/// Plain-data view of the stencil.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StencilDescription {
    pub axes: Vec<String>,
    pub drift: Vec<f64>,
    pub h: f64,
    pub dt: f64,
    pub cfl_limit: f64,
    pub second_derivative: [f64; 3],
    pub first_derivative: [f64; 3],
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub metric: StringLightConeMetric,
    pub h: f64,
    pub dt: f64,
    pub constant: f64,
    drift: Vec<f64>,
}

pub fn build_operator(config: &ConeConfig) -> Result<Stencil> {
    let metric = config.metric()?;
    if !(config.h > 0.0 && config.t_final > 0.0 && config.radius > 0.0) {
        return Err(Error::InvalidConfig("h, t_final and radius must be positive".into()));
    }
    let dims = metric.spatial_dims();
    if dims == 0 {
        return Err(Error::InvalidConfig("no spatial axes".into()));
    }
    let dt = config.dt();
    let limit = config.h / (dims as f64).sqrt();
    if config.courant * config.h > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt: config.courant * config.h, limit });
    }
    let drift = metric.drift();
    // discrete Gaussian weight needs 1 − n|x|h > 0 on the whole grid
    let reach = config.half_width() + 2.0 * config.h;
    if let Some(n) = drift.iter().cloned().reduce(f64::max) {
        if n * reach * config.h >= 1.0 {
            return Err(Error::InvalidConfig(format!("h = {} too coarse for drift n = {n} at |x| = {reach}", config.h)));
        }
    }
    Ok(Stencil { metric, h: config.h, dt, constant: config.constant, drift })
}

impl Stencil {
    pub fn describe(&self) -> StencilDescription {
        let h2 = self.h * self.h;
        StencilDescription {
            axes: self.metric.axis_labels(),
            drift: self.drift.clone(),
            h: self.h,
            dt: self.dt,
            cfl_limit: self.h / (self.metric.spatial_dims() as f64).sqrt(),
            second_derivative: [1.0 / h2, -2.0 / h2, 1.0 / h2],
            first_derivative: [-0.5 / self.h, 0.0, 0.5 / self.h],
            constant: self.constant,
        }
    }

    pub fn grid(&self, center: &[f64], half_width: f64) -> Grid {
        let bounds: Vec<(f64, f64)> = center.iter().map(|c| (c - half_width, c + half_width)).collect();
        Grid::covering(&bounds, self.h)
    }

    // per axis, per index: (coefficient of u_{+1}, coefficient of u_{−1})
    fn coefficients(&self, grid: &Grid) -> Vec<Vec<(f64, f64)>> {
        let h = self.h;
        (0..grid.dims())
            .map(|a| {
                let n = self.drift[a];
                (0..grid.n[a])
                    .map(|k| {
                        let y = grid.coord(a, k);
                        ((1.0 - n * y * h) / (h * h), (1.0 + n * y * h) / (h * h))
                    })
                    .collect()
            })
            .collect()
    }

    /// `out = (Δ − Σ 2n x ∂ + c) u` on interior nodes, zero on the boundary layer.
    pub fn apply(&self, grid: &Grid, u: &[f64], out: &mut [f64], exec: Execution) {
        let coef = self.coefficients(grid);
        self.apply_with(grid, &coef, u, out, exec);
    }

    fn apply_with(&self, grid: &Grid, coef: &[Vec<(f64, f64)>], u: &[f64], out: &mut [f64], exec: Execution) {
        let dims = grid.dims();
        let diag = self.constant - 2.0 * dims as f64 / (self.h * self.h);
        grid.update_interior(exec, out, |i, _| {
            let mut s = diag * u[i];
            for (a, ca) in coef.iter().enumerate() {
                let st = grid.stride(a);
                let (p, m) = ca[grid.index(i, a)];
                s += p * u[i + st] + m * u[i - st];
            }
            s
        });
    }

    /// Discrete Gaussian weight: `w_{j+1}/w_j = (1 − n x_j h)/(1 + n x_{j+1} h)` on each
    /// internal axis, normalised to one at the node nearest the origin.
    pub fn weights(&self, grid: &Grid) -> Vec<f64> {
        let h = self.h;
        let per_axis: Vec<Vec<f64>> = (0..grid.dims())
            .map(|a| {
                let n = self.drift[a];
                let len = grid.n[a];
                let mut w = vec![1.0; len];
                for j in 0..len - 1 {
                    let (y0, y1) = (grid.coord(a, j), grid.coord(a, j + 1));
                    w[j + 1] = w[j] * (1.0 - n * y0 * h) / (1.0 + n * y1 * h);
                }
                let origin = (0..len)
                    .min_by(|&i, &j| grid.coord(a, i).abs().total_cmp(&grid.coord(a, j).abs()))
                    .unwrap_or(0);
                let w0 = w[origin];
                w.iter().map(|v| v / w0).collect()
            })
            .collect();
        (0..grid.len()).map(|i| (0..grid.dims()).map(|a| per_axis[a][grid.index(i, a)]).product()).collect()
    }

    /// `ω²` of the leapfrog plane wave `e^{i(k·x−ωt)}` when no axis carries drift:
    /// `(4/dt²) sin²(ωdt/2) = (4/h²) Σ sin²(k_a h/2) − c`. Negative for growing modes.
    pub fn discrete_frequency_squared(&self, k: &[f64]) -> Result<f64> {
        if self.drift.iter().any(|&n| n != 0.0) {
            return Err(Error::InvalidConfig("dispersion symbol needs N = 0".into()));
        }
        if k.len() != self.drift.len() {
            return Err(Error::Dimension(format!("wave vector has {} components, grid has {}", k.len(), self.drift.len())));
        }
        let h = self.h;
        let s: f64 = k.iter().map(|ka| (ka * h / 2.0).sin().powi(2)).sum::<f64>() * 4.0 / (h * h) - self.constant;
        let z = s * self.dt * self.dt / 4.0;
        let w = 2.0 / self.dt;
        Ok(if z >= 0.0 {
            if z > 1.0 {
                return Err(Error::Cfl { dt: self.dt, limit: self.h / (self.drift.len() as f64).sqrt() });
            }
            (w * z.sqrt().asin()).powi(2)
        } else {
            -(w * (-z).sqrt().asinh()).powi(2)
        })
    }

    /// Largest growth rate per step: `cosh θ = 1 + c dt²/2`.
    fn growth_angle(&self) -> f64 {
        (1.0 + 0.5 * self.constant.max(0.0) * self.dt * self.dt).acosh()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Profile {
    /// Radial bump `ψ(|z − z₀|/ρ)` in all spatial coordinates.
    Bump,
    /// Bump in the center-of-mass coordinates only, constant along the internal ones.
    StaticInternal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialData {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    pub profile: Profile,
}

impl InitialData {
    pub fn bump(dims: usize, radius: f64) -> Self {
        InitialData { center: vec![0.0; dims], radius, amplitude: 1.0, profile: Profile::Bump }
    }

    pub fn zero(dims: usize, radius: f64) -> Self {
        InitialData { amplitude: 0.0, ..Self::bump(dims, radius) }
    }

    fn eval(&self, z: &[f64], cm_dims: usize) -> f64 {
        let axes = match self.profile {
            Profile::Bump => z.len(),
            Profile::StaticInternal => cm_dims,
        };
        let r2: f64 = (0..axes).map(|a| (z[a] - self.center[a]).powi(2)).sum();
        self.amplitude * bump(r2.sqrt() / self.radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ConeRun {
    pub config: ConeConfig,
    pub stencil: Stencil,
    pub grid: Grid,
    pub data: InitialData,
    pub snapshots: Vec<Snapshot>,
    /// `(t_{n+½}, E_{n+½})` for every step.
    pub energy: Vec<(f64, f64)>,
    /// Positive reference scale for the (indefinite) conserved energy.
    pub energy_scale: f64,
    pub final_u: Vec<f64>,
}

/// Leapfrog from `(U, U_t) = (data, 0)` to `t_final`.
pub fn solve(config: &ConeConfig, data: &InitialData, exec: Execution) -> Result<ConeRun> {
    let stencil = build_operator(config)?;
    let dims = stencil.metric.spatial_dims();
    if data.center.len() != dims {
        return Err(Error::Dimension(format!("initial data center has {} components, expected {dims}", data.center.len())));
    }
    let grid = stencil.grid(&data.center, config.half_width());
    let cm = stencil.metric.cm_dims();
    let u0 = grid.sample(|z| data.eval(z, cm));
    if data.profile == Profile::Bump && data.radius + 2.0 * config.h > config.half_width() {
        return Err(Error::SupportAtBoundary("initial bump does not fit the grid".into()));
    }
    let coef = stencil.coefficients(&grid);
    let weight = stencil.weights(&grid);
    let vol = grid.cell_volume();
    let dt = stencil.dt;
    let steps = config.steps();
    let wdot = |a: &[f64], b: &[f64]| vol * sum_range(exec, a.len(), |i| weight[i] * a[i] * b[i]);

    let mut bu = vec![0.0; grid.len()];
    stencil.apply_with(&grid, &coef, &u0, &mut bu, exec);
    let mut prev = u0.clone();
    let mut cur = u0.clone();
    grid.update_interior(exec, &mut cur, |i, v| v + 0.5 * dt * dt * bu[i]);

    let norm0 = wdot(&u0, &u0).sqrt();
    let theta = stencil.growth_angle();
    let every = (steps / config.snapshots.max(1)).max(1);
    let mut snapshots = vec![Snapshot { t: 0.0, u: u0.clone() }];
    let mut energy = Vec::with_capacity(steps);
    let mut energy_scale = 0.0;
    let mut next = vec![0.0; grid.len()];
    for step in 1..=steps {
        // (prev, cur) = (u^{n−1}, u^n) with n = step; record E_{n−½}
        stencil.apply_with(&grid, &coef, &prev, &mut bu, exec);
        let vel: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (a - b) / dt).collect();
        let kinetic = wdot(&vel, &vel);
        let coupling = wdot(&cur, &bu);
        energy.push(((step as f64 - 0.5) * dt, 0.5 * (kinetic - coupling)));
        if step == 1 {
            let mass = wdot(&cur, &prev);
            energy_scale = 0.5 * (kinetic + (coupling - stencil.constant * mass).abs() + stencil.constant.abs() * mass.abs());
        }
        if step == steps {
            break;
        }
        stencil.apply_with(&grid, &coef, &cur, &mut bu, exec);
        grid.update_interior(exec, &mut next, |i, _| 2.0 * cur[i] - prev[i] + dt * dt * bu[i]);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        let t = (step + 1) as f64 * dt;
        let norm = wdot(&cur, &cur).sqrt();
        let bound = 1.01 * ((step + 1) as f64 * theta).cosh() * norm0 + 1e-300;
        if !norm.is_finite() || norm > bound {
            return Err(Error::Unstable { t, norm, bound });
        }
        if (step + 1) % every == 0 && step + 1 < steps {
            snapshots.push(Snapshot { t, u: cur.clone() });
        }
    }
    snapshots.push(Snapshot { t: steps as f64 * dt, u: cur.clone() });
    Ok(ConeRun { config: config.clone(), stencil, grid, data: data.clone(), snapshots, energy, energy_scale, final_u: cur })
}

/// Diagnostics for one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSample {
    pub t: f64,
    pub peak: f64,
    /// Largest distance from the initial center, all coordinates.
    pub support_radius_string: f64,
    /// Largest distance from the initial center, center-of-mass coordinates only.
    pub support_radius_cm: f64,
    pub leakage_string: f64,
    pub leakage_cm: f64,
}

/// Stencil half-widths allowed beyond the continuum cone.
pub const STENCIL_WIDTH: f64 = 2.0;

impl ConeRun {
    /// Per-snapshot support and leakage. Nodes below `threshold·peak` are ignored.
    /// The string cone is `|z − z₀| ≤ ρ + t + w h` in every coordinate; the
    /// center-of-mass cone grows only in `x¹…` and keeps the initial internal extent.
    pub fn samples(&self, threshold: f64) -> Vec<ConeSample> {
        let grid = &self.grid;
        let cm = self.stencil.metric.cm_dims();
        let slack = STENCIL_WIDTH * self.stencil.h;
        let rho = self.data.radius;
        let c = &self.data.center;
        self.snapshots
            .iter()
            .map(|s| {
                let peak = s.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let cut = threshold * peak;
                let (mut rs, mut rc) = (0.0f64, 0.0f64);
                let (mut total, mut out_s, mut out_c) = (0.0, 0.0, 0.0);
                for (i, &v) in s.u.iter().enumerate() {
                    if v.abs() <= cut || v == 0.0 {
                        continue;
                    }
                    let z = grid.point(i);
                    let dcm: f64 = (0..cm).map(|a| (z[a] - c[a]).powi(2)).sum::<f64>().sqrt();
                    let dint: f64 = (cm..z.len()).map(|a| (z[a] - c[a]).powi(2)).sum::<f64>().sqrt();
                    let dall = dcm.hypot(dint);
                    rs = rs.max(dall);
                    rc = rc.max(dcm);
                    let m = v * v;
                    total += m;
                    if dall > rho + s.t + slack {
                        out_s += m;
                    }
                    if dcm > rho + s.t + slack || dint > rho + slack {
                        out_c += m;
                    }
                }
                let frac = |x: f64| if total > 0.0 { x / total } else { 0.0 };
                ConeSample {
                    t: s.t,
                    peak,
                    support_radius_string: rs,
                    support_radius_cm: rc,
                    leakage_string: frac(out_s),
                    leakage_cm: frac(out_c),
                }
            })
            .collect()
    }

    /// Largest string-cone leakage over the run.
    pub fn cone_leakage(&self, threshold: f64) -> f64 {
        self.samples(threshold).iter().map(|s| s.leakage_string).fold(0.0, f64::max)
    }

    /// `max |E − E₀| / scale` over the run.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy.first().map_or(0.0, |e| e.1);
        let worst = self.energy.iter().map(|e| (e.1 - e0).abs()).fold(0.0, f64::max);
        if self.energy_scale > 0.0 {
            worst / self.energy_scale
        } else {
            worst
        }
    }

    pub fn value_at(&self, z: &[f64]) -> f64 {
        self.grid.interpolate(&self.final_u, z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub h: [f64; 3],
    /// `‖u_h − u_{h/2}‖` and `‖u_{h/2} − u_{h/4}‖` on the coarse nodes (L²).
    pub differences: [f64; 2],
    pub order: f64,
}

/// Observed order from runs at `h`, `h/2`, `h/4`.
pub fn self_convergence(config: &ConeConfig, data: &InitialData, exec: Execution) -> Result<ConvergenceReport> {
    let runs = [solve(config, data, exec)?, solve(&config.refined(2), data, exec)?, solve(&config.refined(4), data, exec)?];
    let coarse = &runs[0].grid;
    let mut diff = [0.0f64; 2];
    for i in 0..coarse.len() {
        if coarse.is_boundary(i) {
            continue;
        }
        let z = coarse.point(i);
        let v: Vec<f64> = runs.iter().map(|r| r.value_at(&z)).collect();
        diff[0] += (v[0] - v[1]).powi(2);
        diff[1] += (v[1] - v[2]).powi(2);
    }
    let vol = coarse.cell_volume();
    let differences = [(diff[0] * vol).sqrt(), (diff[1] * vol).sqrt()];
    Ok(ConvergenceReport {
        h: [config.h, config.h / 2.0, config.h / 4.0],
        differences,
        order: (differences[0] / differences[1]).log2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ConeConfig {
        ConeConfig { h: 0.1, t_final: 1.0, snapshots: 4, ..ConeConfig::default() }
    }

    #[test]
    fn metric_layout() {
        let m = StringLightConeMetric::new(2, 2, 1).unwrap();
        assert_eq!(m.spatial_dims(), 3);
        assert_eq!(m.drift(), vec![0.0, 1.0, 2.0]);
        assert_eq!(m.axis_labels(), vec!["x1", "x_1^1", "x_2^1"]);
        assert_eq!(m.interval(1.0, &[1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn cfl_is_enforced() {
        let cfg = ConeConfig { courant: 0.9, ..small() };
        assert!(matches!(build_operator(&cfg), Err(Error::Cfl { .. })));
    }

    #[test]
    fn zero_data_stays_zero() {
        let run = solve(&small(), &InitialData::zero(2, 1.0), Execution::Sequential).unwrap();
        assert!(run.final_u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_functions_are_exact() {
        let st = build_operator(&small()).unwrap();
        let grid = st.grid(&[0.0, 0.0], 2.0);
        let u = grid.sample(|z| z[1]);
        let mut out = vec![0.0; grid.len()];
        st.apply(&grid, &u, &mut out, Execution::Sequential);
        for i in 0..grid.len() {
            let deep = (0..2).all(|a| (2..grid.n[a] - 2).contains(&grid.index(i, a)));
            if deep {
                let y = grid.point(i)[1];
                assert!((out[i] - (-2.0 * y + 2.0 * y)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn weights_decay_like_a_gaussian() {
        let st = build_operator(&small()).unwrap();
        let grid = st.grid(&[0.0, 0.0], 2.0);
        let w = st.weights(&grid);
        for i in 0..grid.len() {
            let y = grid.point(i)[1];
            assert!((w[i] / (-y * y).exp() - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let data = InitialData::bump(2, 1.0);
        let a = solve(&small(), &data, Execution::Sequential).unwrap();
        let b = solve(&small(), &data, Execution::Parallel).unwrap();
        assert_eq!(a.final_u, b.final_u);
    }
}
