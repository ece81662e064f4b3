//! Fundamental solutions of `−□ + M² = ∂_t² − Δ + r` level by level.
//!
//! `E⁺F` and `E⁻F` are produced by marching the same centered scheme forward
//! from before `supp F` and backward from after it, so `E = E⁺ − E⁻` solves the
//! homogeneous discrete equation and the discrete Wronskian pairs it exactly
//! with `F`. Conventions: `E` carries Cauchy data `(0, +δ)` at `t = 0`, so in
//! two dimensions `Δ₀(t, x) = ½ sign(t) θ(|t| − |x|)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::lattice::Grid;
use crate::quadrature::GaussLegendre;
use crate::scalar::Q;
use crate::smearing::{bump, InternalSpace, SmearingFunction, SpacetimeBump};
use crate::sparse::SparseVec;

/// Centered leapfrog for `u_tt − Δu + r u = g`. The mass term is explicit for
/// `r ≤ 0` and time-averaged for `r > 0`, which keeps the step stable up to the
/// massless CFL limit in both cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scheme {
    pub r: f64,
    pub h: f64,
    pub dt: f64,
    pub dims: usize,
}

impl Scheme {
    pub fn new(r: f64, h: f64, courant: f64, dims: usize) -> Result<Self> {
        let limit = h / (dims as f64).sqrt();
        let dt = courant * h;
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(Error::Cfl { dt, limit });
        }
        Ok(Scheme { r, h, dt, dims })
    }

    fn implicit(&self) -> f64 {
        if self.r > 0.0 {
            0.5 * self.r * self.dt * self.dt
        } else {
            0.0
        }
    }

    fn explicit(&self) -> f64 {
        if self.r > 0.0 {
            0.0
        } else {
            self.r * self.dt * self.dt
        }
    }

    pub fn time(&self, n: i64) -> f64 {
        n as f64 * self.dt
    }

    /// `far` holds `u^{n∓1}` on entry and `u^{n±1}` on exit; `src = (g, amp)` adds `amp·g`.
    pub fn step(&self, grid: &Grid, far: &mut [f64], cur: &[f64], src: Option<(&[f64], f64)>, exec: Execution) {
        let lam2 = (self.dt / self.h).powi(2);
        let c = self.implicit();
        let e = self.explicit();
        let strides: Vec<usize> = (0..grid.dims()).map(|a| grid.stride(a)).collect();
        let centre = 2.0 * grid.dims() as f64;
        grid.update_interior(exec, far, |i, old| {
            let mut lap = -centre * cur[i];
            for &s in &strides {
                lap += cur[i + s] + cur[i - s];
            }
            let mut rhs = 2.0 * cur[i] - (1.0 + c) * old + lam2 * lap - e * cur[i];
            if let Some((g, amp)) = src {
                rhs += amp * g[i];
            }
            rhs / (1.0 + c)
        });
    }

    /// Discrete Wronskian of `(u^n, u^{n+1})` and `(v^n, v^{n+1})`; exactly conserved.
    pub fn wronskian(&self, grid: &Grid, u: (&[f64], &[f64]), v: (&[f64], &[f64]), exec: Execution) -> f64 {
        let s = grid.dot(u.0, v.1, exec) - grid.dot(u.1, v.0, exec);
        (1.0 + self.implicit()) * grid.cell_volume() / self.dt * s
    }
}

/// A separable spacetime profile sampled on a grid.
#[derive(Debug, Clone)]
pub struct Source {
    pub bump: SpacetimeBump,
    pub space: Vec<f64>,
}

impl Source {
    pub fn new(bump: &SpacetimeBump, grid: &Grid) -> Result<Self> {
        if bump.dim() != grid.dims() + 1 {
            return Err(Error::Dimension("bump and grid dimensions differ".into()));
        }
        for a in 0..grid.dims() {
            let (lo, hi) = bump.support(a + 1);
            if lo <= grid.lo[a] + grid.h || hi >= grid.coord(a, grid.n[a] - 2) {
                return Err(Error::SupportAtBoundary(format!("axis {} support [{lo}, {hi}]", a + 1)));
            }
        }
        let space = grid.separable(|a, x| bump.factor(a + 1, x));
        Ok(Source { bump: bump.clone(), space })
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        self.bump.factor(0, t)
    }

    /// Step indices strictly before and after the time support.
    pub fn window(&self, dt: f64) -> (i64, i64) {
        let (lo, hi) = self.bump.support(0);
        ((lo / dt).floor() as i64 - 1, (hi / dt).ceil() as i64 + 1)
    }
}

fn check_edges(grid: &Grid, u: &[f64], t: f64) -> Result<()> {
    let m = grid.edge_max(u);
    if m != 0.0 {
        return Err(Error::SupportAtBoundary(format!("solution reaches the grid edge at t = {t} (|u| = {m:e})")));
    }
    Ok(())
}

/// Marches `steps` steps in direction `dir` starting from `near = u^{start}`,
/// `far = u^{start − dir}`; `observe(n, u^n)` sees every new level.
#[allow(clippy::too_many_arguments)]
pub fn march<F: FnMut(i64, &[f64])>(
    scheme: &Scheme,
    grid: &Grid,
    start: i64,
    dir: i64,
    steps: usize,
    mut near: Vec<f64>,
    mut far: Vec<f64>,
    source: Option<&Source>,
    exec: Execution,
    mut observe: F,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dt2 = scheme.dt * scheme.dt;
    for k in 0..steps {
        let n = start + dir * k as i64;
        let src = source.and_then(|s| {
            let a = s.time_factor(scheme.time(n));
            (a != 0.0).then(|| (s.space.as_slice(), dt2 * a))
        });
        scheme.step(grid, &mut far, &near, src, exec);
        std::mem::swap(&mut near, &mut far);
        observe(n + dir, &near);
        if k % 32 == 31 || k + 1 == steps {
            check_edges(grid, &near, scheme.time(n + dir))?;
        }
    }
    Ok((near, far))
}

/// `Σ_n Σ_x f·(E^±g)·h^D·dt` for the retarded (`dir = 1`) or advanced (`dir = −1`) solution.
pub fn smear_one_sided(scheme: &Scheme, grid: &Grid, f: &Source, g: &Source, dir: i64, exec: Execution) -> Result<f64> {
    let (g0, g1) = g.window(scheme.dt);
    let (f0, f1) = f.window(scheme.dt);
    let (start, end) = if dir > 0 { (g0, f1) } else { (g1, f0) };
    if (end - start) * dir <= 0 {
        return Ok(0.0);
    }
    let zeros = vec![0.0; grid.len()];
    let mut acc = 0.0;
    march(scheme, grid, start, dir, (end - start).unsigned_abs() as usize, zeros.clone(), zeros, Some(g), exec, |n, u| {
        let a = f.time_factor(scheme.time(n));
        if a != 0.0 {
            acc += a * grid.dot(&f.space, u, exec);
        }
    })?;
    Ok(acc * grid.cell_volume() * scheme.dt)
}

/// Time-domain discretization controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeDomain {
    pub h: f64,
    /// `dt/h`; `None` selects the CFL limit `1/√D`.
    pub courant: Option<f64>,
    /// Combine `h` and `h/2` to cancel the `h²` term.
    pub richardson: bool,
}

impl Default for TimeDomain {
    fn default() -> Self {
        TimeDomain { h: 0.01, courant: None, richardson: true }
    }
}

impl TimeDomain {
    pub fn scheme(&self, r: f64, h: f64, dims: usize) -> Result<Scheme> {
        Scheme::new(r, h, self.courant.unwrap_or(1.0 / (dims as f64).sqrt()), dims)
    }
}

/// Grid large enough that nothing reaches its edge while `g` influences `f`.
pub fn smear_grid(f: &SpacetimeBump, g: &SpacetimeBump, scheme: &Scheme) -> Grid {
    let (fa, fb) = f.support(0);
    let (ga, gb) = g.support(0);
    let span = (fb - ga).max(gb - fa).max(0.0) + 4.0 * scheme.dt;
    let margin = span * scheme.h / scheme.dt + 3.0 * scheme.h;
    let bounds: Vec<(f64, f64)> = (1..f.dim())
        .map(|a| {
            let (f0, f1) = f.support(a);
            let (g0, g1) = g.support(a);
            (f0.min(g0) - margin, f1.max(g1) + margin)
        })
        .collect();
    Grid::covering(&bounds, scheme.h)
}

/// `∫∫ f(x) Δ_r(x − y) g(y) dx dy` on one grid.
pub fn scalar_smear_at(r: f64, f: &SpacetimeBump, g: &SpacetimeBump, h: f64, td: &TimeDomain, exec: Execution) -> Result<f64> {
    if f.dim() != g.dim() || f.dim() < 2 {
        return Err(Error::Dimension("smearing bumps must share d_cm ≥ 2".into()));
    }
    let scheme = td.scheme(r, h, f.dim() - 1)?;
    let grid = smear_grid(f, g, &scheme);
    let fs = Source::new(f, &grid)?;
    let gs = Source::new(g, &grid)?;
    let plus = smear_one_sided(&scheme, &grid, &fs, &gs, 1, exec)?;
    let minus = smear_one_sided(&scheme, &grid, &fs, &gs, -1, exec)?;
    Ok(plus - minus)
}

/// [`scalar_smear_at`] with optional Richardson extrapolation.
pub fn scalar_smear(r: f64, f: &SpacetimeBump, g: &SpacetimeBump, td: &TimeDomain, exec: Execution) -> Result<f64> {
    let coarse = scalar_smear_at(r, f, g, td.h, td, exec)?;
    if !td.richardson {
        return Ok(coarse);
    }
    let fine = scalar_smear_at(r, f, g, 0.5 * td.h, td, exec)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `−i⟨F, EG⟩ = −i Σ_ℓ ⟨F_ℓ, G_ℓ⟩ ∫∫ f Δ_{r_ℓ} g`.
pub fn smeared_commutator(
    f: &SmearingFunction,
    g: &SmearingFunction,
    space: &InternalSpace,
    td: &TimeDomain,
    exec: Execution,
) -> Result<Complex64> {
    let mut levels = space.levels(&f.internal);
    levels.retain(|l| space.levels(&g.internal).contains(l));
    let mut total = 0.0;
    for level in levels {
        let pair = space.pair_f64(&space.level_part(&f.internal, level), &space.level_part(&g.internal, level));
        if pair == 0.0 {
            continue;
        }
        total += pair * scalar_smear(space.mass_squared_f64(level), &f.spacetime, &g.spacetime, td, exec)?;
    }
    Ok(Complex64::new(0.0, -total))
}

/// Smooth step: 1 on `[0, ½]`, 0 on `[1, ∞)`.
fn taper(s: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        f(1.0 - s) / (f(1.0 - s) + f(s - 0.5))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PauliJordanEvaluator {
    pub r: f64,
    pub d_cm: usize,
    pub td: TimeDomain,
    /// Radius of the normalized bump standing in for `δ` in pointwise evaluation.
    pub delta_width: f64,
    /// Momentum cutoff of the quadrature route; the estimate compares `Λ` and `2Λ`.
    pub cutoff: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSample {
    pub t: f64,
    pub x: f64,
    pub value: f64,
}

impl PauliJordanEvaluator {
    pub fn new(r: f64, d_cm: usize) -> Self {
        PauliJordanEvaluator { r, d_cm, td: TimeDomain::default(), delta_width: 0.05, cutoff: 400.0, tolerance: 1e-6 }
    }

    fn dims(&self) -> Result<usize> {
        if self.d_cm < 2 {
            return Err(Error::Dimension("d_cm must be at least 2".into()));
        }
        Ok(self.d_cm - 1)
    }

    // δ-approximant evolution: u^0 = 0 and u^1 = dt δ_ε, i.e. E applied to δ(t)δ_ε(x)
    fn evolve<F: FnMut(i64, &Grid, &[f64])>(&self, t_max: f64, h: f64, exec: Execution, mut observe: F) -> Result<Scheme> {
        let dims = self.dims()?;
        let courant = self.td.courant.unwrap_or(1.0 / (dims as f64).sqrt());
        let steps = (t_max / (courant * h)).ceil().max(1.0) as usize;
        let h = t_max / (courant * steps as f64);
        let scheme = Scheme::new(self.r, h, courant, dims)?;
        let reach = t_max * h / scheme.dt + self.delta_width + 3.0 * h;
        let grid = Grid::covering(&vec![(-reach, reach); dims], h);
        let mut delta = grid.separable(|_, x| bump(x / self.delta_width));
        let norm = delta.iter().sum::<f64>() * grid.cell_volume();
        let c = 1.0 + scheme.implicit();
        delta.iter_mut().for_each(|v| *v *= scheme.dt / (norm * c));
        observe(0, &grid, &vec![0.0; grid.len()]);
        observe(1, &grid, &delta);
        if steps > 1 {
            march(&scheme, &grid, 1, 1, steps - 1, delta, vec![0.0; grid.len()], None, exec, |n, u| {
                observe(n, &grid, u)
            })?;
        }
        Ok(scheme)
    }

    /// Time-domain value of `Δ_r * δ_ε` at `(t, x̃)`, read out through [`Grid::smooth`]
    /// (at unit Courant number the two parity sublattices decouple).
    pub fn time_domain(&self, t: f64, x: &[f64], exec: Execution) -> Result<f64> {
        if x.len() != self.dims()? {
            return Err(Error::Dimension("point must have d_cm − 1 spatial coordinates".into()));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let mut value = 0.0;
        let scheme = self.evolve(t.abs(), self.td.h, exec, |_, _, _| {})?;
        let target = (t.abs() / scheme.dt).round() as i64;
        self.evolve(t.abs(), self.td.h, exec, |n, grid, u| {
            if n == target {
                value = grid.interpolate(&grid.smooth(u), x);
            }
        })?;
        Ok(t.signum() * value)
    }

    /// Momentum quadrature `(1/π)∫₀^∞ cos(kx) sin(ωt)/ω dk` with a smooth cutoff;
    /// returns `(value, estimated error)`. Only `d_cm = 2`, `r ≥ 0`.
    pub fn momentum(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        if self.d_cm != 2 || self.r < 0.0 {
            return Err(Error::InvalidConfig("momentum quadrature needs d_cm = 2 and r ≥ 0".into()));
        }
        let gl = GaussLegendre::new(10);
        let integral = |cut: f64| {
            let panel = (PI / (2.0 * (t.abs() + x.abs() + 1.0))).min(0.5);
            let panels = (cut / panel).ceil() as usize;
            gl.integrate(0.0, cut, panels, |k| {
                let w = (k * k + self.r).sqrt();
                let s = if w == 0.0 { t } else { (w * t).sin() / w };
                (k * x).cos() * s * taper(k / cut)
            }) / PI
        };
        let coarse = integral(self.cutoff);
        let fine = integral(2.0 * self.cutoff);
        let estimate = (fine - coarse).abs();
        if estimate > self.tolerance {
            return Err(Error::Quadrature { estimate });
        }
        Ok((fine, estimate))
    }

    /// `Δ_r * δ_ε` along the first spatial axis at the requested times (`t ≥ 0`).
    pub fn field(&self, times: &[f64], exec: Execution) -> Result<Vec<FieldSample>> {
        let t_max = times.iter().cloned().fold(0.0, f64::max);
        if t_max <= 0.0 {
            return Err(Error::InvalidConfig("field dump needs a positive time".into()));
        }
        let dims = self.dims()?;
        let probe = self.evolve(t_max, self.td.h, exec, |_, _, _| {})?;
        let targets: Vec<i64> = times.iter().map(|t| (t / probe.dt).round() as i64).collect();
        let mut rows = Vec::new();
        self.evolve(t_max, self.td.h, exec, |n, grid, u| {
            for (t, &target) in times.iter().zip(&targets) {
                if target == n {
                    let u = grid.smooth(u);
                    let axis_len = grid.n[0];
                    for k in 1..axis_len - 1 {
                        let mut x = vec![0.0; dims];
                        x[0] = grid.coord(0, k);
                        rows.push(FieldSample { t: *t, x: x[0], value: grid.interpolate(&u, &x) });
                    }
                }
            }
        })?;
        Ok(rows)
    }
}

/// Solution of the homogeneous equation: per mass level, two consecutive time levels.
#[derive(Debug, Clone)]
pub struct LevelSlab {
    pub level: usize,
    pub internal: SparseVec<Q>,
    pub scheme: Scheme,
    /// `u0` lives at step `n`, `u1` at step `n + 1`.
    pub n: i64,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RegularSolution {
    pub grid: Grid,
    pub slabs: Vec<LevelSlab>,
}

impl RegularSolution {
    /// Second-order start from Cauchy data `(u, ∂_t u)` at step `n`, one level with internal vector `internal`.
    pub fn from_cauchy<U, V>(grid: Grid, scheme: Scheme, level: usize, internal: SparseVec<Q>, n: i64, u: U, v: V) -> Self
    where
        U: Fn(&[f64]) -> f64,
        V: Fn(&[f64]) -> f64,
    {
        let u0 = grid.sample(&u);
        let v0 = grid.sample(&v);
        let lam2 = (scheme.dt / scheme.h).powi(2);
        let mut u1 = vec![0.0; grid.len()];
        let strides: Vec<usize> = (0..grid.dims()).map(|a| grid.stride(a)).collect();
        for i in 0..grid.len() {
            if grid.is_boundary(i) {
                continue;
            }
            let mut lap = -2.0 * grid.dims() as f64 * u0[i];
            for &s in &strides {
                lap += u0[i + s] + u0[i - s];
            }
            u1[i] = u0[i] + scheme.dt * v0[i] + 0.5 * (lam2 * lap - scheme.r * scheme.dt * scheme.dt * u0[i]);
        }
        RegularSolution { grid, slabs: vec![LevelSlab { level, internal, scheme, n, u0, u1 }] }
    }

    /// Midpoint time of the stored slab.
    pub fn time(&self) -> f64 {
        self.slabs.first().map(|s| (s.n as f64 + 0.5) * s.scheme.dt).unwrap_or(0.0)
    }

    /// Moves every level to step `n` (homogeneous evolution).
    pub fn evolve_to(&mut self, n: i64, exec: Execution) -> Result<()> {
        let grid = &self.grid;
        for slab in &mut self.slabs {
            if n > slab.n {
                let (near, far) = march(&slab.scheme, grid, slab.n + 1, 1, (n - slab.n) as usize, slab.u1.clone(), slab.u0.clone(), None, exec, |_, _| {})?;
                slab.u1 = near;
                slab.u0 = far;
            } else if n < slab.n {
                let (near, far) = march(&slab.scheme, grid, slab.n, -1, (slab.n - n) as usize, slab.u0.clone(), slab.u1.clone(), None, exec, |_, _| {})?;
                slab.u0 = near;
                slab.u1 = far;
            }
            slab.n = n;
        }
        Ok(())
    }

    /// `⟨U, F⟩ = ∫ ⟨U(x), F(x)⟩ dx` by marching through `supp F`.
    pub fn pair_with(&self, f: &SmearingFunction, space: &InternalSpace, exec: Execution) -> Result<f64> {
        let mut total = 0.0;
        for slab in &self.slabs {
            let pair = space.pair_f64(&slab.internal, &space.level_part(&f.internal, slab.level));
            if pair == 0.0 {
                continue;
            }
            let src = Source::new(&f.spacetime, &self.grid)?;
            let (w0, w1) = src.window(slab.scheme.dt);
            let mut acc = 0.0;
            let mut take = |n: i64, u: &[f64]| {
                if n > w0 && n < w1 {
                    let a = src.time_factor(slab.scheme.time(n));
                    if a != 0.0 {
                        acc += a * self.grid.dot(&src.space, u, exec);
                    }
                }
            };
            take(slab.n, &slab.u0);
            take(slab.n + 1, &slab.u1);
            if w1 > slab.n + 1 {
                march(&slab.scheme, &self.grid, slab.n + 1, 1, (w1 - slab.n - 1) as usize, slab.u1.clone(), slab.u0.clone(), None, exec, &mut take)?;
            }
            if w0 < slab.n {
                march(&slab.scheme, &self.grid, slab.n, -1, (slab.n - w0) as usize, slab.u0.clone(), slab.u1.clone(), None, exec, &mut take)?;
            }
            total += pair * acc * self.grid.cell_volume() * slab.scheme.dt;
        }
        Ok(total)
    }
}

/// `U = EF` at step `n` on `grid`, one slab per mass level present in `F`.
pub fn apply_e(
    f: &SmearingFunction,
    space: &InternalSpace,
    grid: Grid,
    td: &TimeDomain,
    n: i64,
    exec: Execution,
) -> Result<RegularSolution> {
    let src = Source::new(&f.spacetime, &grid)?;
    let mut slabs = Vec::new();
    for level in space.levels(&f.internal) {
        let scheme = td.scheme(space.mass_squared_f64(level), grid.h, grid.dims())?;
        let (w0, w1) = src.window(scheme.dt);
        let zeros = vec![0.0; grid.len()];
        // retarded part at (n, n+1)
        let (mut u0, mut u1) = (zeros.clone(), zeros.clone());
        if n + 1 > w0 {
            let (near, far) = march(&scheme, &grid, w0, 1, (n + 1 - w0) as usize, zeros.clone(), zeros.clone(), Some(&src), exec, |_, _| {})?;
            u1 = near;
            u0 = far;
        }
        // minus the advanced part
        if n < w1 {
            let (near, far) = march(&scheme, &grid, w1, -1, (w1 - n) as usize, zeros.clone(), zeros.clone(), Some(&src), exec, |_, _| {})?;
            u0.iter_mut().zip(&near).for_each(|(a, b)| *a -= b);
            u1.iter_mut().zip(&far).for_each(|(a, b)| *a -= b);
        }
        slabs.push(LevelSlab { level, internal: space.level_part(&f.internal, level), scheme, n, u0, u1 });
    }
    Ok(RegularSolution { grid, slabs })
}

/// `σ(U, V) = ∫_{x⁰=t} ⟨U, ∂₀V⟩ − ⟨∂₀U, V⟩` via the discrete Wronskian.
pub fn symplectic_form(u: &RegularSolution, v: &RegularSolution, space: &InternalSpace, exec: Execution) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::Dimension("solutions live on different grids".into()));
    }
    let mut total = 0.0;
    for a in &u.slabs {
        for b in v.slabs.iter().filter(|b| b.level == a.level) {
            if a.n != b.n || a.scheme != b.scheme {
                return Err(Error::Dimension("solutions are stored at different times or schemes".into()));
            }
            let pair = space.pair_f64(&a.internal, &b.internal);
            if pair != 0.0 {
                total += pair * a.scheme.wronskian(&u.grid, (&a.u0, &a.u1), (&b.u0, &b.u1), exec);
            }
        }
    }
    Ok(total)
}

/// Max-norm residual of `(−□ + r)E⁺f − f`, measured with fourth-order differences
/// on the time slabs nearest `probe_times`, relative to `max |f|`.
pub fn retarded_residual(r: f64, f: &SpacetimeBump, h: f64, courant: f64, probe_times: &[f64], exec: Execution) -> Result<f64> {
    let dims = f.dim() - 1;
    let scheme = Scheme::new(r, h, courant, dims)?;
    let t_end = probe_times.iter().cloned().fold(f.support(0).1, f64::max);
    let mut later = f.clone();
    later.center[0] = t_end;
    let grid = smear_grid(&later, f, &scheme);
    let src = Source::new(f, &grid)?;
    let (w0, _) = src.window(scheme.dt);
    let targets: Vec<i64> = probe_times.iter().map(|t| (t / scheme.dt).round() as i64).collect();
    let last = targets.iter().cloned().max().unwrap_or(w0) + 2;
    if targets.iter().any(|&n| n - 2 <= w0) {
        return Err(Error::InvalidConfig("probe times must follow the start of the source".into()));
    }
    let mut kept: Vec<(i64, Vec<f64>)> = Vec::new();
    let zeros = vec![0.0; grid.len()];
    march(&scheme, &grid, w0, 1, (last - w0) as usize, zeros.clone(), zeros, Some(&src), exec, |n, u| {
        if targets.iter().any(|&m| (n - m).abs() <= 2) {
            kept.push((n, u.to_vec()));
        }
    })?;
    let level = |n: i64| kept.iter().find(|(m, _)| *m == n).map(|(_, u)| u.as_slice());
    let peak = src.space.iter().fold(0.0f64, |m, v| m.max(v.abs())) * f.factor(0, f.center[0]);
    let stencil = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
    let mut worst = 0.0f64;
    for &m in &targets {
        let rows: Vec<&[f64]> = (-2..=2).map(|k| level(m + k).expect("kept level")).collect();
        let t = scheme.time(m);
        let ft = src.time_factor(t);
        let per: Vec<f64> = map_slice(exec, &(0..grid.len()).collect::<Vec<_>>(), |&i| {
            let interior = (0..dims).all(|a| {
                let k = grid.index(i, a);
                k >= 2 && k + 3 <= grid.n[a]
            });
            if !interior {
                return 0.0;
            }
            let u = rows[2][i];
            let utt: f64 = (0..5).map(|k| stencil[k] * rows[k][i]).sum::<f64>() / (scheme.dt * scheme.dt);
            let mut lap = 0.0;
            for a in 0..dims {
                let s = grid.stride(a) as isize;
                lap += (0..5).map(|k| stencil[k] * rows[2][(i as isize + (k as isize - 2) * s) as usize]).sum::<f64>();
            }
            lap /= h * h;
            (utt - lap + r * u - ft * src.space[i]).abs()
        });
        worst = per.into_iter().fold(worst, f64::max);
    }
    Ok(worst / peak)
}

/// One row of a locality scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub r: f64,
    pub kind: &'static str,
    pub dt: f64,
    pub dx: f64,
    /// `Im(−i⟨F, EG⟩)`.
    pub commutator: f64,
    pub control_magnitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalityScan {
    pub d_cm: usize,
    pub radius: f64,
    pub separations: Vec<f64>,
    /// `(Δt, Δx)` offsets of the timelike controls.
    pub timelike: Vec<(f64, f64)>,
    pub td: TimeDomain,
}

impl LocalityScan {
    pub fn new(d_cm: usize) -> Self {
        LocalityScan {
            d_cm,
            radius: 1.0,
            separations: vec![4.25, 4.5, 5.0, 6.0, 8.0],
            timelike: vec![(5.0, 0.0), (6.0, 1.0)],
            td: TimeDomain::default(),
        }
    }

    pub fn base_bump(&self) -> SpacetimeBump {
        SpacetimeBump { center: vec![0.0; self.d_cm], radius: vec![self.radius; self.d_cm] }
    }

    fn offset(&self, dt: f64, dx: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.d_cm];
        v[0] = dt;
        v[1] = dx;
        v
    }

    /// Internal probe vector for a level: `Ω₀` or a transverse `α_{−ℓ}^μ Ω₀`.
    pub fn probe_vector(&self, space: &InternalSpace, level: usize) -> Result<SparseVec<Q>> {
        let d = space.basis.directions();
        let mu = if d > self.d_cm { self.d_cm } else { d - 1 };
        space.single_mode(level as u32, mu as u32)
    }

    /// Rows for each level: spacelike cases first, then timelike controls.
    pub fn run(&self, space: &InternalSpace, levels: &[usize], exec: Execution) -> Result<Vec<ScanRow>> {
        if self.d_cm < 2 {
            return Err(Error::Dimension("d_cm must be at least 2".into()));
        }
        for &s in &self.separations {
            // box supports: spatial gap s − 2ρ must beat the time extent 2ρ
            if s <= 4.0 * self.radius {
                return Err(Error::InvalidConfig(format!("separation {s} is not spacelike for radius {}", self.radius)));
            }
        }
        for &(dt, dx) in &self.timelike {
            if dt.abs() - 2.0 * self.radius <= dx.abs() + 2.0 * self.radius {
                return Err(Error::InvalidConfig(format!("control ({dt}, {dx}) is not timelike separated")));
            }
        }
        let f = self.base_bump();
        let cases: Vec<(&'static str, f64, f64)> = self
            .separations
            .iter()
            .map(|&s| ("spacelike", 0.0, s))
            .chain(self.timelike.iter().map(|&(dt, dx)| ("timelike", dt, dx)))
            .collect();
        let mut rows = Vec::new();
        for &level in levels {
            let v = self.probe_vector(space, level)?;
            let pair = space.pair_f64(&v, &v);
            let r = space.mass_squared_f64(level);
            let values: Vec<f64> = map_slice(exec, &cases, |&(_, dt, dx)| {
                let g = f.shifted(&self.offset(dt, dx));
                scalar_smear(r, &f, &g, &self.td, Execution::Sequential).map(|s| -pair * s)
            })
            .into_iter()
            .collect::<Result<_>>()?;
            let control = cases
                .iter()
                .zip(&values)
                .filter(|(c, _)| c.0 == "timelike")
                .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            for (c, v) in cases.iter().zip(values) {
                rows.push(ScanRow { r, kind: c.0, dt: c.1, dx: c.2, commutator: v, control_magnitude: control });
            }
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn bump2(t: f64, x: f64, rho: f64) -> SpacetimeBump {
        SpacetimeBump::new(vec![t, x], vec![rho, rho]).unwrap()
    }

    #[test]
    fn cfl_is_enforced() {
        assert!(Scheme::new(0.0, 0.1, 1.0, 1).is_ok());
        assert!(matches!(Scheme::new(0.0, 0.1, 0.8, 2), Err(Error::Cfl { .. })));
    }

    #[test]
    fn zero_source_gives_zero() {
        let td = TimeDomain { h: 0.05, courant: None, richardson: false };
        let f = bump2(0.0, 0.0, 1.0);
        let g = bump2(3.0, 0.5, 1.0);
        let s = scalar_smear(0.0, &f, &g, &td, Execution::Sequential).unwrap();
        assert!(s.abs() > 0.0);
        let space = InternalSpace::new(4, q(1), 1, Execution::Sequential);
        let zero = SmearingFunction::new(g.clone(), SparseVec::zero());
        let f_int = SmearingFunction::new(f, space.single_mode(1, 2).unwrap());
        let c = smeared_commutator(&f_int, &zero, &space, &td, Execution::Sequential).unwrap();
        assert_eq!(c, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn smear_is_antisymmetric() {
        let td = TimeDomain { h: 0.05, courant: None, richardson: false };
        let f = bump2(0.0, 0.0, 1.0);
        let g = bump2(2.5, 0.7, 0.8);
        for r in [-2.0, 0.0, 2.0] {
            let a = scalar_smear(r, &f, &g, &td, Execution::Sequential).unwrap();
            let b = scalar_smear(r, &g, &f, &td, Execution::Sequential).unwrap();
            assert!((a + b).abs() <= 1e-12 * a.abs(), "r={r}: {a} {b}");
        }
        // ⟨f, Ef⟩ = 0
        let s = scalar_smear(2.0, &f, &f, &td, Execution::Sequential).unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn equal_time_is_zero_and_odd_in_time() {
        let pj = PauliJordanEvaluator { td: TimeDomain { h: 0.01, ..Default::default() }, ..PauliJordanEvaluator::new(2.0, 2) };
        assert_eq!(pj.time_domain(0.0, &[0.3], Execution::Sequential).unwrap(), 0.0);
        let a = pj.time_domain(1.0, &[0.2], Execution::Sequential).unwrap();
        let b = pj.time_domain(-1.0, &[0.2], Execution::Sequential).unwrap();
        assert_eq!(a, -b);
        // outside the cone the discrete kernel vanishes identically
        assert_eq!(pj.time_domain(1.0, &[1.5], Execution::Sequential).unwrap(), 0.0);
    }

    #[test]
    fn momentum_route_rejects_tachyon_and_high_dims() {
        assert!(PauliJordanEvaluator::new(-2.0, 2).momentum(1.0, 0.0).is_err());
        assert!(PauliJordanEvaluator::new(0.0, 3).momentum(1.0, 0.0).is_err());
    }

    #[test]
    fn wronskian_is_conserved() {
        let td = TimeDomain { h: 0.02, courant: None, richardson: false };
        let scheme = td.scheme(-2.0, 0.02, 1).unwrap();
        let grid = Grid::covering(&[(-8.0, 8.0)], 0.02);
        let u = RegularSolution::from_cauchy(grid.clone(), scheme, 0, SparseVec::unit(0), 0, |x| bump(x[0] / 1.5), |_| 0.0);
        let v = RegularSolution::from_cauchy(grid, scheme, 0, SparseVec::unit(0), 0, |x| 0.3 * bump(x[0] - 0.5), |x| bump(x[0] + 0.2));
        let space = InternalSpace::new(2, q(1), 0, Execution::Sequential);
        let s0 = symplectic_form(&u, &v, &space, Execution::Sequential).unwrap();
        let (mut u2, mut v2) = (u.clone(), v.clone());
        u2.evolve_to(150, Execution::Sequential).unwrap();
        v2.evolve_to(150, Execution::Sequential).unwrap();
        let s1 = symplectic_form(&u2, &v2, &space, Execution::Sequential).unwrap();
        assert!((s0 - s1).abs() <= 1e-10 * s0.abs());
        assert_eq!(symplectic_form(&u, &u, &space, Execution::Sequential).unwrap(), 0.0);
    }

    #[test]
    fn scan_rejects_non_spacelike_cases() {
        let space = InternalSpace::new(4, q(1), 1, Execution::Sequential);
        let mut scan = LocalityScan::new(2);
        scan.separations = vec![3.0];
        assert!(scan.run(&space, &[0], Execution::Sequential).is_err());
    }
}
