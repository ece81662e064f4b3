//! Acceptance gate: one PASS/FAIL line per criterion, exit status 1 on any failure.
//!
//! Runs with `harness = false` so the lines are printed even when everything passes.

use std::time::Instant;

use num_bigint::BigUint;
use num_traits::Zero;
use stringfock::config::{Gauge, Metric, ModelConfig};
use stringfock::fock_basis::enumerate_basis;
use stringfock::lattice::Grid;
use stringfock::oscillator::ccr_check;
use stringfock::physical_states::{default_momentum, noghost_report, solve_constraints};
use stringfock::propagator::{apply_e, retarded_residual, symplectic_form, LocalityScan, RegularSolution, TimeDomain};
use stringfock::quantum_field::{field_ccr, standard_ccr_family, FieldContext, ShellControls};
use stringfock::scalar::{q, Q};
use stringfock::smearing::{InternalSpace, SmearingFunction, SpacetimeBump};
use stringfock::sparse::SparseVec;
use stringfock::string_cone::{self_convergence, solve, ConeConfig, InitialData};
use stringfock::virasoro::{build_m2, mass_spectrum, Virasoro};
use stringfock::Execution;

const EXEC: Execution = Execution::Parallel;

// Tolerances fixed by the acceptance criteria.
const LOCALITY_RATIO: f64 = 1e-6;
const MASSLESS_ORACLE_REL: f64 = 1e-4;
const FIELD_CCR_REL: f64 = 1e-4;
const CONE_THRESHOLD: f64 = 1e-8;
const CONE_LEAKAGE: f64 = 1e-6;
const CONE_ORDER: f64 = 1.9;
const ENERGY_DRIFT: f64 = 1e-4;
const SIGMA_REL: f64 = 1e-6;
const REPRODUCING_REL: f64 = 1e-4;
const RESIDUAL_ORDER: f64 = 1.9;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// independent oracles

/// Number of states at each level `0..=max` built from `colors` oscillator species,
/// from the product `Π_n (1 − x^n)^{−colors}` expanded one factor at a time.
fn colored_partitions(max: usize, colors: usize) -> Vec<BigUint> {
    let mut c = vec![BigUint::zero(); max + 1];
    c[0] = BigUint::from(1u32);
    for n in 1..=max {
        for _ in 0..colors {
            for k in n..=max {
                let add = c[k - n].clone();
                c[k] += add;
            }
        }
    }
    c
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn psi(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// `∫∫ f(x) Δ₀(x − y) g(y)` in 1+1 dimensions for unit bumps `f` at the origin and `g` at `(T, X)`,
/// with the massless kernel `Δ₀(s, y) = ½ sign(s) θ(|s| − |y|)`. Each axis contributes the
/// autocorrelation `A(w) = ∫ ψ(τ) ψ(τ − w) dτ`; the kernel is then integrated against
/// `A(s + T) A(y + X)`. Valid when the kernel jump stays outside the product support.
fn massless_oracle(t: f64, x: f64) -> f64 {
    let auto = |w: f64| simpson(|tau| psi(tau) * psi(tau - w), -1.0, 1.0, 2000);
    let n = 400;
    let (s0, y0) = (-t - 2.0, -x - 2.0);
    let h = 4.0 / n as f64;
    let a_s: Vec<f64> = (0..=n).map(|i| auto(s0 + i as f64 * h + t)).collect();
    let a_y: Vec<f64> = (0..=n).map(|j| auto(y0 + j as f64 * h + x)).collect();
    let w = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
    let mut total = 0.0;
    for i in 0..=n {
        let s = s0 + i as f64 * h;
        for j in 0..=n {
            let y = y0 + j as f64 * h;
            let kernel = if s.abs() > y.abs() { 0.5 * s.signum() } else { 0.0 };
            total += w(i) * w(j) * kernel * a_s[i] * a_y[j];
        }
    }
    total * (h / 3.0) * (h / 3.0)
}

/// d'Alembert solution of `U_tt = U_xx` from `(u0, v0)`, paired with a product bump.
fn dalembert_pairing(u0: &dyn Fn(f64) -> f64, v0: &dyn Fn(f64) -> f64, f: &SpacetimeBump) -> f64 {
    let u = |t: f64, x: f64| 0.5 * (u0(x - t) + u0(x + t)) + 0.5 * simpson(v0, x - t, x + t, 400);
    let (t0, t1) = f.support(0);
    let (x0, x1) = f.support(1);
    simpson(|t| f.factor(0, t) * simpson(|x| f.factor(1, x) * u(t, x), x0, x1, 200), t0, t1, 200)
}

// ---------------------------------------------------------------------------
// criteria

fn c1_ccr() -> Outcome {
    let basis = enumerate_basis(26, 4);
    let records = ccr_check(&basis, &Metric::minkowski(26), 4, EXEC).map_err(|e| e.to_string())?;
    // (m, n) pairs with |m| + |n| in {2, 3, 4}: (1 + 2 + 3) magnitudes × 4 sign choices
    let expected = 24 * 26 * 26;
    let failed = records.iter().filter(|r| !r.pass).count();
    ensure(
        records.len() == expected && failed == 0,
        format!("{} of {} commutators exactly zero on their safe subspaces", records.len() - failed, expected),
    )
}

fn virasoro_suite(d: usize, cutoff: usize) -> Result<(Q, usize, usize), String> {
    let basis = enumerate_basis(d, cutoff);
    let metric = Metric::minkowski(d);
    let rest = Virasoro::new(&basis, &metric, vec![Q::zero(); d]).map_err(|e| e.to_string())?;
    let c = rest.fit_central_charge().map_err(|e| e.to_string())?;
    // brackets checked at a generic momentum with c frozen from the rest frame
    let mut p = vec![Q::zero(); d];
    p[0] = Q::new(3.into(), 2.into());
    p[1] = Q::new((-1).into(), 3.into());
    p[d - 1] = q(2);
    let vir = Virasoro::new(&basis, &metric, p).map_err(|e| e.to_string())?;
    let (mut checked, mut zero) = (0, 0);
    for m in -3i64..=3 {
        for n in -3i64..=3 {
            if m.abs() + n.abs() > cutoff as i64 || vir.safe_level(m, n).is_none() {
                continue;
            }
            let res = vir.bracket_residual_with_central(m, n, &c, EXEC).map_err(|e| e.to_string())?;
            checked += 1;
            zero += usize::from(res.is_zero());
        }
    }
    Ok((c, checked, zero))
}

fn c2_virasoro() -> Outcome {
    let (c4, n4, z4) = virasoro_suite(4, 6)?;
    let (c26, n26, z26) = virasoro_suite(26, 3)?;
    ensure(
        c4 == q(4) && c26 == q(26) && z4 == n4 && z26 == n26 && n4 == 49,
        format!("d=4 N=6: c={c4}, {z4}/{n4} brackets zero; d=26 N=3: c={c26}, {z26}/{n26} brackets zero"),
    )
}

fn c3_spectrum() -> Outcome {
    let basis = enumerate_basis(24, 3);
    let m2 = build_m2(Gauge::LightCone, &basis, &Metric::euclidean(24), &q(1), EXEC).map_err(|e| e.to_string())?;
    let rows = mass_spectrum(&m2, &basis).map_err(|e| e.to_string())?;
    let oracle = colored_partitions(3, 24);
    let got: Vec<(Q, BigUint)> = rows.iter().map(|r| (r.mass_squared.clone(), BigUint::from(r.degeneracy))).collect();
    let want: Vec<(Q, BigUint)> = (0..=3).map(|l| (q(2 * l as i64 - 2), oracle[l].clone())).collect();
    let shown: Vec<String> = got.iter().map(|(m, g)| format!("{m}:{g}")).collect();
    ensure(got == want, format!("M² : multiplicity = {}", shown.join(", ")))
}

fn c4_noghost() -> Outcome {
    let rows = noghost_report(26, &q(1), 3, EXEC).map_err(|e| e.to_string())?;
    let oracle = colored_partitions(3, 24);
    let ok26 = rows.len() == 4
        && rows.iter().all(|r| {
            r.signature.negative == 0 && r.signature.zero == 0 && BigUint::from(r.dim_phys) == oracle[r.level]
        });
    let dims: Vec<String> = rows.iter().map(|r| r.dim_phys.to_string()).collect();

    let cfg = ModelConfig::new(27, q(1), Gauge::Covariant, 2).validate().map_err(|e| e.to_string())?;
    let r = q(2);
    let sol = solve_constraints(&r, default_momentum(&r, 27), &cfg, EXEC).map_err(|e| e.to_string())?;
    let brute = sol.direct_signature(EXEC);
    let sig = sol.quotient_signature;
    // regression value confirmed by the brute-force Gram on H′
    let ok27 = sig.negative == 1 && brute.negative == sig.negative && brute.positive == sig.positive;
    ensure(
        ok26 && ok27,
        format!(
            "d=26 levels 0..3 positive definite, dim_phys = [{}]; d=27 level 2 quotient ({},{},{}) brute ({},{},{})",
            dims.join(", "),
            sig.positive,
            sig.zero,
            sig.negative,
            brute.positive,
            brute.zero,
            brute.negative
        ),
    )
}

fn c5_photon() -> Outcome {
    let d = 26;
    let cfg = ModelConfig::new(d, q(1), Gauge::Covariant, 1).validate().map_err(|e| e.to_string())?;
    let r = Q::zero();
    let p = default_momentum(&r, d);
    let sol = solve_constraints(&r, p.clone(), &cfg, EXEC).map_err(|e| e.to_string())?;
    // longitudinal state p_μ α₋₁^μ Ω with p_μ = η_μν p^ν
    let metric = Metric::minkowski(d);
    let mut longitudinal = Vec::new();
    for (mu, pmu) in p.iter().enumerate() {
        if pmu.is_zero() {
            continue;
        }
        let state = stringfock::fock_basis::FockBasisState::from_modes(vec![stringfock::fock_basis::ModeIndex::new(1, mu as u32)]);
        let idx = sol.basis.index_of(&state).ok_or("missing level-1 state")?;
        longitudinal.push((idx, pmu * q(metric.sign(mu) as i64)));
    }
    let longitudinal = SparseVec::from_pairs(longitudinal);
    let proportional = sol.radical_basis.len() == 1 && {
        let v = &sol.radical_basis[0];
        let (i0, l0) = &longitudinal.entries()[0];
        let ratio = v.get(*i0) / l0.clone();
        !ratio.is_zero() && v.sub(&longitudinal.scale(&ratio)).is_zero()
    };
    let sig = sol.quotient_signature;
    ensure(
        sol.dim_hprime() == 25 && sol.dim_radical() == 1 && (sig.positive, sig.zero, sig.negative) == (24, 0, 0) && proportional,
        format!(
            "dim H′ = {}, radical = {} (longitudinal: {proportional}), quotient ({},{},{})",
            sol.dim_hprime(),
            sol.dim_radical(),
            sig.positive,
            sig.zero,
            sig.negative
        ),
    )
}

fn c6_locality() -> Outcome {
    let space = InternalSpace::new(26, q(1), 2, EXEC);
    let scan = LocalityScan::new(2);
    let rows = scan.run(&space, &[0, 1, 2], EXEC).map_err(|e| e.to_string())?;
    let spacelike = rows.iter().filter(|r| r.kind == "spacelike").count();
    let timelike = rows.iter().filter(|r| r.kind == "timelike").count();
    let worst_ratio = rows
        .iter()
        .filter(|r| r.kind == "spacelike")
        .fold(0.0f64, |m, r| m.max(r.commutator.abs() / r.control_magnitude));
    // level 1 has r = 0; probe α₋₁^2 Ω has norm 1, and the scan reports −pair·∫∫fΔg
    let mut worst_oracle = 0.0f64;
    for row in rows.iter().filter(|r| r.kind == "timelike" && r.r == 0.0) {
        let oracle = -massless_oracle(row.dt, row.dx);
        worst_oracle = worst_oracle.max((row.commutator - oracle).abs() / oracle.abs());
    }
    ensure(
        spacelike == 15 && timelike == 6 && worst_ratio <= LOCALITY_RATIO && worst_oracle <= MASSLESS_ORACLE_REL,
        format!("max spacelike/control = {worst_ratio:.3e}, r=0 timelike vs massless oracle rel = {worst_oracle:.3e}"),
    )
}

fn c7_field_ccr() -> Outcome {
    let space = InternalSpace::new(26, q(1), 2, EXEC);
    let (tests, pairs) = standard_ccr_family(&space).map_err(|e| e.to_string())?;
    let ctx = FieldContext::new(space, 2, ShellControls::default()).map_err(|e| e.to_string())?;
    let report = field_ccr(&ctx, &tests, &pairs, 3, &TimeDomain::default(), EXEC).map_err(|e| e.to_string())?;
    ensure(
        report.pairs.len() >= 3 && report.max_relative_mismatch <= FIELD_CCR_REL,
        format!("{} pairs, max relative mismatch {:.3e}", report.pairs.len(), report.max_relative_mismatch),
    )
}

fn c8_string_cone() -> Outcome {
    let cfg = ConeConfig { h: 0.025, radius: 1.5, t_final: 1.0, ..ConeConfig::default() };
    let data = InitialData::bump(2, cfg.radius);
    let run = solve(&cfg, &data, EXEC).map_err(|e| e.to_string())?;
    let leakage = run.cone_leakage(CONE_THRESHOLD);
    let drift = run.energy_drift();
    let conv = self_convergence(&cfg, &data, EXEC).map_err(|e| e.to_string())?;
    ensure(
        leakage < CONE_LEAKAGE && drift < ENERGY_DRIFT && conv.order >= CONE_ORDER,
        format!("leakage {leakage:.3e}, energy drift {drift:.3e}, self-convergence order {:.4}", conv.order),
    )
}

fn c9_propagator() -> Outcome {
    let exec = EXEC;
    let space = InternalSpace::new(4, q(1), 2, exec);
    let h = 0.01;
    let td = TimeDomain { h, courant: None, richardson: false };
    let grid = Grid::covering(&[(-12.0, 12.0)], h);
    let err = |e: stringfock::Error| e.to_string();

    // σ is independent of the slice, for every mass level
    let mut sigma_worst = 0.0f64;
    for level in 0..=2usize {
        let internal = space.single_mode(level as u32, 2).map_err(err)?;
        let scheme = td.scheme(space.mass_squared_f64(level), h, 1).map_err(err)?;
        let u = RegularSolution::from_cauchy(grid.clone(), scheme, level, internal.clone(), 0, |x| psi(x[0] / 1.5), |_| 0.0);
        let v = RegularSolution::from_cauchy(grid.clone(), scheme, level, internal, 0, |x| 0.3 * psi(x[0] - 0.5), |x| psi(x[0] + 0.2));
        let s0 = symplectic_form(&u, &v, &space, exec).map_err(err)?;
        let (mut u2, mut v2) = (u, v);
        let steps = (3.0 / scheme.dt).round() as i64;
        u2.evolve_to(steps, exec).map_err(err)?;
        v2.evolve_to(steps, exec).map_err(err)?;
        let s1 = symplectic_form(&u2, &v2, &space, exec).map_err(err)?;
        sigma_worst = sigma_worst.max((s1 - s0).abs() / s0.abs());
    }

    // ⟨U, F⟩ = σ(U, EF) for a massless level, both sides against d'Alembert
    let internal = space.single_mode(1, 2).map_err(err)?;
    let scheme = td.scheme(0.0, h, 1).map_err(err)?;
    let u0 = |x: f64| psi(x / 1.5);
    let v0 = |x: f64| 0.5 * psi(x + 0.3);
    let u = RegularSolution::from_cauchy(grid.clone(), scheme, 1, internal.clone(), 0, |x| u0(x[0]), |x| v0(x[0]));
    let bump = SpacetimeBump::new(vec![2.0, 0.5], vec![1.0, 1.0]).map_err(err)?;
    let f = SmearingFunction::new(bump.clone(), internal);
    let ef = apply_e(&f, &space, grid, &td, 0, exec).map_err(err)?;
    let sigma = symplectic_form(&u, &ef, &space, exec).map_err(err)?;
    let paired = u.pair_with(&f, &space, exec).map_err(err)?;
    let oracle = dalembert_pairing(&u0, &v0, &bump);
    let rep_worst = ((sigma - oracle).abs() / oracle.abs()).max((paired - oracle).abs() / oracle.abs());

    // (−□ + r)E⁺f − f under refinement
    let src = SpacetimeBump::new(vec![0.0, 0.0], vec![1.0, 1.0]).map_err(err)?;
    let mut order_worst = f64::INFINITY;
    for r in [-2.0, 0.0, 2.0] {
        let coarse = retarded_residual(r, &src, 0.02, 0.5, &[0.0, 0.5], exec).map_err(err)?;
        let fine = retarded_residual(r, &src, 0.01, 0.5, &[0.0, 0.5], exec).map_err(err)?;
        order_worst = order_worst.min((coarse / fine).log2());
    }
    ensure(
        sigma_worst <= SIGMA_REL && rep_worst <= REPRODUCING_REL && order_worst >= RESIDUAL_ORDER,
        format!(
            "σ drift {sigma_worst:.3e}; σ(U,EF) = {sigma:.10}, ⟨U,F⟩ = {paired:.10}, oracle {oracle:.10} (rel {rep_worst:.3e}); residual order {order_worst:.4}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 oscillator CCR (d=26, N=4)", c1_ccr),
        ("2 Virasoro brackets (d=4 N=6, d=26 N=3)", c2_virasoro),
        ("3 light-cone spectrum (a=1, N=3)", c3_spectrum),
        ("4 no-ghost (d=26 levels 0..3, d=27 level 2)", c4_noghost),
        ("5 photon sector (r=0)", c5_photon),
        ("6 locality scan (d_cm=2)", c6_locality),
        ("7 field CCR consistency", c7_field_ccr),
        ("8 string light cone (N=1, d_cm=2)", c8_string_cone),
        ("9 propagator axioms", c9_propagator),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
