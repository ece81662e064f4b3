use num_traits::Zero;
use serde::Deserialize;
use serde_json::{json, Value};
use stringfock::fock_basis::{enumerate_basis, level_degeneracy, FockBasisState, ModeIndex};
use stringfock::oscillator::ccr_check;
use stringfock::physical_states::{level_for_mass, noghost_report};
use stringfock::propagator::{LocalityScan, PauliJordanEvaluator, TimeDomain};
use stringfock::quantum_field::{field_ccr, standard_ccr_family, FieldContext, ShellControls};
use stringfock::scalar::{parse_q, q, Q};
use stringfock::smearing::{InternalSpace, SmearingFunction, SpacetimeBump};
use stringfock::sparse::SparseVec;
use stringfock::string_cone::{solve, ConeConfig, InitialData};
use stringfock::virasoro::{build_m2, mass_spectrum, Virasoro};
use stringfock::worldsheet::LightConeData;
use stringfock::{Execution, ModelConfig};

use crate::output::{f, Report};
use crate::{Command, Failure, ModelArgs};

/// Spacelike commutators must stay below this fraction of the timelike controls.
const LOCALITY_RATIO: f64 = 1e-6;
const FIELD_CCR_TOLERANCE: f64 = 1e-4;
const WORLDSHEET_TOLERANCE: f64 = 1e-10;
const CONE_LEAKAGE: f64 = 1e-6;
const ENERGY_DRIFT: f64 = 1e-4;

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn resolve(cfg: &ModelConfig, args: &ModelArgs) -> Result<ModelConfig, Failure> {
    let mut cfg = cfg.clone();
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if let Some(a) = &args.a {
        cfg.set("a", a)?;
    }
    if let Some(g) = &args.gauge {
        cfg.set("gauge", g)?;
    }
    if let Some(n) = args.cutoff {
        cfg.level_cutoff = n;
    }
    Ok(cfg.validate()?)
}

fn parse_a(cfg: &ModelConfig, a: &Option<String>) -> Result<Q, Failure> {
    match a {
        Some(s) => parse_q(s).ok_or_else(|| Failure::Usage(format!("invalid intercept '{s}'"))),
        None => Ok(cfg.a.clone()),
    }
}

pub fn run(cmd: &Command, cfg: &ModelConfig, exec: Execution) -> Result<Report, Failure> {
    match cmd {
        Command::Basis { directions, cutoff } => {
            let directions = directions.unwrap_or(cfg.directions());
            let cutoff = cutoff.unwrap_or(cfg.level_cutoff);
            let basis = enumerate_basis(directions, cutoff);
            let mut ok = true;
            let levels: Vec<Value> = (0..=cutoff)
                .map(|l| {
                    let count = basis.level_count(l);
                    ok &= level_degeneracy(l, directions).to_string() == count.to_string();
                    json!({ "level": l, "count": count })
                })
                .collect();
            Ok(Report::json(json!({ "directions": directions, "cutoff": cutoff, "total": basis.len(), "levels": levels }), ok))
        }
        Command::CcrCheck { model } => {
            let cfg = resolve(cfg, model)?;
            let basis = enumerate_basis(cfg.directions(), cfg.level_cutoff);
            let records = ccr_check(&basis, &cfg.metric(), cfg.level_cutoff, exec)?;
            let failures: Vec<Value> = records.iter().filter(|r| !r.pass).map(to_value).collect();
            let ok = failures.is_empty();
            Ok(Report::json(
                json!({
                    "d": cfg.d,
                    "gauge": cfg.gauge.to_string(),
                    "directions": cfg.directions(),
                    "cutoff": cfg.level_cutoff,
                    "checked": records.len(),
                    "failures": failures,
                    "pass": ok,
                }),
                ok,
            ))
        }
        Command::VirasoroCheck { model, max_mode } => {
            let cfg = resolve(cfg, model)?;
            let basis = enumerate_basis(cfg.directions(), cfg.level_cutoff);
            let metric = cfg.metric();
            let vir = Virasoro::new(&basis, &metric, vec![Q::zero(); cfg.directions()])?;
            let c = vir.fit_central_charge()?;
            let c_ok = c == q(cfg.directions() as i64);
            let big = cfg.level_cutoff as i64;
            let mut checked = 0usize;
            let mut failures = Vec::new();
            for m in -max_mode..=*max_mode {
                for n in -max_mode..=*max_mode {
                    if m.abs() + n.abs() > big {
                        continue;
                    }
                    checked += 1;
                    if !vir.bracket_residual_with_central(m, n, &c, exec)?.is_zero() {
                        failures.push(json!([m, n]));
                    }
                }
            }
            let ok = c_ok && failures.is_empty();
            Ok(Report::json(
                json!({
                    "directions": cfg.directions(),
                    "cutoff": cfg.level_cutoff,
                    "central_charge": c.to_string(),
                    "central_charge_matches_directions": c_ok,
                    "pairs_checked": checked,
                    "failures": failures,
                    "pass": ok,
                }),
                ok,
            ))
        }
        Command::Spectrum { model } => {
            let cfg = resolve(cfg, model)?;
            let basis = enumerate_basis(cfg.directions(), cfg.level_cutoff);
            let m2 = build_m2(cfg.gauge, &basis, &cfg.metric(), &cfg.a, exec)?;
            let rows = mass_spectrum(&m2, &basis)?;
            let mut ok = rows.len() == cfg.level_cutoff + 1;
            for r in &rows {
                ok &= r.mass_squared == q(2 * r.level as i64) - &cfg.a * q(2);
                ok &= level_degeneracy(r.level, cfg.directions()).to_string() == r.degeneracy.to_string();
            }
            let out = rows
                .iter()
                .map(|r| vec![r.level.to_string(), r.mass_squared.to_string(), r.degeneracy.to_string()])
                .collect();
            Ok(Report::csv(&["level", "mass_squared", "degeneracy"], out, ok))
        }
        Command::Noghost { d, a, max_level } => {
            let d = d.unwrap_or(cfg.d);
            let a = parse_a(cfg, a)?;
            let rows = noghost_report(d, &a, *max_level, exec)?;
            let ok = rows.iter().all(|r| r.matches);
            Ok(Report::json(json!({ "d": d, "a": a.to_string(), "rows": to_value(&rows), "all_match": ok }), ok))
        }
        Command::LocalityScan { model, dcm, levels, separations, h } => {
            let cfg = resolve(cfg, model)?;
            let levels = levels
                .iter()
                .map(|s| {
                    let r = parse_q(s).ok_or_else(|| Failure::Usage(format!("invalid mass level '{s}'")))?;
                    level_for_mass(&r, &cfg.a).ok_or_else(|| Failure::Usage(format!("r = {s} is not 2ℓ − 2a for a level ℓ")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let top = levels.iter().copied().max().unwrap_or(0);
            let space = InternalSpace::new(cfg.d, cfg.a.clone(), top, exec);
            let mut scan = LocalityScan::new(dcm.unwrap_or(cfg.d_cm));
            scan.td.h = *h;
            if let Some(s) = separations {
                scan.separations = s.clone();
            }
            let rows = scan.run(&space, &levels, exec)?;
            let ok = rows
                .iter()
                .filter(|r| r.kind == "spacelike")
                .all(|r| r.commutator.abs() <= LOCALITY_RATIO * r.control_magnitude);
            let out = rows
                .iter()
                .map(|r| vec![f(r.r), r.kind.to_string(), f(r.dt), f(r.dx), f(r.commutator), f(r.control_magnitude)])
                .collect();
            Ok(Report::csv(&["r", "kind", "dt", "dx", "commutator", "control_magnitude"], out, ok))
        }
        Command::PauliJordan { r, dcm, times, h } => {
            let mut ev = PauliJordanEvaluator::new(*r, dcm.unwrap_or(cfg.d_cm));
            ev.td.h = *h;
            let rows = ev.field(times, exec)?;
            let out = rows.iter().map(|s| vec![f(s.t), f(s.x), f(s.value)]).collect();
            Ok(Report::csv(&["t", "x", "value"], out, true))
        }
        Command::FieldCcr { model, particles } => {
            let cfg = resolve(cfg, model)?;
            let space = InternalSpace::new(cfg.d, cfg.a.clone(), cfg.level_cutoff, exec);
            let ctx = FieldContext::new(space, cfg.d_cm, ShellControls::default())?;
            let (tests, pairs) = standard_ccr_family(&ctx.space)?;
            let report = field_ccr(&ctx, &tests, &pairs, particles.unwrap_or(cfg.particle_cutoff), &TimeDomain::default(), exec)?;
            let ok = report.max_relative_mismatch <= FIELD_CCR_TOLERANCE;
            Ok(Report::json(to_value(&report), ok))
        }
        Command::ObservableCheck { model, spec } => {
            let text = std::fs::read_to_string(spec).map_err(|e| Failure::Usage(format!("{}: {e}", spec.display())))?;
            let spec: ObservableSpec = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("spec: {e}")))?;
            let mut cfg = resolve(cfg, model)?;
            let top = spec.internal.iter().map(|t| t.modes.iter().map(|m| m[0] as usize).sum::<usize>()).max().unwrap_or(0);
            cfg.level_cutoff = cfg.level_cutoff.max(top);
            let space = InternalSpace::new(cfg.d, cfg.a.clone(), cfg.level_cutoff, exec);
            let mut pairs = Vec::new();
            for term in &spec.internal {
                let coeff = parse_q(&term.coefficient).ok_or_else(|| Failure::Usage(format!("bad coefficient '{}'", term.coefficient)))?;
                if term.modes.iter().any(|m| m[0] == 0 || m[1] as usize >= cfg.d) {
                    return Err(Failure::Usage("modes need n >= 1 and mu < d".into()));
                }
                let state = FockBasisState::from_modes(term.modes.iter().map(|m| ModeIndex::new(m[0], m[1])).collect());
                let idx = space.basis.index_of(&state).ok_or_else(|| Failure::Usage("mode outside the basis".into()))?;
                pairs.push((idx, coeff));
            }
            let bump = SpacetimeBump::new(spec.center, spec.radius)?;
            let ctx = FieldContext::new(space, bump.dim(), ShellControls::default())?;
            let sf = SmearingFunction::new(bump, SparseVec::from_pairs(pairs));
            let report = ctx.observable_check(&sf, spec.tolerance.unwrap_or(1e-9), exec)?;
            let ok = spec.expect.is_none_or(|e| e == report.observable);
            Ok(Report::json(to_value(&report), ok))
        }
        Command::WorldsheetDemo { transverse, modes, p_plus, amplitude, samples } => {
            worldsheet_demo(*transverse, *modes, *p_plus, *amplitude, *samples)
        }
        Command::StringCone { modes, dcm, colors, h, t_final, radius, courant, threshold } => {
            let config = ConeConfig {
                d_cm: dcm.unwrap_or(cfg.d_cm),
                modes: *modes,
                colors: *colors,
                h: *h,
                courant: *courant,
                radius: *radius,
                t_final: *t_final,
                ..ConeConfig::default()
            };
            let dims = config.metric()?.spatial_dims();
            let run = solve(&config, &InitialData::bump(dims, *radius), exec)?;
            let samples = run.samples(*threshold);
            let e0 = run.energy.first().map_or(0.0, |e| e.1);
            let scale = if run.energy_scale > 0.0 { run.energy_scale } else { 1.0 };
            let out = samples
                .iter()
                .map(|s| {
                    let e = run
                        .energy
                        .iter()
                        .min_by(|a, b| (a.0 - s.t).abs().total_cmp(&(b.0 - s.t).abs()))
                        .map_or(0.0, |e| e.1);
                    vec![
                        f(s.t),
                        f(s.support_radius_string),
                        f(s.support_radius_cm),
                        f(s.leakage_string),
                        f(s.leakage_cm),
                        f(e),
                        f((e - e0) / scale),
                    ]
                })
                .collect();
            let leak = samples.iter().map(|s| s.leakage_string).fold(0.0, f64::max);
            let drift = run.energy_drift();
            let ok = leak < CONE_LEAKAGE && drift < ENERGY_DRIFT;
            let header = ["t", "support_radius_string", "support_radius_cm", "leakage_string", "leakage_cm", "energy", "energy_drift"];
            Ok(Report::csv(&header, out, ok).with_summary(json!({
                "stencil": to_value(&run.stencil.describe()),
                "steps": run.energy.len(),
                "max_leakage_string": leak,
                "energy_drift": drift,
                "energy_scale": run.energy_scale,
            })))
        }
    }
}

#[derive(Debug, Deserialize)]
struct InternalTerm {
    coefficient: String,
    modes: Vec<[u32; 2]>,
}

#[derive(Debug, Deserialize)]
struct ObservableSpec {
    center: Vec<f64>,
    radius: Vec<f64>,
    internal: Vec<InternalTerm>,
    tolerance: Option<f64>,
    expect: Option<bool>,
}

fn worldsheet_demo(transverse: usize, modes: usize, p_plus: f64, amp: f64, samples: usize) -> Result<Report, Failure> {
    if samples < 2 {
        return Err(Failure::Usage("need at least 2 samples per axis".into()));
    }
    let xn: Vec<Vec<f64>> =
        (1..=modes).map(|n| (0..transverse).map(|k| amp * ((n + 2 * k) as f64).cos() / n as f64).collect()).collect();
    let pn: Vec<Vec<f64>> = (1..=modes).map(|n| (0..transverse).map(|k| amp * ((n * (k + 1)) as f64).sin()).collect()).collect();
    let x: Vec<f64> = (0..transverse).map(|k| 0.1 * (k + 1) as f64).collect();
    let p: Vec<f64> = (0..transverse).map(|k| 0.2 * (k + 1) as f64).collect();
    let lc = LightConeData::new(0.0, p_plus, x, p, xn, pn)?;
    let ws = lc.to_worldsheet();
    let d = ws.dim();
    let pi = std::f64::consts::PI;
    let mut rows = Vec::new();
    let mut wave = 0.0f64;
    let mut neumann = 0.0f64;
    for i in 0..samples {
        let tau = 2.0 * pi * i as f64 / samples as f64;
        for j in 0..samples {
            let sigma = pi * j as f64 / (samples - 1) as f64;
            let pt = ws.evaluate(tau, sigma)?;
            let res = ws.wave_residual(tau, sigma).iter().map(|v| v * v).sum::<f64>().sqrt();
            wave = wave.max(res);
            if j == 0 || j + 1 == samples {
                neumann = neumann.max(pt.dsigma.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            }
            let mut row = vec![f(tau), f(sigma)];
            row.extend(pt.x.iter().map(|v| f(*v)));
            row.push(f(res));
            rows.push(row);
        }
    }
    let top = 2 * modes as i64 + 1;
    let constraint = (-top..=top).map(|n| ws.constraint_fourier(n).norm()).fold(0.0f64, f64::max);
    let energy_drift = (1..=modes)
        .map(|n| {
            let e0 = lc.mode_energy(n);
            [0.5, 1.0, 3.7].iter().map(|s| (lc.flow(*s).mode_energy(n) - e0).abs()).fold(0.0f64, f64::max)
        })
        .fold(0.0f64, f64::max);
    let ok = wave <= WORLDSHEET_TOLERANCE && neumann <= WORLDSHEET_TOLERANCE && constraint <= WORLDSHEET_TOLERANCE && energy_drift <= WORLDSHEET_TOLERANCE;
    let mut header: Vec<String> = vec!["tau".into(), "sigma".into()];
    header.extend((0..d).map(|mu| format!("X{mu}")));
    header.push("wave_residual".into());
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    Ok(Report::csv(&header, rows, ok).with_summary(json!({
        "d": d,
        "p_minus": lc.p_minus(),
        "max_wave_residual": wave,
        "max_neumann_residual": neumann,
        "max_constraint_component": constraint,
        "max_flow_energy_drift": energy_drift,
    })))
}
