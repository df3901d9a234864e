use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::{json, Value};

use paramnet::direction::isolation;
use paramnet::dynamics::{
    adiabatic_eliminate, build_state_space, integrate_time_domain, steady_covariance, ChannelKind, InitialState,
    StateSpaceModel, TimeDomainConfig,
};
use paramnet::frames::{compile_effective, EffectiveSystem};
use paramnet::netmodel::{Diagnostic, NetworkSpec, RoleHint};
use paramnet::noise::{added_noise, output_spectrum};
use paramnet::ops::LinearOp;
use paramnet::scattering::{
    gbw_csv, gbw_sweep, linspace, path_bandwidth, power_gain, scattering_sweep, to_db, ChannelRef, Path,
};
use paramnet::Error;

use crate::config::RunConfig;
use crate::{CliError, Command, Format};

/// Settings that were filled in from the network rather than given on the command line.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Resolved {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub from: Option<String>,
    pub to: Option<String>,
    pub mode: Option<String>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
}

struct Output {
    csv: String,
    json: Value,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn compile(spec: &NetworkSpec) -> Result<(EffectiveSystem, Vec<Diagnostic>, StateSpaceModel), CliError> {
    let (sys, diags) = compile_effective(spec)?;
    let model = build_state_space(&sys);
    Ok((sys, diags, model))
}

fn require_stable(model: &StateSpaceModel) -> Result<(), CliError> {
    let m = model.stability_margin();
    if m >= 0.0 {
        return Err(Error::Unstable { max_re: m }.into());
    }
    Ok(())
}

/// Linewidth used to scale the default grid: the signal mode, else the first damped mode.
fn reference_kappa(spec: &NetworkSpec) -> f64 {
    spec.modes
        .iter()
        .find(|m| m.role_hint == RoleHint::Signal && m.kappa_total() > 0.0)
        .or_else(|| spec.modes.iter().find(|m| m.kappa_total() > 0.0))
        .map(|m| m.kappa_total())
        .unwrap_or(1.0)
}

fn first_port(model: &StateSpaceModel) -> Result<String, CliError> {
    model
        .channels
        .iter()
        .find(|c| c.kind == ChannelKind::Port)
        .map(|c| c.label.clone())
        .ok_or_else(|| usage("network has no port channel; pass --from/--to"))
}

fn resolve(cfg: &RunConfig, spec: &NetworkSpec, model: &StateSpaceModel) -> Result<Resolved, CliError> {
    let k = reference_kappa(spec);
    let omega_min = cfg.omega_min.unwrap_or(-2.5 * k);
    let omega_max = cfg.omega_max.unwrap_or(2.5 * k);
    if !(omega_min < omega_max) {
        return Err(usage(format!("empty frequency range [{omega_min}, {omega_max}]")));
    }
    let needs_path = matches!(
        cfg.command,
        Command::Gain | Command::Noise | Command::Direction | Command::Gbw | Command::Eliminate
    );
    let (from, to) = if needs_path {
        let from = match &cfg.from {
            Some(f) => f.clone(),
            None => first_port(model)?,
        };
        (Some(from.clone()), Some(cfg.to.clone().unwrap_or(from)))
    } else if cfg.command == Command::Squeeze {
        let to = match &cfg.to {
            Some(t) => t.clone(),
            None => format!("{}:X", first_port(model)?),
        };
        (None, Some(to))
    } else {
        (None, None)
    };
    let mode = if cfg.command == Command::Eliminate {
        Some(match &cfg.mode {
            Some(m) => m.clone(),
            None => spec
                .modes
                .iter()
                .find(|m| m.role_hint == RoleHint::Auxiliary)
                .map(|m| m.label.clone())
                .ok_or_else(|| usage("no auxiliary mode in the network; pass --mode"))?,
        })
    } else {
        None
    };
    let t_end = if cfg.command == Command::RwaCompare {
        let k_min = spec
            .modes
            .iter()
            .map(|m| m.kappa_total())
            .filter(|k| *k > 0.0)
            .fold(f64::INFINITY, f64::min);
        Some(cfg.t_end.unwrap_or(if k_min.is_finite() { 20.0 / k_min } else { 20.0 }))
    } else {
        None
    };
    Ok(Resolved {
        omega_min,
        omega_max,
        points: cfg.points,
        from,
        to,
        mode,
        t_end,
        dt: cfg.dt,
    })
}

fn channel(s: &Option<String>) -> Result<ChannelRef, CliError> {
    Ok(s.as_deref().expect("resolved").parse::<ChannelRef>()?)
}

fn pair(z: C64) -> Value {
    json!([z.re, z.im])
}

fn op_json(op: &LinearOp, basis: &[String]) -> Value {
    let mut map = serde_json::Map::new();
    for i in op.support() {
        map.insert(basis[i].clone(), json!({"u": pair(op.u(i)), "v": pair(op.v(i))}));
    }
    Value::Object(map)
}

fn doubled_labels(basis: &[String]) -> Vec<String> {
    basis.iter().cloned().chain(basis.iter().map(|b| format!("{b}+"))).collect()
}

fn system_json(sys: &EffectiveSystem) -> Value {
    let h = &sys.hamiltonian;
    let rows: Vec<Value> = (0..h.nrows())
        .map(|r| Value::Array((0..h.ncols()).map(|c| pair(h[(r, c)])).collect()))
        .collect();
    let jumps: Vec<Value> = sys
        .jumps
        .iter()
        .map(|j| json!({"rate": j.rate, "n_thermal": j.n_thermal, "coefficients": op_json(&j.op, &sys.basis)}))
        .collect();
    json!({
        "basis": sys.basis,
        "hamiltonian": rows,
        "baths": sys.baths,
        "jumps": jumps,
        "kept_terms": sys.kept_terms,
        "dropped_terms": sys.dropped_terms,
        "frame_shifts": sys.frame_shifts,
    })
}

fn hamiltonian_csv(sys: &EffectiveSystem) -> String {
    let labels = doubled_labels(&sys.basis);
    let mut s = String::from("row,col,re,im\n");
    let h = &sys.hamiltonian;
    for r in 0..h.nrows() {
        for c in 0..h.ncols() {
            let _ = writeln!(s, "{},{},{:e},{:e}", labels[r], labels[c], h[(r, c)].re, h[(r, c)].im);
        }
    }
    s
}

fn run_compile(spec: &NetworkSpec) -> Result<Output, CliError> {
    let (sys, diags, model) = compile(spec)?;
    let mut json = system_json(&sys);
    json["diagnostics"] = serde_json::to_value(&diags).expect("diagnostics serialize");
    json["stability_margin"] = json!(model.stability_margin());
    Ok(Output {
        csv: hamiltonian_csv(&sys),
        json,
    })
}

fn run_scatter(spec: &NetworkSpec, grid: &[f64]) -> Result<Output, CliError> {
    let (_, _, model) = compile(spec)?;
    require_stable(&model)?;
    let res = scattering_sweep(&model, grid)?;
    let labels = res.doubled_labels();
    let mut csv = String::from("omega_rad_s");
    for part in ["abs", "re", "im"] {
        for o in &labels {
            for i in &labels {
                let _ = write!(csv, ",{part}_S_{o}_{i}");
            }
        }
    }
    csv.push('\n');
    for (w, m) in res.omega.iter().zip(&res.matrices) {
        let _ = write!(csv, "{w:e}");
        for f in [C64::norm, |z: C64| z.re, |z: C64| z.im] {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let _ = write!(csv, ",{:e}", f(m[(r, c)]));
                }
            }
        }
        csv.push('\n');
    }
    let matrices: Vec<Value> = res
        .matrices
        .iter()
        .map(|m| {
            Value::Array(
                (0..m.nrows())
                    .map(|r| Value::Array((0..m.ncols()).map(|c| pair(m[(r, c)])).collect()))
                    .collect(),
            )
        })
        .collect();
    Ok(Output {
        csv,
        json: json!({"omega": res.omega, "channels": labels, "matrices": matrices}),
    })
}

fn run_gain(spec: &NetworkSpec, r: &Resolved, grid: &[f64]) -> Result<Output, CliError> {
    let (_, _, model) = compile(spec)?;
    require_stable(&model)?;
    let (from, to) = (channel(&r.from)?, channel(&r.to)?);
    let curve = power_gain(&model, &from, &to, grid)?;
    let g0 = Path::resolve(&model, &from, &to)?.gain(&model, 0.0)?;
    let bandwidth = path_bandwidth(&model, &from, &to, grid).ok();
    let mut csv = String::from("omega_rad_s,gain,gain_db\n");
    for (w, g) in curve.omega.iter().zip(&curve.gain) {
        let _ = writeln!(csv, "{w:e},{g:e},{:e}", to_db(*g));
    }
    Ok(Output {
        csv,
        json: json!({
            "from": from.to_string(),
            "to": to.to_string(),
            "g0": g0,
            "bandwidth": bandwidth,
            "gbw": bandwidth.map(|b| g0.sqrt() * b),
            "stability_margin": model.stability_margin(),
            "omega": curve.omega,
            "gain": curve.gain,
        }),
    })
}

fn run_noise(spec: &NetworkSpec, r: &Resolved, grid: &[f64]) -> Result<Output, CliError> {
    let (_, _, model) = compile(spec)?;
    let n = added_noise(&model, &channel(&r.from)?, &channel(&r.to)?, grid)?;
    let mut csv = String::from("omega_rad_s,gain,n_add_quanta\n");
    for i in 0..n.omega.len() {
        let _ = writeln!(csv, "{:e},{:e},{:e}", n.omega[i], n.gain[i], n.n_add[i]);
    }
    Ok(Output {
        csv,
        json: serde_json::to_value(&n).expect("added noise serializes"),
    })
}

fn run_squeeze(spec: &NetworkSpec, r: &Resolved, grid: &[f64]) -> Result<Output, CliError> {
    let (_, _, model) = compile(spec)?;
    let out = channel(&r.to)?;
    let s = output_spectrum(&model, &out, grid)?;
    let min = s.values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Output {
        csv: s.to_csv("variance_quanta"),
        json: json!({
            "channel": out.to_string(),
            "min_variance": min,
            "min_variance_db": to_db(min / 0.5),
            "omega": s.omega,
            "variance": s.values,
        }),
    })
}

fn run_stability(spec: &NetworkSpec) -> Result<Output, CliError> {
    let (_, _, model) = compile(spec)?;
    let m = model.stability_margin();
    if !m.is_finite() {
        return Err(Error::Numeric("eigenvalue iteration did not converge".into()).into());
    }
    Ok(Output {
        csv: format!("stability_margin,stable\n{m:e},{}\n", m < 0.0),
        json: json!({"stability_margin": m, "stable": m < 0.0}),
    })
}

fn run_direction(spec: &NetworkSpec, r: &Resolved, grid: &[f64]) -> Result<Output, CliError> {
    let (_, _, model) = compile(spec)?;
    let iso = isolation(&model, &channel(&r.from)?, &channel(&r.to)?, grid)?;
    Ok(Output {
        csv: iso.to_csv(),
        json: serde_json::to_value(&iso).expect("isolation serializes"),
    })
}

fn run_rwa_compare(spec: &NetworkSpec, r: &Resolved) -> Result<(Output, f64), CliError> {
    let (sys, diags, model) = compile(spec)?;
    let v_rwa = steady_covariance(&model)?;
    let t_end = r.t_end.expect("resolved");
    let init = InitialState {
        mean: vec![C64::new(0.0, 0.0); spec.modes.len()],
        covariance: v_rwa.clone(),
    };
    let mut cfg = TimeDomainConfig::new(t_end, r.dt.unwrap_or(t_end / 1000.0), true);
    let traj = match integrate_time_domain(spec, &cfg, &init) {
        Err(Error::StepSize { limit, .. }) if r.dt.is_none() => {
            cfg.dt = limit;
            integrate_time_domain(spec, &cfg, &init)?
        }
        other => other?,
    };
    let v_full = traj.mean_covariance_after(0.5 * t_end);
    let deviation = (&v_full - &v_rwa).amax();
    let scale = v_rwa.amax();
    let matrix = |m: &nalgebra::DMatrix<f64>| -> Value {
        Value::Array((0..m.nrows()).map(|i| json!(m.row(i).iter().collect::<Vec<_>>())).collect())
    };
    let csv = format!(
        "t_end,dt,max_covariance_deviation,relative_deviation,kept_terms,dropped_terms\n{:e},{:e},{:e},{:e},{},{}\n",
        t_end,
        cfg.dt,
        deviation,
        deviation / scale,
        sys.kept_terms.len(),
        sys.dropped_terms.len()
    );
    let json = json!({
        "t_end": t_end,
        "dt": cfg.dt,
        "max_covariance_deviation": deviation,
        "relative_deviation": deviation / scale,
        "covariance_rwa": matrix(&v_rwa),
        "covariance_full": matrix(&v_full),
        "kept_terms": sys.kept_terms,
        "dropped_terms": sys.dropped_terms,
        "diagnostics": diags,
    });
    Ok((Output { csv, json }, cfg.dt))
}

fn run_eliminate(spec: &NetworkSpec, r: &Resolved, grid: &[f64]) -> Result<Output, CliError> {
    let (sys, _, model) = compile(spec)?;
    let label = r.mode.as_deref().expect("resolved");
    let el = adiabatic_eliminate(&sys, label)?;
    let reduced = build_state_space(&el.reduced);
    require_stable(&model)?;
    require_stable(&reduced)?;
    let (from, to) = (channel(&r.from)?, channel(&r.to)?);
    let full = power_gain(&model, &from, &to, grid)?;
    let red = power_gain(&reduced, &from, &to, grid)?;
    let mut csv = String::from("omega_rad_s,gain_full_db,gain_reduced_db\n");
    for i in 0..grid.len() {
        let _ = writeln!(csv, "{:e},{:e},{:e}", grid[i], to_db(full.gain[i]), to_db(red.gain[i]));
    }
    Ok(Output {
        csv,
        json: json!({
            "mode": label,
            "lambda_eff": el.lambda_eff,
            "gamma": el.gamma,
            "coupling": el.coupling,
            "operator": op_json(&el.operator, &el.reduced.basis),
            "warnings": el.warnings,
            "reduced": system_json(&el.reduced),
            "omega": grid,
            "gain_full": full.gain,
            "gain_reduced": red.gain,
        }),
    })
}

/// Runs one network; the second value is the time step picked by `rwa-compare`.
fn run_one(cfg: &RunConfig, spec: &NetworkSpec, r: &Resolved, grid: &[f64]) -> Result<(Output, Option<f64>), CliError> {
    if cfg.command == Command::RwaCompare {
        return run_rwa_compare(spec, r).map(|(o, dt)| (o, Some(dt)));
    }
    let out = match cfg.command {
        Command::Compile => run_compile(spec),
        Command::Scatter => run_scatter(spec, grid),
        Command::Gain => run_gain(spec, r, grid),
        Command::Noise => run_noise(spec, r, grid),
        Command::Squeeze => run_squeeze(spec, r, grid),
        Command::Stability => run_stability(spec),
        Command::Direction => run_direction(spec, r, grid),
        Command::Eliminate => run_eliminate(spec, r, grid),
        Command::RwaCompare | Command::Gbw => unreachable!("handled separately"),
    }?;
    Ok((out, None))
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json renders");
    s.push('\n');
    s
}

/// Runs the configured command and returns the rendered output with the resolved settings.
pub fn execute(cfg: &RunConfig) -> Result<(String, Resolved), CliError> {
    let base = cfg.base_spec()?;
    let (_, _, base_model) = compile(&base)?;
    let mut resolved = resolve(cfg, &base, &base_model)?;
    let grid = linspace(resolved.omega_min, resolved.omega_max, resolved.points);

    if cfg.command == Command::Gbw {
        let sweep = cfg.sweep.as_ref().expect("checked when resolving");
        let (from, to) = (channel(&resolved.from)?, channel(&resolved.to)?);
        let rows = gbw_sweep(
            &sweep.values,
            |v| {
                let spec = cfg.spec_at(v).map_err(|e| match e {
                    CliError::Model(m) => m,
                    other => Error::Invalid(other.to_string()),
                })?;
                Ok(build_state_space(&compile_effective(&spec)?.0))
            },
            &from,
            &to,
            &grid,
        );
        let body = match cfg.format {
            Format::Csv => gbw_csv(&rows),
            Format::Json => render_json(&json!({"sweep": sweep.path, "from": from.to_string(), "to": to.to_string(), "rows": rows})),
        };
        return Ok((body, resolved));
    }

    let body = match &cfg.sweep {
        None => {
            let (out, dt) = run_one(cfg, &base, &resolved, &grid)?;
            resolved.dt = resolved.dt.or(dt);
            match cfg.format {
                Format::Csv => out.csv,
                Format::Json => render_json(&out.json),
            }
        }
        Some(sweep) => {
            let outs = sweep
                .values
                .par_iter()
                .map(|&v| run_one(cfg, &cfg.spec_at(v)?, &resolved, &grid))
                .collect::<Result<Vec<_>, _>>()?;
            resolved.dt = resolved.dt.or(outs.first().and_then(|o| o.1));
            let outs: Vec<Output> = outs.into_iter().map(|o| o.0).collect();
            match cfg.format {
                Format::Csv => {
                    let mut s = String::new();
                    for (k, (v, out)) in sweep.values.iter().zip(&outs).enumerate() {
                        let mut lines = out.csv.lines();
                        let header = lines.next().unwrap_or_default();
                        if k == 0 {
                            let _ = writeln!(s, "{},{header}", sweep.path);
                        }
                        for line in lines {
                            let _ = writeln!(s, "{v:e},{line}");
                        }
                    }
                    s
                }
                Format::Json => {
                    let points: Vec<Value> = sweep
                        .values
                        .iter()
                        .zip(outs)
                        .map(|(v, out)| json!({"value": v, "result": out.json}))
                        .collect();
                    render_json(&json!({"sweep": sweep.path, "points": points}))
                }
            }
        }
    };
    Ok((body, resolved))
}
