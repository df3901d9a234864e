use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use paramnet::netmodel::{parse_network, NetworkSpec};

use crate::{Cli, CliError, Command, Format};

/// Sweep alias that rescales every coupling of the auxiliary mode.
pub const COOPERATIVITY: &str = "cooperativity";

#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: PathBuf,
    pub input_bytes: Vec<u8>,
    pub document: Value,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub points: usize,
    pub sweep: Option<Sweep>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub mode: Option<String>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
}

pub const DEFAULT_POINTS: usize = 2001;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self, CliError> {
        let input_bytes = std::fs::read(&cli.input).map_err(|source| CliError::Read {
            path: cli.input.clone(),
            source,
        })?;
        let text = String::from_utf8(input_bytes.clone())
            .map_err(|_| paramnet::Error::Invalid("input is not UTF-8".into()))?;
        parse_network(&text)?;
        let document: Value = serde_json::from_str(&text).map_err(|e| paramnet::Error::Invalid(e.to_string()))?;

        let points = cli.points.unwrap_or(DEFAULT_POINTS);
        if points < 2 {
            return Err(usage(format!("--points must be at least 2, got {points}")));
        }
        if let (Some(lo), Some(hi)) = (cli.omega_min, cli.omega_max) {
            if !(lo < hi) {
                return Err(usage(format!("--omega-min {lo} must be below --omega-max {hi}")));
            }
        }
        for (name, v) in [("--omega-min", cli.omega_min), ("--omega-max", cli.omega_max), ("--t-end", cli.t_end), ("--dt", cli.dt)] {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(usage(format!("{name} must be finite")));
            }
        }
        let sweep = match cli.sweep {
            None => None,
            Some(parts) => {
                let [path, list] = <[String; 2]>::try_from(parts).map_err(|_| usage("--sweep takes a path and a value list"))?;
                let values = list
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("bad sweep value '{s}'"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(usage("sweep values must be finite numbers"));
                }
                apply_sweep(&document, &path, values[0])?;
                Some(Sweep { path, values })
            }
        };
        if cli.command == Command::Gbw && sweep.is_none() {
            return Err(usage("gbw needs --sweep"));
        }
        Ok(Self {
            command: cli.command,
            input_path: cli.input,
            input_bytes,
            document,
            omega_min: cli.omega_min,
            omega_max: cli.omega_max,
            points,
            sweep,
            format: cli.format,
            out: cli.out,
            from: cli.from,
            to: cli.to,
            mode: cli.mode,
            t_end: cli.t_end,
            dt: cli.dt,
        })
    }

    pub fn base_spec(&self) -> Result<NetworkSpec, CliError> {
        Ok(parse_network(&self.document.to_string())?)
    }

    pub fn spec_at(&self, value: f64) -> Result<NetworkSpec, CliError> {
        let path = &self.sweep.as_ref().expect("sweep is set").path;
        let doc = apply_sweep(&self.document, path, value)?;
        Ok(parse_network(&doc.to_string())?)
    }
}

/// Returns a copy of `doc` with the swept field set to `value`.
pub fn apply_sweep(doc: &Value, path: &str, value: f64) -> Result<Value, CliError> {
    let mut doc = doc.clone();
    if path == COOPERATIVITY {
        set_cooperativity(&mut doc, value)?;
    } else {
        *lookup(&mut doc, path)? = Value::from(value);
    }
    Ok(doc)
}

fn lookup<'a>(doc: &'a mut Value, path: &str) -> Result<&'a mut Value, CliError> {
    let mut cur = doc;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(seg),
            Value::Array(items) => match seg.parse::<usize>() {
                Ok(i) => items.get_mut(i),
                Err(_) => items.iter_mut().find(|v| v.get("label").and_then(Value::as_str) == Some(seg)),
            },
            _ => None,
        }
        .ok_or_else(|| usage(format!("sweep path '{path}' does not resolve at '{seg}'")))?;
    }
    if !cur.is_number() {
        return Err(usage(format!("sweep path '{path}' does not name a numeric field")));
    }
    Ok(cur)
}

fn num(v: &Value, key: &str) -> f64 {
    v.get(key).and_then(Value::as_f64).unwrap_or(0.0)
}

fn kappa_of(doc: &Value, label: &str) -> f64 {
    doc["modes"]
        .as_array()
        .and_then(|ms| ms.iter().find(|m| m["label"] == label))
        .map(|m| num(m, "kappa_port") + num(m, "kappa_int"))
        .unwrap_or(0.0)
}

fn role_of(doc: &Value, label: &str) -> Option<String> {
    doc["modes"]
        .as_array()?
        .iter()
        .find(|m| m["label"] == label)?
        .get("role_hint")?
        .as_str()
        .map(str::to_string)
}

/// `C = 4|g|²/(κ_c κ)` for the coupling between the auxiliary mode and its signal partner;
/// every coupling of the auxiliary mode is scaled by the same factor.
fn set_cooperativity(doc: &mut Value, c: f64) -> Result<(), CliError> {
    if c < 0.0 {
        return Err(usage("cooperativity must be non-negative"));
    }
    let aux = doc["modes"]
        .as_array()
        .and_then(|ms| ms.iter().find(|m| m["role_hint"] == "auxiliary"))
        .and_then(|m| m["label"].as_str())
        .map(str::to_string)
        .ok_or_else(|| usage("the cooperativity sweep needs a mode with role_hint \"auxiliary\""))?;
    let kappa_c = kappa_of(doc, &aux);

    // (section, index, partner, |g|)
    let mut links = Vec::new();
    for section in ["drives", "static_couplings"] {
        if let Some(items) = doc[section].as_array() {
            for (i, it) in items.iter().enumerate() {
                let Some(modes) = it["modes"].as_array() else { continue };
                let labels: Vec<&str> = modes.iter().filter_map(Value::as_str).collect();
                if labels.len() != 2 || !labels.contains(&aux.as_str()) {
                    continue;
                }
                let partner = if labels[0] == aux { labels[1] } else { labels[0] }.to_string();
                let g = if section == "drives" {
                    num(it, "lambda").abs()
                } else {
                    let a = &it["amplitude"];
                    a[0].as_f64().unwrap_or(0.0).hypot(a[1].as_f64().unwrap_or(0.0))
                };
                links.push((section, i, partner, g));
            }
        }
    }
    let reference = links
        .iter()
        .find(|l| role_of(doc, &l.2).as_deref() == Some("signal"))
        .or(links.first())
        .ok_or_else(|| usage(format!("auxiliary mode '{aux}' has no couplings to rescale")))?;
    let kappa = kappa_of(doc, &reference.2);
    let current = 4.0 * reference.3 * reference.3 / (kappa_c * kappa);
    if !(current > 0.0) || !current.is_finite() {
        return Err(usage("cannot infer the current cooperativity (zero coupling or damping)"));
    }
    let factor = (c / current).sqrt();
    for (section, i, _, _) in links.clone() {
        let item = &mut doc[section][i];
        if section == "drives" {
            item["lambda"] = Value::from(num(item, "lambda") * factor);
        } else {
            let a = &mut item["amplitude"];
            for k in 0..2 {
                a[k] = Value::from(a[k].as_f64().unwrap_or(0.0) * factor);
            }
        }
    }
    Ok(())
}
