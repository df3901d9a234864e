//! Network descriptions: modes, baths, drives, couplings and engineered jumps.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Lab,
    Rotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleHint {
    Signal,
    Idler,
    Auxiliary,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub label: String,
    /// Lab-frame resonance, or detuning when the network is in the rotating frame.
    pub omega: f64,
    pub kappa_port: f64,
    pub kappa_int: f64,
    pub n_thermal_port: f64,
    pub n_thermal_int: f64,
    pub role_hint: RoleHint,
}

impl Mode {
    pub fn new(label: impl Into<String>, omega: f64, kappa_port: f64) -> Self {
        Self {
            label: label.into(),
            omega,
            kappa_port,
            kappa_int: 0.0,
            n_thermal_port: 0.0,
            n_thermal_int: 0.0,
            role_hint: RoleHint::None,
        }
    }

    pub fn with_internal(mut self, kappa_int: f64) -> Self {
        self.kappa_int = kappa_int;
        self
    }

    pub fn with_thermal(mut self, n_port: f64, n_int: f64) -> Self {
        self.n_thermal_port = n_port;
        self.n_thermal_int = n_int;
        self
    }

    pub fn with_role(mut self, role: RoleHint) -> Self {
        self.role_hint = role;
        self
    }

    pub fn kappa_total(&self) -> f64 {
        self.kappa_port + self.kappa_int
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingKind {
    #[serde(rename = "hopping")]
    Hopping,
    #[serde(rename = "squeezing")]
    Squeezing,
    #[serde(rename = "qnd_XX")]
    QndXX,
    #[serde(rename = "qnd_PP")]
    QndPP,
}

/// Time-independent coupling between an ordered pair `(a, b)`.
///
/// hopping: `g a b† + h.c.`; squeezing: `g a† b† + h.c.`;
/// `qnd_XX`: `Re(g) X_a X_b`; `qnd_PP`: `Re(g) P_a P_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticCoupling {
    pub kind: CouplingKind,
    pub modes: [String; 2],
    pub amplitude: C64,
}

impl StaticCoupling {
    pub fn new(kind: CouplingKind, a: &str, b: &str, amplitude: C64) -> Self {
        Self {
            kind,
            modes: [a.to_string(), b.to_string()],
            amplitude,
        }
    }
}

/// Modulation `M(t) = 2λ cos(ω_d t + φ)` of the bilinear coupling `(a + a†)(b + b†)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricDrive {
    pub modes: [String; 2],
    pub lambda: f64,
    pub omega_d: f64,
    pub phi: f64,
}

impl ParametricDrive {
    pub fn new(a: &str, b: &str, lambda: f64, omega_d: f64, phi: f64) -> Self {
        Self {
            modes: [a.to_string(), b.to_string()],
            lambda,
            omega_d,
            phi,
        }
    }
}

/// Lindblad channel `rate·L[ẑ]` with `ẑ = Σ (u_i a_i + v_i a_i†)`.
///
/// A nonzero `n_thermal` adds the reverse process `rate·n·L[ẑ†]` and scales the forward one by `n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSpec {
    pub coefficients: BTreeMap<String, (C64, C64)>,
    pub rate: f64,
    pub n_thermal: f64,
}

impl JumpSpec {
    pub fn new(rate: f64) -> Self {
        Self {
            coefficients: BTreeMap::new(),
            rate,
            n_thermal: 0.0,
        }
    }

    pub fn with(mut self, label: &str, u: C64, v: C64) -> Self {
        let e = self
            .coefficients
            .entry(label.to_string())
            .or_insert((C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        e.0 += u;
        e.1 += v;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients
            .values()
            .all(|(u, v)| u.norm() == 0.0 && v.norm() == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkSpec {
    pub modes: Vec<Mode>,
    pub static_couplings: Vec<StaticCoupling>,
    pub drives: Vec<ParametricDrive>,
    pub jumps: Vec<JumpSpec>,
    pub frame: Frame,
}

impl NetworkSpec {
    pub fn new(frame: Frame) -> Self {
        Self {
            frame,
            ..Default::default()
        }
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.label == label)
    }

    pub fn require_mode(&self, label: &str) -> Result<usize> {
        self.mode_index(label)
            .ok_or_else(|| Error::UnresolvedLabel(label.to_string()))
    }

    pub fn labels(&self) -> Vec<String> {
        self.modes.iter().map(|m| m.label.clone()).collect()
    }

    /// Structural checks shared by the parser and programmatic construction.
    pub fn check(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for m in &self.modes {
            if !seen.insert(m.label.as_str()) {
                return Err(Error::DuplicateLabel(m.label.clone()));
            }
            for (what, value) in [
                ("kappa_port", m.kappa_port),
                ("kappa_int", m.kappa_int),
                ("n_thermal_port", m.n_thermal_port),
                ("n_thermal_int", m.n_thermal_int),
            ] {
                if value < 0.0 {
                    return Err(Error::NegativeRate {
                        what: format!("{what} of mode '{}'", m.label),
                        value,
                    });
                }
            }
        }
        for c in &self.static_couplings {
            for l in &c.modes {
                self.require_mode(l)?;
            }
        }
        for d in &self.drives {
            for l in &d.modes {
                self.require_mode(l)?;
            }
            if d.lambda < 0.0 {
                return Err(Error::NegativeRate {
                    what: "drive lambda".into(),
                    value: d.lambda,
                });
            }
        }
        for j in &self.jumps {
            for l in j.coefficients.keys() {
                self.require_mode(l)?;
            }
            if j.rate < 0.0 {
                return Err(Error::NegativeRate {
                    what: "jump rate".into(),
                    value: j.rate,
                });
            }
            if j.n_thermal < 0.0 {
                return Err(Error::NegativeRate {
                    what: "jump n_thermal".into(),
                    value: j.n_thermal,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let raw = RawNetwork::from_spec(self);
        serde_json::to_string_pretty(&raw).expect("network serialization cannot fail")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

pub fn validate(spec: &NetworkSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if let Err(e) = spec.check() {
        out.push(Diagnostic::error(e.to_string()));
    }
    if spec.modes.is_empty() {
        out.push(Diagnostic::error("network declares no modes"));
    }
    for m in &spec.modes {
        let vals = [
            m.omega,
            m.kappa_port,
            m.kappa_int,
            m.n_thermal_port,
            m.n_thermal_int,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            out.push(Diagnostic::error(format!("mode '{}' has a non-finite field", m.label)));
        }
        if m.kappa_total() == 0.0 {
            out.push(Diagnostic::warning(format!("undamped mode '{}'", m.label)));
        }
    }
    for (k, c) in spec.static_couplings.iter().enumerate() {
        if !(c.amplitude.re.is_finite() && c.amplitude.im.is_finite()) {
            out.push(Diagnostic::error(format!("static coupling {k} has a non-finite amplitude")));
        }
        if matches!(c.kind, CouplingKind::QndXX | CouplingKind::QndPP) && c.amplitude.im != 0.0 {
            out.push(Diagnostic::warning(format!(
                "static coupling {k}: imaginary part of a QND amplitude is ignored"
            )));
        }
    }
    if spec.frame == Frame::Rotating && !spec.drives.is_empty() {
        out.push(Diagnostic::error(
            "parametric drives require frame 'lab'; express rotating-frame couplings as static_couplings",
        ));
    }
    for (k, d) in spec.drives.iter().enumerate() {
        if ![d.lambda, d.omega_d, d.phi].iter().all(|v| v.is_finite()) {
            out.push(Diagnostic::error(format!("drive {k} has a non-finite field")));
        }
    }
    for (k, j) in spec.jumps.iter().enumerate() {
        if j.is_empty() {
            out.push(Diagnostic::error(format!("empty jump operator (jump {k})")));
        }
        if !j.rate.is_finite() || !j.n_thermal.is_finite() {
            out.push(Diagnostic::error(format!("jump {k} has a non-finite rate or occupation")));
        }
        let finite = j
            .coefficients
            .values()
            .all(|(u, v)| u.re.is_finite() && u.im.is_finite() && v.re.is_finite() && v.im.is_finite());
        if !finite {
            out.push(Diagnostic::error(format!("jump {k} has a non-finite coefficient")));
        }
    }
    out
}

/// Parses a network document and applies structural checks.
pub fn parse_network(document: &str) -> Result<NetworkSpec> {
    let raw: RawNetwork = serde_json::from_str(document).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => Error::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
            Category::Data => Error::Invalid(e.to_string()),
        }
    })?;
    let spec = raw.into_spec()?;
    spec.check()?;
    Ok(spec)
}

type Pair = [f64; 2];

fn c_of(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn pair_of(c: C64) -> Pair {
    [c.re, c.im]
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_none_role(r: &RoleHint) -> bool {
    *r == RoleHint::None
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    label: String,
    omega: f64,
    kappa_port: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    kappa_int: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    n_thermal_port: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    n_thermal_int: f64,
    #[serde(default, skip_serializing_if = "is_none_role")]
    role_hint: RoleHint,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    kind: CouplingKind,
    modes: [String; 2],
    amplitude: Pair,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    modes: [String; 2],
    lambda: f64,
    omega_d: f64,
    phi: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoeff {
    #[serde(default)]
    u: Pair,
    #[serde(default)]
    v: Pair,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJump {
    rate: f64,
    coefficients: BTreeMap<String, RawCoeff>,
    #[serde(default, skip_serializing_if = "is_zero")]
    n_thermal: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    #[serde(default = "default_unit")]
    unit: String,
    #[serde(default)]
    frame: Frame,
    modes: Vec<RawMode>,
    #[serde(default)]
    static_couplings: Vec<RawCoupling>,
    #[serde(default)]
    drives: Vec<RawDrive>,
    #[serde(default)]
    jumps: Vec<RawJump>,
}

fn default_unit() -> String {
    "rad/s".to_string()
}

impl RawNetwork {
    fn into_spec(self) -> Result<NetworkSpec> {
        let scale = match self.unit.as_str() {
            "rad/s" => 1.0,
            "Hz" => TAU,
            other => return Err(Error::Invalid(format!("unknown unit '{other}'"))),
        };
        let modes = self
            .modes
            .into_iter()
            .map(|m| Mode {
                label: m.label,
                omega: m.omega * scale,
                kappa_port: m.kappa_port * scale,
                kappa_int: m.kappa_int * scale,
                n_thermal_port: m.n_thermal_port,
                n_thermal_int: m.n_thermal_int,
                role_hint: m.role_hint,
            })
            .collect();
        let static_couplings = self
            .static_couplings
            .into_iter()
            .map(|c| StaticCoupling {
                kind: c.kind,
                modes: c.modes,
                amplitude: c_of(c.amplitude) * scale,
            })
            .collect();
        let drives = self
            .drives
            .into_iter()
            .map(|d| ParametricDrive {
                modes: d.modes,
                lambda: d.lambda * scale,
                omega_d: d.omega_d * scale,
                phi: d.phi,
            })
            .collect();
        let jumps = self
            .jumps
            .into_iter()
            .map(|j| JumpSpec {
                rate: j.rate * scale,
                n_thermal: j.n_thermal,
                coefficients: j
                    .coefficients
                    .into_iter()
                    .map(|(k, c)| (k, (c_of(c.u), c_of(c.v))))
                    .collect(),
            })
            .collect();
        Ok(NetworkSpec {
            modes,
            static_couplings,
            drives,
            jumps,
            frame: self.frame,
        })
    }

    fn from_spec(spec: &NetworkSpec) -> Self {
        Self {
            unit: default_unit(),
            frame: spec.frame,
            modes: spec
                .modes
                .iter()
                .map(|m| RawMode {
                    label: m.label.clone(),
                    omega: m.omega,
                    kappa_port: m.kappa_port,
                    kappa_int: m.kappa_int,
                    n_thermal_port: m.n_thermal_port,
                    n_thermal_int: m.n_thermal_int,
                    role_hint: m.role_hint,
                })
                .collect(),
            static_couplings: spec
                .static_couplings
                .iter()
                .map(|c| RawCoupling {
                    kind: c.kind,
                    modes: c.modes.clone(),
                    amplitude: pair_of(c.amplitude),
                })
                .collect(),
            drives: spec
                .drives
                .iter()
                .map(|d| RawDrive {
                    modes: d.modes.clone(),
                    lambda: d.lambda,
                    omega_d: d.omega_d,
                    phi: d.phi,
                })
                .collect(),
            jumps: spec
                .jumps
                .iter()
                .map(|j| RawJump {
                    rate: j.rate,
                    n_thermal: j.n_thermal,
                    coefficients: j
                        .coefficients
                        .iter()
                        .map(|(k, (u, v))| {
                            (
                                k.clone(),
                                RawCoeff {
                                    u: pair_of(*u),
                                    v: pair_of(*v),
                                },
                            )
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let spec = parse_network(r#"{"modes":[{"label":"a","omega":1e9,"kappa_port":1e6}]}"#).unwrap();
        assert_eq!(spec.modes.len(), 1);
        assert!(spec.static_couplings.is_empty());
        assert_eq!(spec.frame, Frame::Lab);
        assert_eq!(spec.modes[0].kappa_int, 0.0);
        assert_eq!(spec.modes[0].n_thermal_port, 0.0);
    }

    #[test]
    fn unresolved_label() {
        let doc = r#"{"modes":[{"label":"a","omega":1,"kappa_port":1}],
            "static_couplings":[{"kind":"hopping","modes":["a","q"],"amplitude":[1,0]}]}"#;
        let err = parse_network(doc).unwrap_err();
        assert_eq!(err, Error::UnresolvedLabel("q".into()));
        assert!(err.to_string().contains("unresolved mode label"));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_network("{\n  \"modes\": [,\n}").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let doc = r#"{"modes":[{"label":"a","omega":1,"kappa_port":1,"q":3}]}"#;
        let err = parse_network(doc).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn duplicate_and_negative() {
        let doc = r#"{"modes":[{"label":"a","omega":1,"kappa_port":1},{"label":"a","omega":1,"kappa_port":1}]}"#;
        assert_eq!(parse_network(doc).unwrap_err(), Error::DuplicateLabel("a".into()));
        let doc = r#"{"modes":[{"label":"a","omega":1,"kappa_port":-1}]}"#;
        assert!(matches!(parse_network(doc).unwrap_err(), Error::NegativeRate { .. }));
    }

    #[test]
    fn hz_is_scaled() {
        let doc = r#"{"unit":"Hz","modes":[{"label":"a","omega":2,"kappa_port":1,"n_thermal_port":0.5}]}"#;
        let spec = parse_network(doc).unwrap();
        assert!((spec.modes[0].omega - 2.0 * TAU).abs() < 1e-15);
        assert!((spec.modes[0].kappa_port - TAU).abs() < 1e-15);
        assert_eq!(spec.modes[0].n_thermal_port, 0.5);
    }

    #[test]
    fn validation_diagnostics() {
        let mut spec = NetworkSpec::new(Frame::Rotating);
        spec.modes.push(Mode::new("a", 0.0, 1.0));
        spec.modes.push(Mode::new("b", 0.0, 1.0));
        spec.static_couplings
            .push(StaticCoupling::new(CouplingKind::Hopping, "a", "b", C64::new(0.5, 0.0)));
        assert!(validate(&spec).is_empty());

        spec.modes.push(Mode::new("c", 0.0, 0.0));
        let d = validate(&spec);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert!(d[0].message.contains("undamped mode"));

        spec.jumps.push(JumpSpec::new(1.0).with("a", C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        let d = validate(&spec);
        assert!(d
            .iter()
            .any(|x| x.severity == Severity::Error && x.message.contains("empty jump operator")));
    }

    #[test]
    fn roundtrip_preserves_spec() {
        let mut spec = NetworkSpec::new(Frame::Lab);
        spec.modes.push(Mode::new("a", 5.0, 0.1).with_thermal(0.25, 0.0).with_role(RoleHint::Signal));
        spec.modes.push(Mode::new("b", 3.0, 0.2).with_internal(0.01));
        spec.drives.push(ParametricDrive::new("a", "b", 0.01, 2.0, 0.3));
        spec.jumps.push(
            JumpSpec::new(0.5)
                .with("a", C64::new(1.0, 0.0), C64::new(0.0, 0.0))
                .with("b", C64::new(0.0, 0.0), C64::new(0.0, -1.0)),
        );
        let back = parse_network(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }
}
