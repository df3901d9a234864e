//! Interaction-frame expansion of driven networks and rotating-wave reduction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::{
    has_errors, validate, CouplingKind, Diagnostic, Frame, JumpSpec, NetworkSpec, ParametricDrive, RoleHint,
    Severity,
};
use crate::ops::{check_structure, to_quadrature_real, LinearOp, QuadraticHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Hopping,
    Squeezing,
}

/// One interaction-frame term.
///
/// Hopping: `g a b† e^{-iδt} + h.c.`; squeezing: `g a† b† e^{+iδt} + h.c.`,
/// with `g = amplitude` and `δ = detuning`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotatingTerm {
    pub kind: TermKind,
    pub modes: [String; 2],
    #[serde(serialize_with = "ser_complex")]
    pub amplitude: C64,
    pub detuning: f64,
    pub source: String,
}

fn ser_complex<S: serde::Serializer>(c: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

impl RotatingTerm {
    fn describe(&self) -> String {
        format!(
            "{} {}-{} ({}, detuning {:.6e})",
            match self.kind {
                TermKind::Hopping => "hopping",
                TermKind::Squeezing => "squeezing",
            },
            self.modes[0],
            self.modes[1],
            self.source,
            self.detuning
        )
    }

    /// Amplitude of the term at time `t` in the interaction frame.
    pub fn amplitude_at(&self, t: f64) -> C64 {
        let sign = match self.kind {
            TermKind::Hopping => -1.0,
            TermKind::Squeezing => 1.0,
        };
        self.amplitude * C64::from_polar(1.0, sign * self.detuning * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeBath {
    pub kappa_port: f64,
    pub kappa_int: f64,
    pub n_port: f64,
    pub n_int: f64,
    pub role: RoleHint,
}

impl ModeBath {
    pub fn port(kappa: f64) -> Self {
        Self {
            kappa_port: kappa,
            kappa_int: 0.0,
            n_port: 0.0,
            n_int: 0.0,
            role: RoleHint::None,
        }
    }

    pub fn kappa_total(&self) -> f64 {
        self.kappa_port + self.kappa_int
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedJump {
    pub op: LinearOp,
    pub rate: f64,
    pub n_thermal: f64,
}

/// Time-independent quadratic system in the doubled basis.
#[derive(Debug, Clone)]
pub struct EffectiveSystem {
    pub basis: Vec<String>,
    /// `Ĥ = ½ v† H v`.
    pub hamiltonian: DMatrix<C64>,
    pub baths: Vec<ModeBath>,
    pub jumps: Vec<ResolvedJump>,
    pub kept_terms: Vec<RotatingTerm>,
    pub dropped_terms: Vec<RotatingTerm>,
    /// Extra rotation `θ_i` of each mode relative to the interaction frame.
    pub frame_shifts: Vec<f64>,
}

impl EffectiveSystem {
    pub fn new(basis: Vec<String>, hamiltonian: DMatrix<C64>, baths: Vec<ModeBath>) -> Self {
        let n = basis.len();
        assert_eq!(hamiltonian.nrows(), 2 * n);
        assert_eq!(baths.len(), n);
        Self {
            basis,
            hamiltonian,
            baths,
            jumps: Vec::new(),
            kept_terms: Vec::new(),
            dropped_terms: Vec::new(),
            frame_shifts: vec![0.0; n],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.basis.len()
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.basis
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::ModeNotFound(label.to_string()))
    }

    pub fn add_jump(&mut self, op: LinearOp, rate: f64, n_thermal: f64) {
        self.jumps.push(ResolvedJump { op, rate, n_thermal });
    }

    pub fn quadrature_hamiltonian(&self) -> DMatrix<f64> {
        quadrature_transform(self)
    }
}

pub fn resolve_jump(spec: &NetworkSpec, jump: &JumpSpec) -> Result<ResolvedJump> {
    let n = spec.modes.len();
    let mut pairs = Vec::new();
    for (label, (u, v)) in &jump.coefficients {
        pairs.push((spec.require_mode(label)?, *u, *v));
    }
    Ok(ResolvedJump {
        op: LinearOp::from_pairs(n, pairs),
        rate: jump.rate,
        n_thermal: jump.n_thermal,
    })
}

fn static_terms(spec: &NetworkSpec) -> Vec<RotatingTerm> {
    let mut out = Vec::new();
    let omega = |l: &str| {
        let i = spec.mode_index(l).expect("labels resolved by check");
        if spec.frame == Frame::Lab {
            spec.modes[i].omega
        } else {
            0.0
        }
    };
    for (k, c) in spec.static_couplings.iter().enumerate() {
        let (wa, wb) = (omega(&c.modes[0]), omega(&c.modes[1]));
        let source = format!("static {k}");
        let hop = |amp: C64| RotatingTerm {
            kind: TermKind::Hopping,
            modes: c.modes.clone(),
            amplitude: amp,
            detuning: wa - wb,
            source: source.clone(),
        };
        let sq = |amp: C64| RotatingTerm {
            kind: TermKind::Squeezing,
            modes: c.modes.clone(),
            amplitude: amp,
            detuning: wa + wb,
            source: source.clone(),
        };
        let half = C64::new(c.amplitude.re / 2.0, 0.0);
        match c.kind {
            CouplingKind::Hopping => out.push(hop(c.amplitude)),
            CouplingKind::Squeezing => out.push(sq(c.amplitude)),
            CouplingKind::QndXX => {
                out.push(hop(half));
                out.push(sq(half));
            }
            CouplingKind::QndPP => {
                out.push(hop(half));
                out.push(sq(-half));
            }
        }
    }
    out
}

/// Expands every drive and static coupling into interaction-frame terms.
pub fn rotating_frame_terms(spec: &NetworkSpec) -> Result<Vec<RotatingTerm>> {
    spec.check()?;
    if spec.frame == Frame::Rotating && !spec.drives.is_empty() {
        return Err(Error::Invalid(
            "parametric drives require a lab-frame network".into(),
        ));
    }
    let mut out = Vec::new();
    for (k, d) in spec.drives.iter().enumerate() {
        if d.lambda == 0.0 {
            continue;
        }
        let wa = spec.modes[spec.require_mode(&d.modes[0])?].omega;
        let wb = spec.modes[spec.require_mode(&d.modes[1])?].omega;
        let main = C64::from_polar(d.lambda, d.phi);
        let image = main.conj();
        let term = |kind, amplitude, detuning, tag: &str| RotatingTerm {
            kind,
            modes: d.modes.clone(),
            amplitude,
            detuning,
            source: format!("drive {k} {tag}"),
        };
        out.push(term(TermKind::Hopping, main, wa - wb - d.omega_d, "hopping"));
        out.push(term(TermKind::Hopping, image, wa - wb + d.omega_d, "hopping image"));
        out.push(term(TermKind::Squeezing, image, wa + wb - d.omega_d, "squeezing"));
        out.push(term(TermKind::Squeezing, main, wa + wb + d.omega_d, "squeezing image"));
    }
    out.extend(static_terms(spec));
    Ok(out)
}

/// Resonance tolerance used when none is given.
pub fn default_epsilon(spec: &NetworkSpec) -> f64 {
    let m = spec.modes.iter().map(|m| m.omega.abs()).fold(0.0, f64::max);
    1e-9 * m
}

pub const DEFAULT_RHO_MIN: f64 = 10.0;

fn mode_pair(spec: &NetworkSpec, t: &RotatingTerm) -> Result<(usize, usize)> {
    Ok((spec.require_mode(&t.modes[0])?, spec.require_mode(&t.modes[1])?))
}

fn frame_row(n: usize, kind: TermKind, i: usize, j: usize) -> DVector<f64> {
    let mut r = DVector::zeros(n);
    match kind {
        TermKind::Hopping => {
            r[i] += 1.0;
            r[j] -= 1.0;
        }
        TermKind::Squeezing => {
            r[i] += 1.0;
            r[j] += 1.0;
        }
    }
    r
}

fn solve_min_norm(rows: &[DVector<f64>], rhs: &[f64], n: usize) -> (DVector<f64>, f64) {
    if rows.is_empty() {
        return (DVector::zeros(n), 0.0);
    }
    let m = DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]);
    let b = DVector::from_column_slice(rhs);
    let svd = m.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12).expect("both factors were computed");
    let resid = (&m * &x - &b).amax();
    (x, resid)
}

/// Keeps near-resonant terms and folds their residual detunings into mode detunings.
pub fn rwa_reduce(
    spec: &NetworkSpec,
    terms: &[RotatingTerm],
    epsilon_res: f64,
    rho_min: f64,
) -> Result<(EffectiveSystem, Vec<Diagnostic>)> {
    if epsilon_res < 0.0 || !epsilon_res.is_finite() {
        return Err(Error::Invalid(format!("epsilon_res must be finite and >= 0, got {epsilon_res}")));
    }
    if rho_min <= 1.0 {
        return Err(Error::Invalid(format!("rho_min must exceed 1, got {rho_min}")));
    }
    let n = spec.modes.len();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut diags = Vec::new();
    for t in terms {
        if t.detuning.abs() <= epsilon_res {
            kept.push(t.clone());
        } else {
            if t.detuning.abs() < rho_min * t.amplitude.norm() {
                diags.push(Diagnostic {
                    severity: Severity::Warning,
                    message: format!(
                        "RWA questionable: dropped {} has |detuning| below {rho_min}x its amplitude {:.3e}",
                        t.describe(),
                        t.amplitude.norm()
                    ),
                });
            }
            dropped.push(t.clone());
        }
    }

    let scale = kept.iter().map(|t| t.detuning.abs()).fold(epsilon_res, f64::max).max(f64::MIN_POSITIVE);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (k, t) in kept.iter().enumerate() {
        let (i, j) = mode_pair(spec, t)?;
        rows.push(frame_row(n, t.kind, i, j));
        rhs.push(-t.detuning);
        let (_, resid) = solve_min_norm(&rows, &rhs, n);
        if resid > 1e-9 * scale {
            let first = kept[..k]
                .iter()
                .find(|o| o.modes.iter().any(|l| t.modes.contains(l)))
                .unwrap_or(&kept[0]);
            return Err(Error::InconsistentFrame {
                first: first.describe(),
                second: t.describe(),
            });
        }
    }
    let (theta, _) = solve_min_norm(&rows, &rhs, n);

    let mut h = QuadraticHamiltonian::new(n);
    for (i, m) in spec.modes.iter().enumerate() {
        let base = if spec.frame == Frame::Rotating { m.omega } else { 0.0 };
        let det = base - theta[i];
        if det != 0.0 {
            h.add_detuning(i, det);
        }
    }
    for t in &kept {
        let (i, j) = mode_pair(spec, t)?;
        match t.kind {
            TermKind::Hopping => h.add_hopping(i, j, t.amplitude),
            TermKind::Squeezing => h.add_squeezing(i, j, t.amplitude),
        }
    }
    let hamiltonian = h.into_matrix();
    check_structure(&hamiltonian)?;

    let baths = spec
        .modes
        .iter()
        .map(|m| ModeBath {
            kappa_port: m.kappa_port,
            kappa_int: m.kappa_int,
            n_port: m.n_thermal_port,
            n_int: m.n_thermal_int,
            role: m.role_hint,
        })
        .collect();
    let mut sys = EffectiveSystem::new(spec.labels(), hamiltonian, baths);
    for j in &spec.jumps {
        sys.jumps.push(resolve_jump(spec, j)?);
    }
    if theta.iter().any(|x| x.abs() > 0.0) {
        for (k, j) in sys.jumps.iter().enumerate() {
            let sup = j.op.support();
            if sup.windows(2).any(|w| (theta[w[0]] - theta[w[1]]).abs() > 1e-12 * scale) {
                diags.push(Diagnostic {
                    severity: Severity::Warning,
                    message: format!("jump {k} spans modes with different residual frame shifts"),
                });
            }
        }
    }
    sys.kept_terms = kept;
    sys.dropped_terms = dropped;
    sys.frame_shifts = theta.iter().copied().collect();
    Ok((sys, diags))
}

/// Validates, expands and reduces a network with default tolerances.
pub fn compile_effective(spec: &NetworkSpec) -> Result<(EffectiveSystem, Vec<Diagnostic>)> {
    let mut diags = validate(spec);
    if has_errors(&diags) {
        let msgs: Vec<String> = diags
            .iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.message.clone())
            .collect();
        return Err(Error::Invalid(msgs.join("; ")));
    }
    let terms = rotating_frame_terms(spec)?;
    let (sys, more) = rwa_reduce(spec, &terms, default_epsilon(spec), DEFAULT_RHO_MIN)?;
    diags.extend(more);
    Ok((sys, diags))
}

/// Maps a stiff pump `g₃ c̄ cos(ω_p t + φ)` onto an equivalent parametric drive.
pub fn stiff_pump_linearize(
    modes: (&str, &str),
    g3: f64,
    pump_amplitude: f64,
    pump_freq: f64,
    pump_phase: f64,
) -> Result<ParametricDrive> {
    if pump_amplitude < 0.0 {
        return Err(Error::NegativeRate {
            what: "pump amplitude".into(),
            value: pump_amplitude,
        });
    }
    Ok(ParametricDrive::new(modes.0, modes.1, g3 * pump_amplitude / 2.0, pump_freq, pump_phase))
}

/// Real symmetric `H_q` with `Ĥ = ½ qᵀ H_q q`.
pub fn quadrature_transform(system: &EffectiveSystem) -> DMatrix<f64> {
    to_quadrature_real(&system.hamiltonian)
}
