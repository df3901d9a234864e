//! Builders for the standard amplifier and coupler configurations.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::frames::{EffectiveSystem, ModeBath};
use crate::netmodel::{CouplingKind, Frame, JumpSpec, Mode, NetworkSpec, RoleHint, StaticCoupling};
use crate::ops::QuadraticHamiltonian;

fn positive(what: &str, value: f64) -> Result<()> {
    if value < 0.0 || !value.is_finite() {
        return Err(Error::NegativeRate {
            what: what.to_string(),
            value,
        });
    }
    Ok(())
}

/// Two-mode conversion `λ e^{iφ} a b† + h.c.` in the rotating frame.
pub fn frequency_conversion(kappa_a: f64, kappa_b: f64, lambda: f64, phi: f64) -> NetworkSpec {
    let mut s = NetworkSpec::new(Frame::Rotating);
    s.modes.push(Mode::new("a", 0.0, kappa_a));
    s.modes.push(Mode::new("b", 0.0, kappa_b));
    s.static_couplings.push(StaticCoupling::new(
        CouplingKind::Hopping,
        "a",
        "b",
        C64::from_polar(lambda, phi),
    ));
    s
}

/// Two-mode squeezing `λ e^{iφ} a† b† + h.c.` in the rotating frame.
pub fn parametric_amplifier(kappa_a: f64, kappa_b: f64, lambda: f64, phi: f64) -> NetworkSpec {
    let mut s = NetworkSpec::new(Frame::Rotating);
    s.modes.push(Mode::new("a", 0.0, kappa_a).with_role(RoleHint::Signal));
    s.modes.push(Mode::new("b", 0.0, kappa_b).with_role(RoleHint::Idler));
    s.static_couplings.push(StaticCoupling::new(
        CouplingKind::Squeezing,
        "a",
        "b",
        C64::from_polar(lambda, phi),
    ));
    s
}

/// Single-mode squeezer `iλ a†² − iλ a²` that amplifies `X` and squeezes `P`.
pub fn dpa(kappa: f64, lambda: f64) -> EffectiveSystem {
    let mut h = QuadraticHamiltonian::new(1);
    h.add_squeezing(0, 0, C64::new(0.0, lambda));
    EffectiveSystem::new(vec!["a".into()], h.into_matrix(), vec![ModeBath::port(kappa)])
}

/// Single-mode squeezer with on-resonance quadrature power gain `gain`.
pub fn dpa_with_gain(gain: f64, kappa: f64) -> Result<EffectiveSystem> {
    if !(gain >= 1.0) {
        return Err(Error::Invalid(format!("single-mode gain must be at least 1, got {gain}")));
    }
    let r = gain.sqrt();
    Ok(dpa(kappa, kappa / 4.0 * (r - 1.0) / (r + 1.0)))
}

/// Modes `a`, `b` coupled through a detuned, damped auxiliary mode `c`: `Δ c†c + λ[c†(a + b) + h.c.]`.
pub fn three_mode_hopping(delta: f64, lambda: f64, kappa_c: f64, kappa: f64) -> NetworkSpec {
    let mut s = NetworkSpec::new(Frame::Rotating);
    s.modes.push(Mode::new("a", 0.0, kappa));
    s.modes.push(Mode::new("b", 0.0, kappa));
    s.modes.push(Mode::new("c", delta, kappa_c).with_role(RoleHint::Auxiliary));
    for m in ["a", "b"] {
        s.static_couplings
            .push(StaticCoupling::new(CouplingKind::Hopping, m, "c", C64::new(lambda, 0.0)));
    }
    s
}

/// Dissipative amplifier `g c†(d1 + η d2†) + h.c.` with `g = √(Γκ_c)/2` and `Γ = Cκ`.
pub fn dissipative_amp(cooperativity: f64, eta: f64, kappa: f64, kappa_c: f64) -> Result<NetworkSpec> {
    positive("cooperativity", cooperativity)?;
    positive("kappa", kappa)?;
    positive("kappa_c", kappa_c)?;
    let gamma = cooperativity * kappa;
    let g = (gamma * kappa_c).sqrt() / 2.0;
    let mut s = NetworkSpec::new(Frame::Rotating);
    s.modes.push(Mode::new("d1", 0.0, kappa).with_role(RoleHint::Signal));
    s.modes.push(Mode::new("d2", 0.0, kappa).with_role(RoleHint::Idler));
    s.modes.push(Mode::new("c", 0.0, kappa_c).with_role(RoleHint::Auxiliary));
    s.static_couplings
        .push(StaticCoupling::new(CouplingKind::Hopping, "d1", "c", C64::new(g, 0.0)));
    s.static_couplings
        .push(StaticCoupling::new(CouplingKind::Squeezing, "d2", "c", C64::new(g * eta, 0.0)));
    Ok(s)
}

/// Markovian dissipative amplifier: ports `κ` on `d1`, `d2` and `Γ L[d1 + η d2†]`.
pub fn dissipative_amp_markov(cooperativity: f64, eta: f64, kappa: f64) -> Result<NetworkSpec> {
    positive("cooperativity", cooperativity)?;
    let mut s = NetworkSpec::new(Frame::Rotating);
    s.modes.push(Mode::new("d1", 0.0, kappa).with_role(RoleHint::Signal));
    s.modes.push(Mode::new("d2", 0.0, kappa).with_role(RoleHint::Idler));
    s.jumps.push(
        JumpSpec::new(cooperativity * kappa)
            .with("d1", C64::new(1.0, 0.0), C64::new(0.0, 0.0))
            .with("d2", C64::new(0.0, 0.0), C64::new(eta, 0.0)),
    );
    Ok(s)
}

/// Gain-plus-conversion amplifier `G₁(d1†d2† + h.c.) + G₂(d1 d2† + h.c.)` with `C_n = 4G_n²/κ²`.
pub fn gc_amp(c1: f64, c2: f64, kappa: f64) -> Result<NetworkSpec> {
    positive("C1", c1)?;
    positive("C2", c2)?;
    let g1 = c1.sqrt() * kappa / 2.0;
    let g2 = c2.sqrt() * kappa / 2.0;
    let mut s = NetworkSpec::new(Frame::Rotating);
    s.modes.push(Mode::new("d1", 0.0, kappa));
    s.modes.push(Mode::new("d2", 0.0, kappa));
    s.static_couplings
        .push(StaticCoupling::new(CouplingKind::Squeezing, "d1", "d2", C64::new(g1, 0.0)));
    s.static_couplings
        .push(StaticCoupling::new(CouplingKind::Hopping, "d1", "d2", C64::new(g2, 0.0)));
    Ok(s)
}

/// Gain-plus-conversion amplifier at `ΔC = −1` with on-resonance gain `(√C₁ + √C₂)² = gain`.
pub fn gc_amp_matched(gain: f64, kappa: f64) -> Result<NetworkSpec> {
    if !(gain > 1.0) {
        return Err(Error::Invalid(format!("matched amplifier needs gain above 1, got {gain}")));
    }
    // √C₁ + √(C₁ + 1) = √G
    let r = gain.sqrt();
    let sc1 = (r - 1.0 / r) / 2.0;
    let c1 = sc1 * sc1;
    gc_amp(c1, c1 + 1.0, kappa)
}

/// Empty lossless cavity with a single port.
pub fn single_port_cavity(kappa: f64) -> EffectiveSystem {
    EffectiveSystem::new(vec!["a".into()], DMatrix::zeros(2, 2), vec![ModeBath::port(kappa)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_cooperativities() {
        let s = gc_amp_matched(100.0, 1.0).unwrap();
        let g1 = s.static_couplings[0].amplitude.re;
        let g2 = s.static_couplings[1].amplitude.re;
        let (c1, c2) = (4.0 * g1 * g1, 4.0 * g2 * g2);
        assert!((c1 - c2 + 1.0).abs() < 1e-12);
        assert!(((c1.sqrt() + c2.sqrt()).powi(2) - 100.0).abs() < 1e-10);
    }

    #[test]
    fn da_coupling_from_cooperativity() {
        let s = dissipative_amp(3.0, 1.0, 1.0, 100.0).unwrap();
        let g = s.static_couplings[0].amplitude.re;
        assert!((4.0 * g * g / 100.0 - 3.0).abs() < 1e-12);
    }
}
