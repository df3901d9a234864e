//! Nonreciprocity from balanced coherent and dissipative couplings.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{build_state_space, StateSpaceModel};
use crate::error::{Error, Result};
use crate::frames::{EffectiveSystem, ModeBath};
use crate::netmodel::{CouplingKind, Frame, Mode, NetworkSpec, RoleHint, StaticCoupling};
use crate::ops::{LinearOp, QuadraticHamiltonian};
use crate::scattering::{reverse_path, ChannelRef, Path};

/// Isolation reported when the reverse gain is numerically zero.
pub const ISOLATION_SENTINEL_DB: f64 = 300.0;
const REVERSE_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `B` follows `A`, `A` is blind to `B`.
    AToB,
    BToA,
    None,
}

/// `H = λ/2 Â B̂ + h.c.` together with `Γ L[Â + η e^{iφ} B̂†]`.
#[derive(Debug, Clone)]
pub struct BalanceSpec {
    pub basis: Vec<String>,
    pub baths: Vec<ModeBath>,
    pub a: LinearOp,
    pub b: LinearOp,
    pub eta: f64,
    pub phi: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Absolute tolerance on `φ`; `λ` is compared at `tolerance·Γ`.
    pub tolerance: f64,
}

impl BalanceSpec {
    /// Single modes `a` and `b` with `Â = a`, `B̂ = b`.
    pub fn two_mode(kappa_a: f64, kappa_b: f64, eta: f64, phi: f64, gamma: f64, lambda: f64) -> Self {
        Self {
            basis: vec!["a".into(), "b".into()],
            baths: vec![ModeBath::port(kappa_a), ModeBath::port(kappa_b)],
            a: LinearOp::annihilation(2, 0),
            b: LinearOp::annihilation(2, 1),
            eta,
            phi,
            gamma,
            lambda,
            tolerance: 1e-12,
        }
    }

    /// Same as [`BalanceSpec::two_mode`] but with `B̂ = b†`, a hopping-type link.
    pub fn two_mode_hopping(kappa_a: f64, kappa_b: f64, eta: f64, phi: f64, gamma: f64, lambda: f64) -> Self {
        Self {
            b: LinearOp::creation(2, 1),
            ..Self::two_mode(kappa_a, kappa_b, eta, phi, gamma, lambda)
        }
    }

    pub fn direction(&self) -> Direction {
        if (self.lambda - self.eta * self.gamma).abs() > self.tolerance * self.gamma.abs() {
            return Direction::None;
        }
        if (self.phi + FRAC_PI_2).abs() <= self.tolerance {
            Direction::AToB
        } else if (self.phi - FRAC_PI_2).abs() <= self.tolerance {
            Direction::BToA
        } else {
            Direction::None
        }
    }

    /// Modes touched by `Â` and `B̂`.
    pub fn partition(&self) -> (Vec<usize>, Vec<usize>) {
        (self.a.support(), self.b.support())
    }
}

#[derive(Debug, Clone)]
pub struct BalancedSystem {
    pub system: EffectiveSystem,
    pub direction: Direction,
}

pub fn build_balanced_system(balance: &BalanceSpec) -> BalancedSystem {
    let n = balance.basis.len();
    let mut h = QuadraticHamiltonian::new(n);
    h.add_bilinear(C64::new(balance.lambda / 2.0, 0.0), &balance.a, &balance.b);
    let mut system = EffectiveSystem::new(balance.basis.clone(), h.into_matrix(), balance.baths.clone());
    let jump = balance
        .a
        .plus(&balance.b.dagger().scale(C64::from_polar(balance.eta, balance.phi)));
    if balance.gamma > 0.0 {
        system.add_jump(jump, balance.gamma, 0.0);
    }
    BalancedSystem {
        system,
        direction: balance.direction(),
    }
}

/// Largest quadrature drift element feeding `to` modes from `from` modes.
pub fn drift_leakage(model: &StateSpaceModel, from: &[usize], to: &[usize]) -> f64 {
    let mut m = 0.0_f64;
    for &i in to {
        for &j in from {
            for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                m = m.max(model.drift_q[(2 * i + r, 2 * j + c)].abs());
            }
        }
    }
    m
}

fn non_negative(what: &str, value: f64) -> Result<()> {
    if value < 0.0 || !value.is_finite() {
        return Err(Error::NegativeRate {
            what: what.to_string(),
            value,
        });
    }
    Ok(())
}

/// `G X₁X₂ + √(Γκ_c/2)(X₁P_c + X₂X_c)` with the reservoir mode `c` kept explicit.
pub fn build_directional_bogoliubov_amp(g: f64, gamma: f64, kappa_c: f64, kappa: f64) -> Result<NetworkSpec> {
    non_negative("Gamma", gamma)?;
    non_negative("kappa_c", kappa_c)?;
    non_negative("kappa", kappa)?;
    let h = (gamma * kappa_c / 2.0).sqrt();
    let mut s = NetworkSpec::new(Frame::Rotating);
    s.modes.push(Mode::new("d1", 0.0, kappa).with_role(RoleHint::Signal));
    s.modes.push(Mode::new("d2", 0.0, kappa).with_role(RoleHint::Idler));
    s.modes.push(Mode::new("c", 0.0, kappa_c).with_role(RoleHint::Auxiliary));
    s.static_couplings
        .push(StaticCoupling::new(CouplingKind::QndXX, "d1", "d2", C64::new(g, 0.0)));
    // X₁P_c
    let xp = C64::new(0.0, h / 2.0);
    s.static_couplings
        .push(StaticCoupling::new(CouplingKind::Hopping, "d1", "c", xp));
    s.static_couplings
        .push(StaticCoupling::new(CouplingKind::Squeezing, "d1", "c", xp));
    s.static_couplings
        .push(StaticCoupling::new(CouplingKind::QndXX, "d2", "c", C64::new(h, 0.0)));
    Ok(s)
}

/// Directional Bogoliubov amplifier at the balance point `G = Γ`.
pub fn build_balanced_bogoliubov_amp(gamma: f64, kappa_c: f64, kappa: f64) -> Result<NetworkSpec> {
    build_directional_bogoliubov_amp(gamma, gamma, kappa_c, kappa)
}

/// `G(d1†d2† + d1 d2) + Γ₁L[d1† − i d2] + Γ₂L[d1 − i d2†]`.
pub fn build_two_reservoir_pp_amp(g: f64, gamma1: f64, gamma2: f64, kappa: f64) -> Result<EffectiveSystem> {
    non_negative("Gamma1", gamma1)?;
    non_negative("Gamma2", gamma2)?;
    non_negative("kappa", kappa)?;
    let mut h = QuadraticHamiltonian::new(2);
    h.add_squeezing(0, 1, C64::new(g, 0.0));
    let mut sys = EffectiveSystem::new(
        vec!["d1".into(), "d2".into()],
        h.into_matrix(),
        vec![ModeBath::port(kappa), ModeBath::port(kappa)],
    );
    let mi = C64::new(0.0, -1.0);
    let j1 = LinearOp::creation(2, 0).plus(&LinearOp::annihilation(2, 1).scale(mi));
    let j2 = LinearOp::annihilation(2, 0).plus(&LinearOp::creation(2, 1).scale(mi));
    if gamma1 > 0.0 {
        sys.add_jump(j1, gamma1, 0.0);
    }
    if gamma2 > 0.0 {
        sys.add_jump(j2, gamma2, 0.0);
    }
    Ok(sys)
}

/// Fitted `γ` in `G(ω)[1 + 4ω²/κ_c²][1 + 4ω²/κ²]² = G₀[1 + ω²/γ²]` for the balanced Bogoliubov amplifier.
///
/// Least squares in `ω²` over the nonzero grid points; `G₀ = 64Γ²/κ²`.
pub fn fit_bogoliubov_gamma(model: &StateSpaceModel, gamma: f64, kappa_c: f64, kappa: f64, omega: &[f64]) -> Result<f64> {
    let path = Path::resolve(model, &ChannelRef::x("d1"), &ChannelRef::p("d2"))?;
    let g0 = 64.0 * gamma * gamma / (kappa * kappa);
    let (mut num, mut den) = (0.0, 0.0);
    for &w in omega.iter().filter(|w| **w != 0.0) {
        let w2 = w * w;
        let shaped = path.gain(model, w)? * (1.0 + 4.0 * w2 / (kappa_c * kappa_c)) * (1.0 + 4.0 * w2 / (kappa * kappa)).powi(2);
        num += (shaped / g0 - 1.0) * w2;
        den += w2 * w2;
    }
    if den == 0.0 || num <= 0.0 {
        return Err(Error::Numeric("forward gain carries no resolvable ω² correction".into()));
    }
    Ok((den / num).sqrt())
}

/// Coherent strength at which the two-reservoir amplifier stops transmitting `d2 → d1†` on resonance.
///
/// Scans `[0, Γ₁ + Γ₂]` over stable points for the first sign change of the reverse amplitude, then bisects.
pub fn find_two_reservoir_balance(gamma1: f64, gamma2: f64, kappa: f64) -> Result<f64> {
    let reverse = |g: f64| -> Result<Option<C64>> {
        let model = build_state_space(&build_two_reservoir_pp_amp(g, gamma1, gamma2, kappa)?);
        if model.stability_margin() >= 0.0 {
            return Ok(None);
        }
        let path = Path::resolve(&model, &ChannelRef::field("d2"), &ChannelRef::conj("d1"))?;
        path.amplitude(&model, 0.0).map(Some)
    };
    let hi_end = gamma1 + gamma2;
    let steps = 400;
    let mut prev: Option<(f64, C64)> = None;
    let mut bracket = None;
    for i in 0..=steps {
        let g = hi_end * i as f64 / steps as f64;
        match reverse(g)? {
            Some(z) if z.norm() == 0.0 => return Ok(g),
            Some(z) => {
                if let Some((g0, z0)) = prev {
                    if z0.re * z.re < 0.0 {
                        bracket = Some((g0, g, z0.re.signum(), false));
                        break;
                    }
                    if z0.im * z.im < 0.0 {
                        bracket = Some((g0, g, z0.im.signum(), true));
                        break;
                    }
                }
                prev = Some((g, z));
            }
            None => prev = None,
        }
    }
    let (mut lo, mut hi, s_lo, imag) = bracket.ok_or_else(|| {
        Error::Numeric("reverse amplitude has no zero in the stable part of the coherent-strength range".into())
    })?;
    let part = |z: C64| if imag { z.im } else { z.re };
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = match reverse(mid)? {
            Some(z) => part(z),
            None => return Err(Error::Numeric("instability inside the balance bracket".into())),
        };
        if v == 0.0 {
            return Ok(mid);
        }
        if v.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Isolation {
    pub omega: Vec<f64>,
    pub forward: Vec<f64>,
    pub reverse: Vec<f64>,
    pub isolation_db: Vec<f64>,
}

impl Isolation {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_rad_s,gain_fwd_db,gain_rev_db,isolation_db\n");
        for i in 0..self.omega.len() {
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{:e}",
                self.omega[i],
                crate::scattering::to_db(self.forward[i]),
                crate::scattering::to_db(self.reverse[i]),
                self.isolation_db[i]
            );
        }
        s
    }
}

/// `10 log₁₀(G_fwd/G_rev)`, with the sentinel standing in for a vanishing reverse gain.
pub fn isolation_db(forward: f64, reverse: f64) -> f64 {
    if reverse < REVERSE_FLOOR {
        return ISOLATION_SENTINEL_DB;
    }
    (10.0 * (forward / reverse).log10()).clamp(-ISOLATION_SENTINEL_DB, ISOLATION_SENTINEL_DB)
}

pub fn isolation(model: &StateSpaceModel, from: &ChannelRef, to: &ChannelRef, omega: &[f64]) -> Result<Isolation> {
    let margin = model.stability_margin();
    if margin >= 0.0 {
        return Err(Error::Unstable { max_re: margin });
    }
    let fwd = Path::resolve(model, from, to)?;
    let (rf, rt) = reverse_path(from, to);
    let rev = Path::resolve(model, &rf, &rt)?;
    let pairs = omega
        .par_iter()
        .map(|&w| Ok((fwd.gain(model, w)?, rev.gain(model, w)?)))
        .collect::<Result<Vec<_>>>()?;
    let (forward, reverse): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let isolation_db = forward.iter().zip(&reverse).map(|(f, r)| isolation_db(*f, *r)).collect();
    Ok(Isolation {
        omega: omega.to_vec(),
        forward,
        reverse,
        isolation_db,
    })
}
