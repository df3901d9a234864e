use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::frames::EffectiveSystem;
use crate::netmodel::RoleHint;
use crate::ops::{LinearOp, QuadraticHamiltonian};

#[derive(Debug, Clone)]
pub struct EliminationResult {
    /// Coherent strength `Δλ²/(Δ² + κ²/4)`.
    pub lambda_eff: f64,
    /// Dissipative strength `κλ²/(Δ² + κ²/4)`.
    pub gamma: f64,
    /// Largest coupling magnitude `λ` of the eliminated mode.
    pub coupling: f64,
    /// Normalized operator `Ô` the mode couples to, in the reduced basis.
    pub operator: LinearOp,
    /// Remaining modes with `−Λ Ô†Ô` added to the Hamiltonian and `Γ L[Ô]` attached.
    pub reduced: EffectiveSystem,
    pub warnings: Vec<String>,
}

fn drop_mode(h: &DMatrix<C64>, k: usize) -> DMatrix<C64> {
    let n = h.nrows() / 2;
    h.clone().remove_row(n + k).remove_column(n + k).remove_row(k).remove_column(k)
}

/// Removes a strongly damped mode coupled through `c† L + L† c`.
pub fn adiabatic_eliminate(system: &EffectiveSystem, label: &str) -> Result<EliminationResult> {
    let k = system.index(label)?;
    let n = system.n_modes();
    let bath = system.baths[k];
    if matches!(bath.role, RoleHint::Signal | RoleHint::Idler) && bath.kappa_port > 0.0 {
        return Err(Error::AmbiguousPort(label.to_string()));
    }
    if system.jumps.iter().any(|j| j.op.support().contains(&k)) {
        return Err(Error::Invalid(format!(
            "mode '{label}' appears in an engineered jump and cannot be eliminated"
        )));
    }
    let kappa = bath.kappa_total();
    if kappa <= 0.0 {
        return Err(Error::Invalid(format!("mode '{label}' is undamped")));
    }
    let h = &system.hamiltonian;
    if h[(k, n + k)].norm() > 0.0 {
        return Err(Error::Invalid(format!(
            "mode '{label}' carries a self-squeezing term; only linear couplings can be eliminated"
        )));
    }
    let delta = h[(k, k)].re;

    let mut w = h.row(k).transpose().into_owned();
    w[k] = C64::new(0.0, 0.0);
    w[n + k] = C64::new(0.0, 0.0);
    let l_full = LinearOp::from_coeffs(w);
    let l_op = l_full.without_mode(k);
    let lambda = l_op.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);

    let denom = delta * delta + kappa * kappa / 4.0;
    let lambda_eff = delta * lambda * lambda / denom;
    let gamma = kappa * lambda * lambda / denom;

    let mut warnings = Vec::new();
    if lambda > 0.0 && kappa < 10.0 * lambda {
        warnings.push(format!(
            "mode '{label}': damping {kappa:.3e} is below 10x its coupling {lambda:.3e}; elimination is approximate"
        ));
    }

    let mut basis = system.basis.clone();
    basis.remove(k);
    let mut baths = system.baths.clone();
    baths.remove(k);
    let mut hr = QuadraticHamiltonian::from_matrix(drop_mode(h, k));
    let operator = if lambda > 0.0 {
        l_op.scale(C64::new(1.0 / lambda, 0.0))
    } else {
        l_op.clone()
    };
    if lambda_eff != 0.0 {
        hr.add_bilinear(C64::new(-lambda_eff / 2.0, 0.0), &operator.dagger(), &operator);
    }
    let mut reduced = EffectiveSystem::new(basis, hr.into_matrix(), baths);
    for j in &system.jumps {
        reduced.add_jump(j.op.without_mode(k), j.rate, j.n_thermal);
    }
    if gamma > 0.0 {
        let n_c = (bath.kappa_port * bath.n_port + bath.kappa_int * bath.n_int) / kappa;
        reduced.add_jump(operator.clone(), gamma, n_c);
    }
    reduced.kept_terms = system.kept_terms.clone();
    reduced.dropped_terms = system.dropped_terms.clone();
    let mut shifts = system.frame_shifts.clone();
    shifts.remove(k);
    reduced.frame_shifts = shifts;

    Ok(EliminationResult {
        lambda_eff,
        gamma,
        coupling: lambda,
        operator,
        reduced,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::ModeBath;

    fn three_mode(delta: f64, lambda: f64, kappa: f64) -> EffectiveSystem {
        let mut h = QuadraticHamiltonian::new(3);
        h.add_detuning(2, delta);
        h.add_hopping(0, 2, C64::new(lambda, 0.0));
        h.add_hopping(1, 2, C64::new(lambda, 0.0));
        let mut c = ModeBath::port(kappa);
        c.role = RoleHint::Auxiliary;
        EffectiveSystem::new(
            vec!["a".into(), "b".into(), "c".into()],
            h.into_matrix(),
            vec![ModeBath::port(0.1), ModeBath::port(0.1), c],
        )
    }

    #[test]
    fn resonant_rates() {
        let r = adiabatic_eliminate(&three_mode(0.0, 0.5, 20.0), "c").unwrap();
        assert_eq!(r.lambda_eff, 0.0);
        assert!((r.gamma - 4.0 * 0.25 / 20.0).abs() < 1e-15);
        assert_eq!(r.reduced.n_modes(), 2);
        assert_eq!(r.reduced.jumps.len(), 1);
        assert!((r.operator.u(0) - 1.0).norm() < 1e-15);
        assert!((r.operator.u(1) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn detuned_rates() {
        let kappa = 4.0;
        let r = adiabatic_eliminate(&three_mode(kappa / 2.0, 0.3, kappa), "c").unwrap();
        assert!((r.lambda_eff - 0.09 / kappa).abs() < 1e-15);
        assert!((r.gamma - 2.0 * 0.09 / kappa).abs() < 1e-15);
        // induced term −Λ(a†+b†)(a+b)
        assert!((r.reduced.hamiltonian[(0, 1)].re + r.lambda_eff).abs() < 1e-15);
        assert!((r.reduced.hamiltonian[(0, 0)].re + r.lambda_eff).abs() < 1e-15);
    }

    #[test]
    fn zero_coupling_just_removes() {
        let r = adiabatic_eliminate(&three_mode(1.0, 0.0, 4.0), "c").unwrap();
        assert_eq!((r.lambda_eff, r.gamma), (0.0, 0.0));
        assert!(r.reduced.jumps.is_empty());
        assert!(r.reduced.hamiltonian.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn errors_and_warnings() {
        let s = three_mode(0.0, 1.0, 2.0);
        assert_eq!(adiabatic_eliminate(&s, "q").unwrap_err(), Error::ModeNotFound("q".into()));
        assert!(!adiabatic_eliminate(&s, "c").unwrap().warnings.is_empty());
        let mut s2 = s.clone();
        s2.baths[2].role = RoleHint::Signal;
        assert_eq!(adiabatic_eliminate(&s2, "c").unwrap_err(), Error::AmbiguousPort("c".into()));
    }
}
