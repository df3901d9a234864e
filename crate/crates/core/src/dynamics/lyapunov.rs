use nalgebra::{DMatrix, DVector};

use super::statespace::StateSpaceModel;
use crate::error::{Error, Result};

const MAX_DIM: usize = 64;

/// Solves `A V + V Aᵀ + D = 0` through the Kronecker form `(I⊗A + A⊗I) vec V = −vec D`.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n > MAX_DIM {
        return Err(Error::TooLarge(n));
    }
    let id = DMatrix::<f64>::identity(n, n);
    let k = id.kronecker(a) + a.kronecker(&id);
    let rhs = -DVector::from_column_slice(d.as_slice());
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular Lyapunov operator".into()))?;
    let v = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&v + v.transpose()) * 0.5)
}

/// Steady symmetrized covariance of the quadratures.
pub fn steady_covariance(model: &StateSpaceModel) -> Result<DMatrix<f64>> {
    let n = model.drift_q.nrows();
    if n > MAX_DIM {
        return Err(Error::TooLarge(n));
    }
    let scale = model.drift_q.amax().max(f64::MIN_POSITIVE);
    let max_re = model.stability_margin();
    if max_re >= -1e-12 * scale {
        return Err(Error::Unstable { max_re });
    }
    solve_lyapunov(&model.drift_q, &model.diffusion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::build_state_space;
    use crate::frames::{EffectiveSystem, ModeBath};
    use crate::ops::QuadraticHamiltonian;
    use num_complex::Complex64 as C64;

    #[test]
    fn vacuum_and_thermal_cavity() {
        for n in [0.0, 2.5] {
            let mut b = ModeBath::port(1.3);
            b.n_port = n;
            let sys = EffectiveSystem::new(vec!["a".into()], DMatrix::zeros(2, 2), vec![b]);
            let v = steady_covariance(&build_state_space(&sys)).unwrap();
            let expect = DMatrix::<f64>::identity(2, 2) * (n + 0.5);
            assert!((v - expect).amax() < 1e-13);
        }
    }

    #[test]
    fn unstable_reports_margin() {
        let mut h = QuadraticHamiltonian::new(1);
        h.add_squeezing(0, 0, C64::new(0.5, 0.0));
        let sys = EffectiveSystem::new(vec!["a".into()], h.into_matrix(), vec![ModeBath::port(1.0)]);
        match steady_covariance(&build_state_space(&sys)) {
            Err(Error::Unstable { max_re }) => assert!((max_re - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn residual_vanishes() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.3, 0.0, -0.2, -0.5, 0.1, 0.0, 0.4, -2.0]);
        let d = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, 0.5]);
        let v = solve_lyapunov(&a, &d).unwrap();
        let r = &a * &v + &v * a.transpose() + &d;
        assert!(r.amax() < 1e-13);
    }
}
