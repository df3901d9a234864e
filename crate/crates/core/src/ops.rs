//! Linear mode operators and quadratic forms in the doubled basis.
//!
//! For `n` modes the doubled vector is `v = (a_1..a_n, a_1†..a_n†)` and the
//! quadrature vector is `q = (X_1, P_1, .., X_n, P_n)` with
//! `X = (a + a†)/√2`, `P = -i(a - a†)/√2`, so `q = T v` for a fixed unitary `T`.
//! A quadratic Hamiltonian is stored as the Hermitian matrix `H` with
//! `Ĥ = ½ v† H v` (up to a constant).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

#[cfg(test)]
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// `Σ_i (u_i a_i + v_i a_i†)`, stored as its doubled coefficient vector `w`
/// so that the operator equals `wᵀ v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOp {
    w: DVector<C64>,
}

impl LinearOp {
    pub fn zero(n_modes: usize) -> Self {
        Self {
            w: DVector::zeros(2 * n_modes),
        }
    }

    pub fn from_coeffs(w: DVector<C64>) -> Self {
        assert!(w.len() % 2 == 0, "doubled coefficient vector must have even length");
        Self { w }
    }

    /// Builds `Σ_i (u_i a_i + v_i a_i†)` from per-mode `(u, v)` pairs.
    pub fn from_pairs(n_modes: usize, pairs: impl IntoIterator<Item = (usize, C64, C64)>) -> Self {
        let mut w = DVector::zeros(2 * n_modes);
        for (i, u, v) in pairs {
            w[i] += u;
            w[n_modes + i] += v;
        }
        Self { w }
    }

    pub fn annihilation(n_modes: usize, i: usize) -> Self {
        let mut op = Self::zero(n_modes);
        op.w[i] = ONE;
        op
    }

    pub fn creation(n_modes: usize, i: usize) -> Self {
        let mut op = Self::zero(n_modes);
        op.w[n_modes + i] = ONE;
        op
    }

    pub fn x(n_modes: usize, i: usize) -> Self {
        let mut op = Self::zero(n_modes);
        op.w[i] = C64::new(FRAC_1_SQRT_2, 0.0);
        op.w[n_modes + i] = C64::new(FRAC_1_SQRT_2, 0.0);
        op
    }

    pub fn p(n_modes: usize, i: usize) -> Self {
        let mut op = Self::zero(n_modes);
        op.w[i] = C64::new(0.0, -FRAC_1_SQRT_2);
        op.w[n_modes + i] = C64::new(0.0, FRAC_1_SQRT_2);
        op
    }

    pub fn n_modes(&self) -> usize {
        self.w.len() / 2
    }

    pub fn coeffs(&self) -> &DVector<C64> {
        &self.w
    }

    /// Annihilation part `u_i` for mode `i`.
    pub fn u(&self, i: usize) -> C64 {
        self.w[i]
    }

    /// Creation part `v_i` for mode `i`.
    pub fn v(&self, i: usize) -> C64 {
        self.w[self.n_modes() + i]
    }

    pub fn dagger(&self) -> Self {
        let n = self.n_modes();
        let mut w = DVector::zeros(2 * n);
        for i in 0..n {
            w[i] = self.w[n + i].conj();
            w[n + i] = self.w[i].conj();
        }
        Self { w }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { w: &self.w * c }
    }

    pub fn plus(&self, other: &LinearOp) -> Self {
        Self {
            w: &self.w + &other.w,
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.w.iter().all(|c| c.norm() <= tol)
    }

    /// Modes with a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        let n = self.n_modes();
        (0..n)
            .filter(|&i| self.w[i].norm() > 0.0 || self.w[n + i].norm() > 0.0)
            .collect()
    }

    /// Coefficients `c` with the operator equal to `cᵀ q` in the quadrature basis.
    pub fn quadrature_coeffs(&self) -> DVector<C64> {
        quadrature_transform_matrix(self.n_modes()).map(|z| z.conj()) * &self.w
    }

    /// Drops mode `k`, shifting later indices down.
    pub fn without_mode(&self, k: usize) -> Self {
        let n = self.n_modes();
        let mut w = DVector::zeros(2 * (n - 1));
        let mut j = 0;
        for i in 0..n {
            if i == k {
                continue;
            }
            w[j] = self.w[i];
            w[n - 1 + j] = self.w[n + i];
            j += 1;
        }
        Self { w }
    }
}

/// `Σ_x`: swaps the annihilation and creation blocks.
pub fn sigma_x(n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = ONE;
        m[(n + i, i)] = ONE;
    }
    m
}

/// `Σ_z = diag(I, -I)`.
pub fn sigma_z(n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = ONE;
        m[(n + i, n + i)] = -ONE;
    }
    m
}

/// Commutator matrix `J_kl = [v_k, v_l]`.
pub fn commutator_form(n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = ONE;
        m[(n + i, i)] = -ONE;
    }
    m
}

/// Standard symplectic form `Ω` in `(X_1, P_1, ..)` ordering, `[q_k, q_l] = iΩ_kl`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(2 * i, 2 * i + 1)] = 1.0;
        m[(2 * i + 1, 2 * i)] = -1.0;
    }
    m
}

/// Unitary `T` with `q = T v`.
pub fn quadrature_transform_matrix(n: usize) -> DMatrix<C64> {
    let s = FRAC_1_SQRT_2;
    let mut t = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        t[(2 * j, j)] = C64::new(s, 0.0);
        t[(2 * j, n + j)] = C64::new(s, 0.0);
        t[(2 * j + 1, j)] = C64::new(0.0, -s);
        t[(2 * j + 1, n + j)] = C64::new(0.0, s);
    }
    t
}

/// Maps a doubled-basis matrix `M` to `T M T†`.
pub fn to_quadrature(m: &DMatrix<C64>) -> DMatrix<C64> {
    let t = quadrature_transform_matrix(m.nrows() / 2);
    &t * m * t.adjoint()
}

/// Real part of [`to_quadrature`], for matrices whose image is real by construction.
pub fn to_quadrature_real(m: &DMatrix<C64>) -> DMatrix<f64> {
    to_quadrature(m).map(|z| z.re)
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.abs()))
}

/// Builder for `Ĥ = ½ v† H v`.
#[derive(Debug, Clone)]
pub struct QuadraticHamiltonian {
    h: DMatrix<C64>,
}

impl QuadraticHamiltonian {
    pub fn new(n_modes: usize) -> Self {
        Self {
            h: DMatrix::zeros(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn from_matrix(h: DMatrix<C64>) -> Self {
        Self { h }
    }

    pub fn n_modes(&self) -> usize {
        self.h.nrows() / 2
    }

    /// Adds `coef·ẑ₁ẑ₂ + h.c.`, dropping c-number constants from reordering.
    pub fn add_bilinear(&mut self, coef: C64, z1: &LinearOp, z2: &LinearOp) {
        let n = self.n_modes();
        // ẑ₁ẑ₂ = v† (Σ_x w₁) w₂ᵀ v
        let left = sigma_x(n) * z1.coeffs();
        let m = (left * z2.coeffs().transpose()) * coef;
        let herm = &m + m.adjoint();
        let sx = sigma_x(n);
        let mirrored = &sx * herm.transpose() * &sx;
        self.h += herm + mirrored;
    }

    pub fn add_detuning(&mut self, i: usize, delta: f64) {
        let n = self.n_modes();
        self.h[(i, i)] += delta;
        self.h[(n + i, n + i)] += delta;
    }

    /// `g a_i a_j† + g* a_i† a_j`.
    pub fn add_hopping(&mut self, i: usize, j: usize, g: C64) {
        let n = self.n_modes();
        self.add_bilinear(
            g,
            &LinearOp::annihilation(n, i),
            &LinearOp::creation(n, j),
        );
    }

    /// `g a_i† a_j† + g* a_i a_j`.
    pub fn add_squeezing(&mut self, i: usize, j: usize, g: C64) {
        let n = self.n_modes();
        self.add_bilinear(g, &LinearOp::creation(n, i), &LinearOp::creation(n, j));
    }

    /// `c · X_i X_j` for real `c`.
    pub fn add_xx(&mut self, i: usize, j: usize, c: f64) {
        let n = self.n_modes();
        self.add_bilinear(C64::new(c / 2.0, 0.0), &LinearOp::x(n, i), &LinearOp::x(n, j));
    }

    /// `c · P_i P_j` for real `c`.
    pub fn add_pp(&mut self, i: usize, j: usize, c: f64) {
        let n = self.n_modes();
        self.add_bilinear(C64::new(c / 2.0, 0.0), &LinearOp::p(n, i), &LinearOp::p(n, j));
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.h
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.h
    }
}

/// Largest violation of Hermiticity and of `H = Σ_x H* Σ_x`.
pub fn structure_defect(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows() / 2;
    let sx = sigma_x(n);
    let herm = max_abs(&(h - h.adjoint()));
    let ph = max_abs(&(h - &sx * h.map(|z| z.conj()) * &sx));
    herm.max(ph)
}

/// Checks Hermiticity and particle-hole symmetry relative to the matrix scale.
pub fn check_structure(h: &DMatrix<C64>) -> Result<()> {
    let scale = max_abs(h).max(1.0);
    let defect = structure_defect(h);
    if defect > 1e-12 * scale {
        return Err(Error::Numeric(format!(
            "assembled Hamiltonian violates Hermitian/particle-hole structure by {defect:.3e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hopping_lands_in_expected_blocks() {
        let mut h = QuadraticHamiltonian::new(2);
        h.add_hopping(0, 1, c(0.3, 0.1));
        let m = h.matrix();
        // coefficient of b† a is g
        assert_eq!(m[(1, 0)], c(0.3, 0.1));
        assert_eq!(m[(0, 1)], c(0.3, -0.1));
        assert_eq!(m[(3, 2)], c(0.3, -0.1));
        assert_eq!(m[(2, 3)], c(0.3, 0.1));
        check_structure(m).unwrap();
    }

    #[test]
    fn self_squeezing_doubles_the_anomalous_entry() {
        let mut h = QuadraticHamiltonian::new(1);
        h.add_squeezing(0, 0, c(0.25, 0.0));
        assert!((h.matrix()[(0, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((h.matrix()[(1, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn xx_splits_into_hopping_and_squeezing() {
        let mut a = QuadraticHamiltonian::new(2);
        a.add_xx(0, 1, 0.8);
        let mut b = QuadraticHamiltonian::new(2);
        b.add_hopping(0, 1, c(0.4, 0.0));
        b.add_squeezing(0, 1, c(0.4, 0.0));
        assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-15);
    }

    #[test]
    fn pp_has_opposite_squeezing_sign() {
        let mut a = QuadraticHamiltonian::new(2);
        a.add_pp(0, 1, 0.8);
        let mut b = QuadraticHamiltonian::new(2);
        b.add_hopping(0, 1, c(0.4, 0.0));
        b.add_squeezing(0, 1, c(-0.4, 0.0));
        assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-15);
    }

    #[test]
    fn transform_is_unitary_and_maps_ops() {
        let t = quadrature_transform_matrix(3);
        let id = DMatrix::<C64>::identity(6, 6);
        assert!(max_abs(&(&t * t.adjoint() - id)) < 1e-15);
        let x = LinearOp::x(3, 1).quadrature_coeffs();
        assert!((x[2] - ONE).norm() < 1e-15);
        assert!(x.iter().enumerate().all(|(k, z)| k == 2 || z.norm() < 1e-15));
        let a = LinearOp::annihilation(3, 0).quadrature_coeffs();
        assert!((a[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn dagger_is_involutive() {
        let op = LinearOp::from_pairs(2, [(0, c(1.0, 2.0), c(0.0, -1.0)), (1, c(0.5, 0.0), ZERO)]);
        assert_eq!(op.dagger().dagger(), op);
        assert_eq!(op.dagger().u(0), c(0.0, 1.0));
        assert_eq!(op.dagger().v(0), c(1.0, -2.0));
    }

    #[test]
    fn without_mode_reindexes() {
        let op = LinearOp::from_pairs(3, [(0, ONE, ZERO), (2, ZERO, I)]);
        let r = op.without_mode(1);
        assert_eq!(r.n_modes(), 2);
        assert_eq!(r.u(0), ONE);
        assert_eq!(r.v(1), I);
    }
}
