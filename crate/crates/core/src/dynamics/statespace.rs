use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::EffectiveSystem;
use crate::ops::{
    commutator_form, quadrature_transform_matrix, sigma_x, sigma_z, symplectic_form, to_quadrature_real, LinearOp,
    I,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Port,
    Internal,
    Jump,
}

/// A bath coupled through `√rate · ẑ`; each channel is an input/output port of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub label: String,
    pub kind: ChannelKind,
    pub op: LinearOp,
    pub rate: f64,
    pub n_thermal: f64,
}

/// Linear model `dv/dt = A v + B u_in`, `u_out = C v − u_in`.
///
/// `u = (c_1..c_M, c_1†..c_M†)` over the channels, `v` the doubled mode vector.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    pub basis: Vec<String>,
    pub drift: DMatrix<C64>,
    pub drift_q: DMatrix<f64>,
    pub input: DMatrix<C64>,
    pub output: DMatrix<C64>,
    /// Symmetrized diffusion in the quadrature basis.
    pub diffusion: DMatrix<f64>,
    pub channels: Vec<Channel>,
}

impl StateSpaceModel {
    pub fn n_modes(&self) -> usize {
        self.basis.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel_index(&self, label: &str) -> Result<usize> {
        self.channels
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| Error::UnknownChannel(label.to_string()))
    }

    /// Bath occupation plus the vacuum half quantum, in doubled channel order.
    pub fn input_noise(&self) -> Vec<f64> {
        let n: Vec<f64> = self.channels.iter().map(|c| c.n_thermal + 0.5).collect();
        n.iter().chain(n.iter()).copied().collect()
    }

    /// Largest real part of the quadrature drift spectrum; `+∞` if the eigenvalue iteration fails.
    pub fn stability_margin(&self) -> f64 {
        if self.drift_q.nrows() == 0 {
            return f64::NEG_INFINITY;
        }
        match nalgebra::Schur::try_new(self.drift_q.clone(), f64::EPSILON, 100_000) {
            Some(schur) => schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max),
            None => f64::INFINITY,
        }
    }
}

/// Drift and diffusion increments of one Lindblad term.
#[derive(Debug, Clone)]
pub struct LindbladTerms {
    /// Drift in the doubled basis.
    pub delta_a: DMatrix<C64>,
    /// Drift in the quadrature basis, assembled independently of `delta_a`.
    pub delta_a_q: DMatrix<f64>,
    /// Symmetrized diffusion, quadrature basis.
    pub delta_d: DMatrix<f64>,
}

/// Unit-rate `D[x,y]ρ = x ρ y† − ½{y†x, ρ}` acting on first and symmetrized second moments.
///
/// Returns `(drift, diffusion)` in the doubled basis.
pub fn dissipator_terms(x: &LinearOp, y: &LinearOp) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = x.n_modes();
    let j = commutator_form(n);
    let wx = x.coeffs();
    let wy_dag = y.dagger();
    let wyd = wy_dag.coeffs();
    let alpha = &j * wx;
    let beta = &j * wyd;
    let half = C64::new(0.5, 0.0);
    let drift = (&alpha * wyd.transpose() - &beta * wx.transpose()) * half;
    let diff = (&alpha * beta.transpose() + &beta * alpha.transpose()) * (-half);
    (drift, diff)
}

fn doubled_to_quadrature_sym(d: &DMatrix<C64>) -> DMatrix<f64> {
    let t = quadrature_transform_matrix(d.nrows() / 2);
    (&t * d * t.transpose()).map(|z| z.re)
}

/// `rate·[(n+1) L[ẑ] + n L[ẑ†]]`.
pub fn lindblad_contribution(op: &LinearOp, rate: f64, n_thermal: f64) -> LindbladTerms {
    let n = op.n_modes();
    let (a, d_fwd) = dissipator_terms(op, op);
    let zd = op.dagger();
    let (_, d_rev) = dissipator_terms(&zd, &zd);
    let delta_a = a * C64::new(rate, 0.0);
    let d = d_fwd * C64::new(rate * (n_thermal + 1.0), 0.0) + d_rev * C64::new(rate * n_thermal, 0.0);

    let c = op.quadrature_coeffs();
    let cc = &c * c.adjoint();
    let omega = symplectic_form(n);
    let delta_a_q = &omega * cc.map(|z| z.im) * (-rate);
    let delta_d_q = &omega * cc.map(|z| z.re) * omega.transpose() * (rate * (2.0 * n_thermal + 1.0));
    let from_doubled = doubled_to_quadrature_sym(&d);
    debug_assert!((&from_doubled - &delta_d_q).amax() <= 1e-12 * (1.0 + delta_d_q.amax()));
    LindbladTerms {
        delta_a,
        delta_a_q,
        delta_d: from_doubled,
    }
}

/// Channels in fixed order: ports, internal losses, engineered jumps.
pub fn channels_of(system: &EffectiveSystem) -> Vec<Channel> {
    let n = system.n_modes();
    let mut out = Vec::new();
    for (i, (label, b)) in system.basis.iter().zip(&system.baths).enumerate() {
        if b.kappa_port > 0.0 {
            out.push(Channel {
                label: label.clone(),
                kind: ChannelKind::Port,
                op: LinearOp::annihilation(n, i),
                rate: b.kappa_port,
                n_thermal: b.n_port,
            });
        }
    }
    for (i, (label, b)) in system.basis.iter().zip(&system.baths).enumerate() {
        if b.kappa_int > 0.0 {
            out.push(Channel {
                label: format!("{label}.int"),
                kind: ChannelKind::Internal,
                op: LinearOp::annihilation(n, i),
                rate: b.kappa_int,
                n_thermal: b.n_int,
            });
        }
    }
    for (k, j) in system.jumps.iter().enumerate() {
        if j.rate > 0.0 {
            out.push(Channel {
                label: format!("z{k}"),
                kind: ChannelKind::Jump,
                op: j.op.clone(),
                rate: j.rate,
                n_thermal: j.n_thermal,
            });
        }
    }
    out
}

/// Assembles drift, input/output maps and diffusion for a compiled system.
pub fn build_state_space(system: &EffectiveSystem) -> StateSpaceModel {
    let n = system.n_modes();
    let channels = channels_of(system);
    let m = channels.len();
    let sz = sigma_z(n);
    let j = commutator_form(n);
    let sx = sigma_x(n);

    let mut drift = (&sz * &system.hamiltonian) * (-I);
    let mut drift_q = to_quadrature_real(&drift);
    let mut diffusion = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut input = DMatrix::<C64>::zeros(2 * n, 2 * m);
    let mut output = DMatrix::<C64>::zeros(2 * m, 2 * n);
    for (k, ch) in channels.iter().enumerate() {
        let terms = lindblad_contribution(&ch.op, ch.rate, ch.n_thermal);
        drift += &terms.delta_a;
        drift_q += &terms.delta_a_q;
        diffusion += &terms.delta_d;

        let s = C64::new(ch.rate.sqrt(), 0.0);
        let w = ch.op.coeffs();
        let wt = &sx * w.map(|z| z.conj());
        input.set_column(k, &((&j * &wt) * s));
        input.set_column(m + k, &((&j * w) * (-s)));
        output.set_row(k, &(w.transpose() * s));
        output.set_row(m + k, &(wt.transpose() * s));
    }
    diffusion = (&diffusion + diffusion.transpose()) * 0.5;
    StateSpaceModel {
        basis: system.basis.clone(),
        drift,
        drift_q,
        input,
        output,
        diffusion,
        channels,
    }
}
