use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::statespace::build_state_space;
use crate::error::{Error, Result};
use crate::frames::{default_epsilon, rotating_frame_terms, EffectiveSystem, ModeBath, RotatingTerm, TermKind};
use crate::netmodel::{Frame, NetworkSpec};
use crate::frames::resolve_jump;
use crate::ops::{quadrature_transform_matrix, sigma_z, QuadraticHamiltonian, I};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Keep the counter-rotating terms; otherwise only near-resonant terms drive the system.
    pub include_cr: bool,
    /// Record every `sample_every`-th step (the final step is always recorded).
    pub sample_every: usize,
}

impl TimeDomainConfig {
    pub fn new(t_end: f64, dt: f64, include_cr: bool) -> Self {
        Self {
            t_start: 0.0,
            t_end,
            dt,
            include_cr,
            sample_every: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialState {
    /// `⟨a_i⟩` per mode.
    pub mean: Vec<C64>,
    /// Symmetrized quadrature covariance.
    pub covariance: DMatrix<f64>,
}

impl InitialState {
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            mean: vec![C64::new(0.0, 0.0); n_modes],
            covariance: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        }
    }

    pub fn coherent(amplitudes: Vec<C64>) -> Self {
        let n = amplitudes.len();
        Self {
            mean: amplitudes,
            covariance: DMatrix::identity(2 * n, 2 * n) * 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub means: Vec<Vec<C64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

impl Trajectory {
    pub fn last_covariance(&self) -> &DMatrix<f64> {
        self.covariances.last().expect("trajectory has at least one sample")
    }

    /// Time average of the covariance over samples with `t ≥ t_from`.
    pub fn mean_covariance_after(&self, t_from: f64) -> DMatrix<f64> {
        let n = self.covariances[0].nrows();
        let mut acc = DMatrix::zeros(n, n);
        let mut count = 0usize;
        for (t, v) in self.times.iter().zip(&self.covariances) {
            if *t >= t_from {
                acc += v;
                count += 1;
            }
        }
        if count == 0 {
            return self.last_covariance().clone();
        }
        acc / count as f64
    }

    /// `t, re_<m>, im_<m>, ..., V_11, V_12, ...` with the upper triangle of `V` row by row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for l in &self.labels {
            let _ = write!(s, ",re_{l},im_{l}");
        }
        let n = 2 * self.labels.len();
        for i in 0..n {
            for j in i..n {
                let _ = write!(s, ",V_{}_{}", i + 1, j + 1);
            }
        }
        s.push('\n');
        for ((t, m), v) in self.times.iter().zip(&self.means).zip(&self.covariances) {
            let _ = write!(s, "{t:e}");
            for z in m {
                let _ = write!(s, ",{:e},{:e}", z.re, z.im);
            }
            for i in 0..n {
                for j in i..n {
                    let _ = write!(s, ",{:e}", v[(i, j)]);
                }
            }
            s.push('\n');
        }
        s
    }
}

struct Generator {
    n: usize,
    static_drift: DMatrix<C64>,
    diffusion: DMatrix<f64>,
    terms: Vec<(TermKind, usize, usize, RotatingTerm)>,
    t: DMatrix<C64>,
    t_adj: DMatrix<C64>,
}

impl Generator {
    fn drift(&self, time: f64) -> DMatrix<C64> {
        let mut h = QuadraticHamiltonian::new(self.n);
        for (kind, i, j, term) in &self.terms {
            let g = term.amplitude_at(time);
            match kind {
                TermKind::Hopping => h.add_hopping(*i, *j, g),
                TermKind::Squeezing => h.add_squeezing(*i, *j, g),
            }
        }
        &self.static_drift + (sigma_z(self.n) * h.matrix()) * (-I)
    }

    fn quad(&self, a: &DMatrix<C64>) -> DMatrix<f64> {
        (&self.t * a * &self.t_adj).map(|z| z.re)
    }
}

fn build_generator(spec: &NetworkSpec, include_cr: bool) -> Result<(Generator, f64)> {
    let all = rotating_frame_terms(spec)?;
    let eps = default_epsilon(spec);
    let used: Vec<RotatingTerm> = if include_cr {
        all
    } else {
        all.into_iter().filter(|t| t.detuning.abs() <= eps).collect()
    };
    let n = spec.modes.len();
    let mut h0 = QuadraticHamiltonian::new(n);
    if spec.frame == Frame::Rotating {
        for (i, m) in spec.modes.iter().enumerate() {
            h0.add_detuning(i, m.omega);
        }
    }
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
    let mut base = EffectiveSystem::new(spec.labels(), h0.into_matrix(), baths);
    for j in &spec.jumps {
        base.jumps.push(resolve_jump(spec, j)?);
    }
    let model = build_state_space(&base);

    let mut fastest = spec.modes.iter().map(|m| m.omega.abs()).fold(0.0, f64::max);
    fastest = spec.drives.iter().map(|d| d.omega_d.abs()).fold(fastest, f64::max);
    let mut terms = Vec::new();
    for t in used {
        fastest = fastest.max(t.detuning.abs());
        let i = spec.require_mode(&t.modes[0])?;
        let j = spec.require_mode(&t.modes[1])?;
        terms.push((t.kind, i, j, t));
    }
    let tm = quadrature_transform_matrix(n);
    let t_adj = tm.adjoint();
    Ok((
        Generator {
            n,
            static_drift: model.drift,
            diffusion: model.diffusion,
            terms,
            t: tm,
            t_adj,
        },
        fastest,
    ))
}

/// Fixed-step RK4 integration of first moments and covariance with the full time-dependent generator.
pub fn integrate_time_domain(
    spec: &NetworkSpec,
    config: &TimeDomainConfig,
    initial: &InitialState,
) -> Result<Trajectory> {
    let n = spec.modes.len();
    if initial.mean.len() != n || initial.covariance.shape() != (2 * n, 2 * n) {
        return Err(Error::Invalid("initial state does not match the number of modes".into()));
    }
    if !(config.dt > 0.0) || !(config.t_end > config.t_start) {
        return Err(Error::Invalid("time span and step must be positive".into()));
    }
    let (gen, fastest) = build_generator(spec, config.include_cr)?;
    if fastest > 0.0 {
        let limit = 1.0 / (20.0 * fastest);
        if config.dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepSize { dt: config.dt, limit });
        }
    }

    let mut m = DVector::<C64>::zeros(2 * n);
    for (i, a) in initial.mean.iter().enumerate() {
        m[i] = *a;
        m[n + i] = a.conj();
    }
    let mut v = initial.covariance.clone();
    let steps = ((config.t_end - config.t_start) / config.dt).round() as usize;
    let every = config.sample_every.max(1);

    let mut traj = Trajectory {
        labels: spec.labels(),
        times: vec![config.t_start],
        means: vec![initial.mean.clone()],
        covariances: vec![v.clone()],
    };
    let d = &gen.diffusion;
    let f = |a: &DMatrix<C64>, aq: &DMatrix<f64>, m: &DVector<C64>, v: &DMatrix<f64>| {
        (a * m, aq * v + v * aq.transpose() + d)
    };
    let h = config.dt;
    for step in 0..steps {
        let t = config.t_start + step as f64 * h;
        let a0 = gen.drift(t);
        let a1 = gen.drift(t + h / 2.0);
        let a2 = gen.drift(t + h);
        let (q0, q1, q2) = (gen.quad(&a0), gen.quad(&a1), gen.quad(&a2));
        let (k1m, k1v) = f(&a0, &q0, &m, &v);
        let (k2m, k2v) = f(&a1, &q1, &(&m + &k1m * C64::new(h / 2.0, 0.0)), &(&v + &k1v * (h / 2.0)));
        let (k3m, k3v) = f(&a1, &q1, &(&m + &k2m * C64::new(h / 2.0, 0.0)), &(&v + &k2v * (h / 2.0)));
        let (k4m, k4v) = f(&a2, &q2, &(&m + &k3m * C64::new(h, 0.0)), &(&v + &k3v * h));
        m += (k1m + k2m * C64::new(2.0, 0.0) + k3m * C64::new(2.0, 0.0) + k4m) * C64::new(h / 6.0, 0.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        let t_next = t + h;
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || !v.iter().all(|x| x.is_finite()) {
            return Err(Error::BlowUp { t: t_next });
        }
        if (step + 1) % every == 0 || step + 1 == steps {
            traj.times.push(t_next);
            traj.means.push((0..n).map(|i| m[i]).collect());
            traj.covariances.push((&v + v.transpose()) * 0.5);
        }
    }
    Ok(traj)
}
