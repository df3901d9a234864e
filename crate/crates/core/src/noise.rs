//! Symmetrized output spectra, added noise and squeezing.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{build_state_space, StateSpaceModel};
use crate::error::{Error, Result};
use crate::presets;
use crate::scattering::{quadrature_scattering, scattering_matrix, ChannelRef, Path};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    /// Quanta, vacuum = 1/2.
    pub values: Vec<f64>,
}

impl Spectrum {
    /// `omega_rad_s,<column>`.
    pub fn to_csv(&self, column: &str) -> String {
        let mut s = format!("omega_rad_s,{column}\n");
        for (w, v) in self.omega.iter().zip(&self.values) {
            let _ = writeln!(s, "{w:e},{v:e}");
        }
        s
    }
}

fn require_stable(model: &StateSpaceModel) -> Result<()> {
    let m = model.stability_margin();
    if m >= 0.0 {
        return Err(Error::Unstable { max_re: m });
    }
    Ok(())
}

/// Input noise `n + 1/2` for each column of the scattering matrix in the given basis.
fn noise_weights(model: &StateSpaceModel, quadrature: bool) -> Vec<f64> {
    if quadrature {
        model
            .channels
            .iter()
            .flat_map(|c| [c.n_thermal + 0.5, c.n_thermal + 0.5])
            .collect()
    } else {
        model.input_noise()
    }
}

fn output_row(model: &StateSpaceModel, out: usize, quadrature: bool, omega: f64) -> Result<Vec<f64>> {
    let s = scattering_matrix(model, omega)?;
    Ok(if quadrature {
        let q = quadrature_scattering(&s);
        q.row(out).iter().map(|z| z.norm_sqr()).collect()
    } else {
        s.row(out).iter().map(|z| z.norm_sqr()).collect()
    })
}

/// Symmetrized spectrum of one output component, summed over every input bath.
pub fn output_spectrum(model: &StateSpaceModel, out: &ChannelRef, omega: &[f64]) -> Result<Spectrum> {
    require_stable(model)?;
    let quadrature = out.component.is_quadrature();
    let k = out.index(model)?;
    let weights = noise_weights(model, quadrature);
    let values = omega
        .par_iter()
        .map(|&w| {
            let row = output_row(model, k, quadrature, w)?;
            Ok(row.iter().zip(&weights).map(|(g, n)| g * n).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Spectrum {
        omega: omega.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AddedNoise {
    pub omega: Vec<f64>,
    pub n_add: Vec<f64>,
    pub gain: Vec<f64>,
    pub warnings: Vec<String>,
}

impl AddedNoise {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_rad_s,n_add_quanta\n");
        for (w, v) in self.omega.iter().zip(&self.n_add) {
            let _ = writeln!(s, "{w:e},{v:e}");
        }
        s
    }
}

/// Noise at the output referred back to the input, excluding the signal input's own fluctuations.
pub fn added_noise(model: &StateSpaceModel, from: &ChannelRef, to: &ChannelRef, omega: &[f64]) -> Result<AddedNoise> {
    require_stable(model)?;
    let path = Path::resolve(model, from, to)?;
    let weights = noise_weights(model, path.quadrature);
    let rows = omega
        .par_iter()
        .map(|&w| output_row(model, path.to, path.quadrature, w))
        .collect::<Result<Vec<_>>>()?;
    let mut out = AddedNoise {
        omega: Vec::new(),
        n_add: Vec::new(),
        gain: Vec::new(),
        warnings: Vec::new(),
    };
    for (w, row) in omega.iter().zip(rows) {
        let g = row[path.from];
        if g <= 1e-24 {
            out.warnings.push(format!("zero gain at omega = {w:e}; point omitted"));
            continue;
        }
        let noise: f64 = row
            .iter()
            .zip(&weights)
            .enumerate()
            .filter(|(l, _)| *l != path.from)
            .map(|(_, (x, n))| x * n)
            .sum();
        out.omega.push(*w);
        out.n_add.push(noise / g);
        out.gain.push(g);
    }
    Ok(out)
}

/// Intracavity quadrature spectrum `[G D Gᵀ]_kk` with `G = (−iω − A_q)⁻¹`; integrates to `V_kk` over `dω/2π`.
pub fn intracavity_spectrum(model: &StateSpaceModel, k: usize, omega: f64) -> Result<f64> {
    let n = model.drift_q.nrows();
    let mut lhs = model.drift_q.map(|x| C64::new(-x, 0.0));
    for i in 0..n {
        lhs[(i, i)] -= C64::new(0.0, omega);
    }
    let g = lhs
        .try_inverse()
        .ok_or(Error::PoleOnRealAxis { omega })?;
    let d = model.diffusion.map(|x| C64::new(x, 0.0));
    let s: DMatrix<C64> = &g * d * g.adjoint();
    Ok(s[(k, k)].re)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezingReport {
    pub omega: Vec<f64>,
    pub variance: Vec<f64>,
    pub min_variance: f64,
    /// Full width over which the variance stays within 3 dB of its on-resonance value.
    pub bandwidth: f64,
    pub dpa_bandwidth: f64,
    pub ratio: f64,
    /// Full width at half depth of `1/2 − variance`.
    pub depth_bandwidth: f64,
    pub dpa_depth_bandwidth: f64,
    pub depth_ratio: f64,
    /// `G^{1/4}/√2`.
    pub expected_ratio: f64,
}

/// Full width of the region around `ω = 0` where `f(ω) ≤ level`.
fn width_below(eval: &dyn Fn(f64) -> Result<f64>, level: f64, omega: &[f64], values: &[f64]) -> Result<f64> {
    let lo = omega[0];
    let hi = omega[omega.len() - 1];
    let i0 = omega
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, w)| if w.abs() < acc.1 { (i, w.abs()) } else { acc })
        .0;
    let bisect = |mut inside: f64, mut outside: f64| -> Result<f64> {
        for _ in 0..200 {
            if (outside - inside).abs() <= 1e-14 * inside.abs().max(outside.abs()) {
                break;
            }
            let mid = 0.5 * (inside + outside);
            if eval(mid)? <= level {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    };
    let r = (i0 + 1..omega.len())
        .find(|&j| values[j] > level)
        .ok_or(Error::GridTooNarrow { lo, hi })?;
    let l = (0..i0)
        .rev()
        .find(|&j| values[j] > level)
        .ok_or(Error::GridTooNarrow { lo, hi })?;
    let right = bisect(omega[r - 1].max(0.0), omega[r])?;
    let left = bisect(omega[l + 1].min(0.0), omega[l])?;
    Ok(right - left)
}

/// Spectrum, on-resonance variance, 3 dB width and half-depth width.
fn squeezing_widths(model: &StateSpaceModel, squeezed: &ChannelRef, omega: &[f64]) -> Result<(Spectrum, f64, f64, f64)> {
    let spec = output_spectrum(model, squeezed, omega)?;
    let k = squeezed.index(model)?;
    let quadrature = squeezed.component.is_quadrature();
    let weights = noise_weights(model, quadrature);
    let eval = |w: f64| -> Result<f64> {
        let row = output_row(model, k, quadrature, w)?;
        Ok(row.iter().zip(&weights).map(|(g, n)| g * n).sum())
    };
    let v0 = eval(0.0)?;
    if v0 >= 0.5 {
        return Ok((spec, v0, 0.0, 0.0));
    }
    let bw = width_below(&eval, 2.0 * v0, &spec.omega, &spec.values)?;
    let depth = width_below(&eval, 0.5 * (0.5 + v0), &spec.omega, &spec.values)?;
    Ok((spec, v0, bw, depth))
}

/// Squeezing spectrum of a quadrature output and its bandwidth relative to a single-mode amplifier of equal gain.
pub fn squeezing_analysis(
    model: &StateSpaceModel,
    squeezed: &ChannelRef,
    gain: f64,
    kappa: f64,
    omega: &[f64],
) -> Result<SqueezingReport> {
    if !squeezed.component.is_quadrature() {
        return Err(Error::MixedBasis("squeezing is defined on quadrature outputs".into()));
    }
    let (spec, v0, bw, depth) = squeezing_widths(model, squeezed, omega)?;
    let dpa = build_state_space(&presets::dpa_with_gain(gain, kappa)?);
    let (_, _, dpa_bw, dpa_depth) = squeezing_widths(&dpa, &ChannelRef::p("a"), omega)?;
    let ratio = if dpa_bw > 0.0 { bw / dpa_bw } else { f64::NAN };
    let depth_ratio = if dpa_depth > 0.0 { depth / dpa_depth } else { f64::NAN };
    Ok(SqueezingReport {
        omega: spec.omega,
        variance: spec.values,
        min_variance: v0,
        bandwidth: bw,
        dpa_bandwidth: dpa_bw,
        ratio,
        depth_bandwidth: depth,
        dpa_depth_bandwidth: dpa_depth,
        depth_ratio,
        expected_ratio: gain.powf(0.25) / std::f64::consts::SQRT_2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{EffectiveSystem, ModeBath};
    use crate::scattering::linspace;

    fn cavity(n: f64) -> StateSpaceModel {
        let mut b = ModeBath::port(1.0);
        b.n_port = n;
        build_state_space(&EffectiveSystem::new(vec!["a".into()], DMatrix::zeros(2, 2), vec![b]))
    }

    #[test]
    fn empty_cavity_spectra() {
        let grid = linspace(-3.0, 3.0, 31);
        for (n, expect) in [(0.0, 0.5), (1.0, 1.5)] {
            let m = cavity(n);
            for r in [ChannelRef::field("a"), ChannelRef::x("a"), ChannelRef::p("a")] {
                let s = output_spectrum(&m, &r, &grid).unwrap();
                assert!(s.values.iter().all(|v| (v - expect).abs() < 1e-13), "{r}");
            }
        }
    }

    #[test]
    fn passive_reflection_adds_nothing() {
        let m = cavity(0.0);
        let a = added_noise(&m, &ChannelRef::field("a"), &ChannelRef::field("a"), &[0.0, 0.5]).unwrap();
        assert!(a.n_add.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn dpa_squeezed_variance_matches_spectrum_integral() {
        let sys = presets::dpa(1.0, 1.0 / 8.0);
        let m = build_state_space(&sys);
        let v = crate::dynamics::steady_covariance(&m).unwrap();
        assert!(v[(1, 1)] < 0.5);
        // Simpson integration of the intracavity spectrum over a wide window
        let n = 200_001;
        let w = 4000.0;
        let h = 2.0 * w / (n - 1) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = -w + i as f64 * h;
            let c = if i == 0 || i == n - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += c * intracavity_spectrum(&m, 1, x).unwrap();
        }
        let integral = acc * h / 3.0 / (2.0 * std::f64::consts::PI);
        // Lorentzian tails beyond ±w carry ~ D/(π w)
        let tail = m.diffusion[(1, 1)] / (std::f64::consts::PI * w);
        assert!((integral + tail - v[(1, 1)]).abs() < 1e-6, "{integral} {} {}", v[(1, 1)], tail);
    }
}
