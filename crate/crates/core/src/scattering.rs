//! Scattering matrices, gain curves, bandwidth, stability and gain-bandwidth sweeps.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::StateSpaceModel;
use crate::error::{Error, Result};
use crate::ops::quadrature_transform_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Component {
    /// Annihilation component `c`.
    Field,
    /// Creation component `c†`.
    Conjugate,
    X,
    P,
}

impl Component {
    pub fn is_quadrature(self) -> bool {
        matches!(self, Component::X | Component::P)
    }
}

/// A channel and component, written `d1`, `d1+`, `d1:X` or `d1:P`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChannelRef {
    pub channel: String,
    pub component: Component,
}

impl ChannelRef {
    pub fn new(channel: &str, component: Component) -> Self {
        Self {
            channel: channel.to_string(),
            component,
        }
    }

    pub fn field(channel: &str) -> Self {
        Self::new(channel, Component::Field)
    }
    pub fn conj(channel: &str) -> Self {
        Self::new(channel, Component::Conjugate)
    }
    pub fn x(channel: &str) -> Self {
        Self::new(channel, Component::X)
    }
    pub fn p(channel: &str) -> Self {
        Self::new(channel, Component::P)
    }

    /// Row/column of this reference in the doubled or quadrature channel basis.
    pub fn index(&self, model: &StateSpaceModel) -> Result<usize> {
        let k = model.channel_index(&self.channel)?;
        let m = model.n_channels();
        Ok(match self.component {
            Component::Field => k,
            Component::Conjugate => m + k,
            Component::X => 2 * k,
            Component::P => 2 * k + 1,
        })
    }
}

impl std::fmt::Display for ChannelRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.component {
            Component::Field => write!(f, "{}", self.channel),
            Component::Conjugate => write!(f, "{}+", self.channel),
            Component::X => write!(f, "{}:X", self.channel),
            Component::P => write!(f, "{}:P", self.channel),
        }
    }
}

impl FromStr for ChannelRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Invalid(format!("malformed channel reference '{s}'"));
        if let Some((name, comp)) = s.split_once(':') {
            let component = match comp {
                "X" | "x" => Component::X,
                "P" | "p" => Component::P,
                _ => return Err(bad()),
            };
            if name.is_empty() {
                return Err(bad());
            }
            return Ok(Self::new(name, component));
        }
        if let Some(name) = s.strip_suffix('+') {
            if name.is_empty() {
                return Err(bad());
            }
            return Ok(Self::conj(name));
        }
        if s.is_empty() {
            return Err(bad());
        }
        Ok(Self::field(s))
    }
}

/// `S(ω) = C(−iω − A)⁻¹B − I` over the doubled channel vector.
pub fn scattering_matrix(model: &StateSpaceModel, omega: f64) -> Result<DMatrix<C64>> {
    let n = model.drift.nrows();
    let m2 = model.output.nrows();
    let mut lhs = -model.drift.clone();
    for i in 0..n {
        lhs[(i, i)] -= C64::new(0.0, omega);
    }
    let scale = lhs.iter().fold(0.0_f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
    let lu = lhs.lu();
    let udiag_min = lu.u().diagonal().iter().fold(f64::INFINITY, |a, z| a.min(z.norm()));
    if udiag_min <= 1e-14 * scale {
        return Err(Error::PoleOnRealAxis { omega });
    }
    let x = lu.solve(&model.input).ok_or(Error::PoleOnRealAxis { omega })?;
    let mut s = &model.output * x;
    for i in 0..m2 {
        s[(i, i)] -= C64::new(1.0, 0.0);
    }
    Ok(s)
}

/// Quadrature-basis image `T S T†` of a doubled-basis scattering matrix; real at `ω = 0`, `S_q(−ω) = S_q(ω)*`.
pub fn quadrature_scattering(s: &DMatrix<C64>) -> DMatrix<C64> {
    let t = quadrature_transform_matrix(s.nrows() / 2);
    &t * s * t.adjoint()
}

#[derive(Debug, Clone)]
pub struct ScatteringResult {
    pub omega: Vec<f64>,
    pub matrices: Vec<DMatrix<C64>>,
    pub channels: Vec<String>,
}

impl ScatteringResult {
    pub fn quadrature_matrices(&self) -> Vec<DMatrix<C64>> {
        self.matrices.iter().map(quadrature_scattering).collect()
    }

    /// Doubled-basis labels: channel names, then their conjugates with a `+` suffix.
    pub fn doubled_labels(&self) -> Vec<String> {
        self.channels
            .iter()
            .cloned()
            .chain(self.channels.iter().map(|c| format!("{c}+")))
            .collect()
    }

    /// `omega_rad_s`, then `re_S_<out>_<in>` for every element row-major, then the matching `im_` columns.
    pub fn to_csv(&self) -> String {
        let labels = self.doubled_labels();
        let mut s = String::from("omega_rad_s");
        for part in ["re", "im"] {
            for o in &labels {
                for i in &labels {
                    let _ = write!(s, ",{part}_S_{o}_{i}");
                }
            }
        }
        s.push('\n');
        for (w, m) in self.omega.iter().zip(&self.matrices) {
            let _ = write!(s, "{w:e}");
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let _ = write!(s, ",{:e}", m[(r, c)].re);
                }
            }
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let _ = write!(s, ",{:e}", m[(r, c)].im);
                }
            }
            s.push('\n');
        }
        s
    }
}

pub fn scattering_sweep(model: &StateSpaceModel, omega: &[f64]) -> Result<ScatteringResult> {
    let matrices = omega
        .par_iter()
        .map(|&w| scattering_matrix(model, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScatteringResult {
        omega: omega.to_vec(),
        matrices,
        channels: model.channels.iter().map(|c| c.label.clone()).collect(),
    })
}

/// A resolved input→output element in one basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Path {
    pub from: usize,
    pub to: usize,
    pub quadrature: bool,
}

impl Path {
    pub fn resolve(model: &StateSpaceModel, from: &ChannelRef, to: &ChannelRef) -> Result<Self> {
        let (qf, qt) = (from.component.is_quadrature(), to.component.is_quadrature());
        if qf != qt {
            return Err(Error::MixedBasis(format!(
                "{from} -> {to} mixes quadrature and field components"
            )));
        }
        Ok(Self {
            from: from.index(model)?,
            to: to.index(model)?,
            quadrature: qf,
        })
    }

    pub fn amplitude(&self, model: &StateSpaceModel, omega: f64) -> Result<C64> {
        let s = scattering_matrix(model, omega)?;
        Ok(if self.quadrature {
            quadrature_scattering(&s)[(self.to, self.from)]
        } else {
            s[(self.to, self.from)]
        })
    }

    pub fn gain(&self, model: &StateSpaceModel, omega: f64) -> Result<f64> {
        Ok(self.amplitude(model, omega)?.norm_sqr())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainCurve {
    pub omega: Vec<f64>,
    pub gain: Vec<f64>,
}

pub fn to_db(g: f64) -> f64 {
    10.0 * g.log10()
}

impl GainCurve {
    /// `omega_rad_s,gain_db`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_rad_s,gain_db\n");
        for (w, g) in self.omega.iter().zip(&self.gain) {
            let _ = writeln!(s, "{w:e},{:e}", to_db(*g));
        }
        s
    }

    pub fn peak(&self) -> (f64, f64) {
        let (i, g) = self
            .gain
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, g)| if *g > acc.1 { (i, *g) } else { acc });
        (self.omega[i], g)
    }
}

/// `|S_{to,from}(ω)|²` on a grid.
pub fn power_gain(model: &StateSpaceModel, from: &ChannelRef, to: &ChannelRef, omega: &[f64]) -> Result<GainCurve> {
    if omega.is_empty() {
        return Err(Error::Invalid("empty frequency grid".into()));
    }
    let path = Path::resolve(model, from, to)?;
    let gain = omega
        .par_iter()
        .map(|&w| path.gain(model, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(GainCurve {
        omega: omega.to_vec(),
        gain,
    })
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Default analysis grid: 2001 points over `ω' = 2ω/κ ∈ [−5, 5]`.
pub fn default_grid(kappa: f64) -> Vec<f64> {
    linspace(-2.5 * kappa, 2.5 * kappa, 2001)
}

fn golden_max(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

fn bisect_level(f: &dyn Fn(f64) -> Result<f64>, mut inside: f64, mut outside: f64, level: f64) -> Result<f64> {
    let scale = inside.abs().max(outside.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if (outside - inside).abs() <= 1e-14 * scale {
            break;
        }
        let mid = 0.5 * (inside + outside);
        if f(mid)? >= level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(0.5 * (inside + outside))
}

/// Full width at half maximum around the global peak, with grid-bracketed bisection on `eval`.
pub fn bandwidth(curve: &GainCurve, eval: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let w = &curve.omega;
    let g = &curve.gain;
    let n = w.len();
    if n < 2 {
        return Err(Error::Invalid("bandwidth needs at least two grid points".into()));
    }
    let lo = w[0];
    let hi = w[n - 1];
    let (i, gmax) = g
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    if !gmax.is_finite() || gmax <= 0.0 {
        return Err(Error::Numeric("gain curve has no finite positive maximum".into()));
    }
    let a = w[i.saturating_sub(1)];
    let b = w[(i + 1).min(n - 1)];
    let (wp, gp) = if a < b { golden_max(eval, a, b)? } else { (w[i], gmax) };
    let (wp, peak) = if gp > gmax { (wp, gp) } else { (w[i], gmax) };
    let half = peak / 2.0;

    let right = (i + 1..n).find(|&j| g[j] < half).ok_or(Error::GridTooNarrow { lo, hi })?;
    let left = (0..i).rev().find(|&j| g[j] < half).ok_or(Error::GridTooNarrow { lo, hi })?;
    let inside_r = if w[right - 1] > wp { w[right - 1] } else { wp };
    let inside_l = if w[left + 1] < wp { w[left + 1] } else { wp };
    let r = bisect_level(eval, inside_r, w[right], half)?;
    let l = bisect_level(eval, inside_l, w[left], half)?;
    Ok(r - l)
}

/// FWHM of the gain along a path, evaluating the model directly during refinement.
pub fn path_bandwidth(model: &StateSpaceModel, from: &ChannelRef, to: &ChannelRef, omega: &[f64]) -> Result<f64> {
    let curve = power_gain(model, from, to, omega)?;
    let path = Path::resolve(model, from, to)?;
    bandwidth(&curve, &|w| path.gain(model, w))
}

/// Largest real part of the quadrature drift eigenvalues; negative means stable.
pub fn stability_margin(model: &StateSpaceModel) -> f64 {
    model.stability_margin()
}

fn require_stable(model: &StateSpaceModel) -> Result<()> {
    let m = model.stability_margin();
    if m >= 0.0 {
        return Err(Error::Unstable { max_re: m });
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct GbwRow {
    pub param: f64,
    pub g0: f64,
    pub bandwidth: f64,
    pub gbw: f64,
    pub stable: bool,
    pub note: Option<String>,
}

/// Gain-bandwidth table over a parameter list; rows keep input order and failures are flagged.
pub fn gbw_sweep<F>(params: &[f64], builder: F, from: &ChannelRef, to: &ChannelRef, omega: &[f64]) -> Vec<GbwRow>
where
    F: Fn(f64) -> Result<StateSpaceModel> + Sync,
{
    params
        .par_iter()
        .map(|&p| {
            let run = || -> Result<(f64, f64)> {
                let model = builder(p)?;
                require_stable(&model)?;
                let path = Path::resolve(&model, from, to)?;
                let g0 = path.gain(&model, 0.0)?;
                let bw = path_bandwidth(&model, from, to, omega)?;
                Ok((g0, bw))
            };
            match run() {
                Ok((g0, bw)) => GbwRow {
                    param: p,
                    g0,
                    bandwidth: bw,
                    gbw: g0.sqrt() * bw,
                    stable: true,
                    note: None,
                },
                Err(e) => GbwRow {
                    param: p,
                    g0: f64::NAN,
                    bandwidth: f64::NAN,
                    gbw: f64::NAN,
                    stable: !matches!(e, Error::Unstable { .. }),
                    note: Some(e.to_string()),
                },
            }
        })
        .collect()
}

pub fn gbw_csv(rows: &[GbwRow]) -> String {
    let mut s = String::from("param,g0,g0_db,bandwidth_rad_s,gbw,stable\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e},{}",
            r.param,
            r.g0,
            to_db(r.g0),
            r.bandwidth,
            r.gbw,
            r.stable
        );
    }
    s
}

/// Number of strict interior local maxima.
pub fn count_local_maxima(values: &[f64]) -> usize {
    let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tol = 1e-13 * scale;
    let mut count = 0;
    let mut i = 1;
    while i + 1 < values.len() {
        if values[i] > values[i - 1] + tol {
            // walk across a plateau
            let mut j = i;
            while j + 1 < values.len() && (values[j + 1] - values[i]).abs() <= tol {
                j += 1;
            }
            if j + 1 < values.len() && values[j + 1] < values[i] - tol {
                count += 1;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplittingThreshold {
    pub eta_numeric: f64,
    pub eta_closed_form: f64,
}

/// Locates the asymmetry `η` at which the response along a path turns from one peak into two.
pub fn mode_splitting_threshold<F>(
    cooperativity: f64,
    builder: F,
    from: &ChannelRef,
    to: &ChannelRef,
    omega: &[f64],
) -> Result<SplittingThreshold>
where
    F: Fn(f64) -> Result<StateSpaceModel>,
{
    if !(cooperativity > 1.0) {
        return Err(Error::NoSplittingRegime(cooperativity));
    }
    let peaks = |eta: f64| -> Result<usize> {
        let model = builder(eta)?;
        let curve = power_gain(&model, from, to, omega)?;
        Ok(count_local_maxima(&curve.gain))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let (p_lo, p_hi) = (peaks(lo)?, peaks(hi)?);
    if p_lo == p_hi {
        return Err(Error::Numeric(format!(
            "peak count does not change over eta in [0, 1] (both {p_lo})"
        )));
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if peaks(mid)? == p_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SplittingThreshold {
        eta_numeric: 0.5 * (lo + hi),
        eta_closed_form: (1.0 - 1.0 / cooperativity).sqrt(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplifierReport {
    pub g0: f64,
    pub gain_curve: GainCurve,
    pub bandwidth: f64,
    pub gbw: f64,
    pub reflection_curve: GainCurve,
    pub reverse_gain_curve: GainCurve,
    pub stability_margin: f64,
}

/// Swaps the channels of a path while keeping each side's component.
pub fn reverse_path(from: &ChannelRef, to: &ChannelRef) -> (ChannelRef, ChannelRef) {
    (
        ChannelRef::new(&to.channel, from.component),
        ChannelRef::new(&from.channel, to.component),
    )
}

pub fn amplifier_report(
    model: &StateSpaceModel,
    from: &ChannelRef,
    to: &ChannelRef,
    omega: &[f64],
) -> Result<AmplifierReport> {
    require_stable(model)?;
    let path = Path::resolve(model, from, to)?;
    let gain_curve = power_gain(model, from, to, omega)?;
    let bw = bandwidth(&gain_curve, &|w| path.gain(model, w))?;
    let g0 = path.gain(model, 0.0)?;
    let reflection_curve = power_gain(model, from, from, omega)?;
    let (rf, rt) = reverse_path(from, to);
    let reverse_gain_curve = power_gain(model, &rf, &rt, omega)?;
    Ok(AmplifierReport {
        g0,
        gain_curve,
        bandwidth: bw,
        gbw: g0.sqrt() * bw,
        reflection_curve,
        reverse_gain_curve,
        stability_margin: model.stability_margin(),
    })
}
