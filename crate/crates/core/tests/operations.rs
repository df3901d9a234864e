use std::f64::consts::SQRT_2;
use std::path::PathBuf;

use num_complex::Complex64 as C64;

use paramnet::direction::{
    build_balanced_bogoliubov_amp, build_balanced_system, isolation, BalanceSpec, ISOLATION_SENTINEL_DB,
};
use paramnet::dynamics::{build_state_space, integrate_time_domain, steady_covariance, InitialState, StateSpaceModel, TimeDomainConfig};
use paramnet::frames::{compile_effective, quadrature_transform, EffectiveSystem};
use paramnet::netmodel::{parse_network, Frame, Mode, NetworkSpec, ParametricDrive};
use paramnet::noise::{added_noise, output_spectrum, squeezing_analysis};
use paramnet::ops::{to_quadrature_real, QuadraticHamiltonian};
use paramnet::presets::{
    dissipative_amp, dpa, frequency_conversion, gc_amp, gc_amp_matched, single_port_cavity,
};
use paramnet::scattering::{
    gbw_sweep, linspace, mode_splitting_threshold, path_bandwidth, scattering_matrix, ChannelRef, Path,
};

fn fixture(name: &str) -> NetworkSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../networks").join(name);
    parse_network(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn model_of(spec: &NetworkSpec) -> StateSpaceModel {
    build_state_space(&compile_effective(spec).unwrap().0)
}

fn ch(s: &str) -> ChannelRef {
    s.parse().unwrap()
}

fn gain(model: &StateSpaceModel, from: &str, to: &str, w: f64) -> f64 {
    Path::resolve(model, &ch(from), &ch(to)).unwrap().gain(model, w).unwrap()
}

#[test]
fn lab_frame_dissipative_amp_fixture_compiles_to_rotating_preset() {
    let spec = fixture("dissipative_amp.json");
    assert_eq!(spec.modes.len(), 3);
    let (lab, _) = compile_effective(&spec).unwrap();
    let (rot, _) = compile_effective(&dissipative_amp(5.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
    let d = (&lab.hamiltonian - &rot.hamiltonian).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(d < 1e-12, "{d}");
    let m = build_state_space(&lab);
    assert!((gain(&m, "d1", "d1", 0.0) - 81.0).abs() < 1e-9);
}

#[test]
fn dissipative_gain_values() {
    let m = model_of(&dissipative_amp(3.0, 1.0, 1.0, 1.0).unwrap());
    assert!((gain(&m, "d1", "d1", 0.0) - 25.0).abs() < 1e-10);
    assert!((gain(&m, "d1", "d2+", 0.0) - 25.0).abs() < 0.5 * 25.0);
    let m = model_of(&dissipative_amp(0.5, 1.0, 1.0, 1.0).unwrap());
    assert!(gain(&m, "d1", "d1", 0.0) < 1e-24);
}

#[test]
fn full_dissipative_curve_matches_closed_form() {
    let c = 5.0_f64;
    let g0 = (2.0 * c - 1.0).powi(2);
    let m = model_of(&dissipative_amp(c, 1.0, 1.0, 1.0).unwrap());
    for wp in linspace(-5.0, 5.0, 101) {
        let w2 = wp * wp;
        let closed = ((g0.sqrt() - w2).powi(2) + w2 * (1.0 + w2).powi(2)) / (1.0 + w2).powi(3);
        let g = gain(&m, "d1", "d1", wp / 2.0);
        assert!((g / closed - 1.0).abs() < 1e-9, "{wp}: {g} vs {closed}");
    }
}

#[test]
fn stability_examples() {
    assert!((build_state_space(&single_port_cavity(0.6)).stability_margin() + 0.3).abs() < 1e-14);
    assert!(build_state_space(&dpa(1.0, 0.25)).stability_margin().abs() < 1e-14);
    for c in [1.0, 2.0, 5.0, 10.0, 30.0, 100.0] {
        assert!(model_of(&dissipative_amp(c, 1.0, 1.0, 1.0).unwrap()).stability_margin() < 0.0);
    }
}

#[test]
fn lossless_cavity_reflects_everything() {
    let m = build_state_space(&single_port_cavity(1.0));
    for w in linspace(-10.0, 10.0, 41) {
        assert!((gain(&m, "a", "a", w) - 1.0).abs() < 1e-14);
    }
    assert!((scattering_matrix(&m, 0.0).unwrap()[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn splitting_threshold_examples() {
    let t = |c: f64| {
        let grid = linspace(-3.0 * c.sqrt(), 3.0 * c.sqrt(), 6001);
        let builder = |eta: f64| Ok(model_of(&dissipative_amp(c, eta, 1.0, 1.0)?));
        mode_splitting_threshold(c, builder, &ch("d1"), &ch("c"), &grid).unwrap()
    };
    assert!((t(1.01).eta_numeric - 0.0995).abs() < 1e-3);
    let large: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|c| t(*c).eta_numeric).collect();
    assert!(large.windows(2).all(|p| p[1] > p[0]) && large[2] < 1.0, "{large:?}");
    for (c, eta) in [10.0_f64, 100.0, 1000.0].iter().zip(&large) {
        assert!((eta - (1.0 - 1.0 / c).sqrt()).abs() < 1e-3, "{large:?}");
    }
}

#[test]
fn gbw_tables() {
    let kappa = 1.0;
    let dpa_rows = gbw_sweep(
        &[0.24, 0.245, 0.249],
        |l| Ok(build_state_space(&dpa(kappa, l))),
        &ch("a:X"),
        &ch("a:X"),
        &linspace(-0.1, 0.1, 8001),
    );
    assert!(dpa_rows.iter().all(|r| r.stable && r.note.is_none()));
    let span = 10.0 * (dpa_rows[2].g0 / dpa_rows[0].g0).log10();
    let (lo, hi) = dpa_rows.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), r| (a.min(r.gbw), b.max(r.gbw)));
    assert!(span >= 20.0 && hi / lo - 1.0 < 0.05, "{dpa_rows:?}");

    let gc_rows = gbw_sweep(
        &[1.0, 10.0, 100.0],
        |c1| Ok(model_of(&gc_amp(c1, c1 + 1.0, kappa)?)),
        &ch("d1:X"),
        &ch("d2:P"),
        &linspace(-5.0, 5.0, 2001),
    );
    for r in &gc_rows {
        assert!((r.bandwidth / (SQRT_2 * kappa) - 1.0).abs() < 0.01, "{r:?}");
    }

    let unstable = gbw_sweep(&[0.3], |l| Ok(build_state_space(&dpa(kappa, l))), &ch("a:X"), &ch("a:X"), &[-1.0, 1.0]);
    assert!(!unstable[0].stable && unstable[0].note.is_some());
}

#[test]
fn dissipative_bandwidth_across_cooperativity() {
    let grid = linspace(-5.0, 5.0, 4001);
    let mut rows = Vec::new();
    for c in [2.0, 5.0, 10.0, 50.0] {
        let m = model_of(&dissipative_amp(c, 1.0, 1.0, 1.0).unwrap());
        rows.push((c, gain(&m, "d1", "d1", 0.0), path_bandwidth(&m, &ch("d1"), &ch("d1"), &grid).unwrap()));
    }
    let span = 10.0 * (rows[3].1 / rows[0].1).log10();
    assert!(span > 30.0);
    // approaches κ/2 from below, crossing it between C = 10 and 50
    for (row, pinned) in rows.iter().zip([0.463789, 0.489334, 0.499334]) {
        assert!((row.2 - pinned).abs() < 1e-5, "{rows:?}");
    }
    assert!(rows[3].2 >= 0.5 && rows[3].2 <= 2.0, "{rows:?}");
}

#[test]
fn added_noise_examples() {
    let m = model_of(&dissipative_amp(10.5, 1.0, 1.0, 1.0).unwrap());
    let n = added_noise(&m, &ch("d1"), &ch("d1"), &[0.0]).unwrap();
    assert!((n.gain[0] - 400.0).abs() < 1e-8);
    assert!((n.n_add[0] - 0.6).abs() < 1e-2);

    let mut spec = dissipative_amp(10.5, 1.0, 1.0, 1.0).unwrap();
    spec.modes[1].n_thermal_port = 1.0;
    let n = added_noise(&model_of(&spec), &ch("d1"), &ch("d1"), &[0.0]).unwrap();
    assert!((n.n_add[0] - 1.5).abs() < 5.0 / 20.0);

    for g in [100.0, 1e3, 1e4] {
        let m = model_of(&gc_amp_matched(g, 1.0).unwrap());
        let n = added_noise(&m, &ch("d1:X"), &ch("d2:P"), &[0.0]).unwrap();
        assert!((n.gain[0] / g - 1.0).abs() < 1e-9);
        assert!(n.n_add[0] < 1e-12, "{}", n.n_add[0]);
    }
}

#[test]
fn squeezing_examples() {
    let m = model_of(&gc_amp_matched(100.0, 1.0).unwrap());
    let far = output_spectrum(&m, &ch("d2:X"), &[1e4, -1e4]).unwrap();
    assert!(far.values.iter().all(|v| (v - 0.5).abs() < 1e-6));
    for c1 in [1.0, 2.0, 5.0, 10.0, 20.0] {
        let m = model_of(&gc_amp(c1, c1 + 1.0, 1.0).unwrap());
        let v = output_spectrum(&m, &ch("d2:X"), &[0.0]).unwrap();
        assert!(v.values[0] < 0.5);
    }
    let r = squeezing_analysis(&m, &ch("d2:X"), 100.0, 1.0, &linspace(-50.0, 50.0, 2001)).unwrap();
    assert!((r.ratio / r.expected_ratio - 1.0).abs() < 0.1, "{}", r.ratio);
}

#[test]
fn isolation_examples() {
    let m = model_of(&build_balanced_bogoliubov_amp(1.0, 5.0, 1.0).unwrap());
    let iso = isolation(&m, &ch("d1:X"), &ch("d2:P"), &[0.0]).unwrap();
    assert_eq!(iso.isolation_db[0], ISOLATION_SENTINEL_DB);

    let b = BalanceSpec::two_mode(1.0, 1.0, 1.0, -std::f64::consts::FRAC_PI_2, 0.3, 0.6);
    let m = build_state_space(&build_balanced_system(&b).system);
    let iso = isolation(&m, &ch("a"), &ch("b+"), &[0.0, 0.2]).unwrap();
    for i in 0..2 {
        assert!(iso.isolation_db[i].is_finite() && iso.isolation_db[i] < ISOLATION_SENTINEL_DB);
        assert!(iso.forward[i] > 1.0 && iso.reverse[i] < iso.forward[i]);
    }

    let m = model_of(&frequency_conversion(1.0, 1.0, 0.5, 0.0));
    let iso = isolation(&m, &ch("a"), &ch("b"), &linspace(-2.0, 2.0, 9)).unwrap();
    assert!(iso.isolation_db.iter().all(|d| d.abs() < 1e-10));
}

#[test]
fn two_tone_drive_gives_gain_plus_conversion() {
    let (g1, g2) = (0.3, 0.45);
    let mut s = NetworkSpec::new(Frame::Lab);
    s.modes.push(Mode::new("d1", 50.0, 1.0));
    s.modes.push(Mode::new("d2", 30.0, 1.0));
    s.drives.push(ParametricDrive::new("d1", "d2", g2, 20.0, 0.0));
    s.drives.push(ParametricDrive::new("d1", "d2", g1, 80.0, 0.0));
    let (sys, _) = compile_effective(&s).unwrap();
    let mut h = QuadraticHamiltonian::new(2);
    h.add_squeezing(0, 1, C64::new(g1, 0.0));
    h.add_hopping(0, 1, C64::new(g2, 0.0));
    let expect = to_quadrature_real(h.matrix());
    let got = quadrature_transform(&sys);
    assert!((got - &expect).amax() < 1e-12);
    // X1X2 carries G1 + G2, P1P2 carries G2 − G1
    assert!((expect[(0, 2)] - (g1 + g2)).abs() < 1e-12);
    assert!((expect[(1, 3)] - (g2 - g1)).abs() < 1e-12);
}

#[test]
fn strong_drive_departs_from_rotating_wave_result() {
    // regression value for λ = ω_b / 5
    let mut s = NetworkSpec::new(Frame::Lab);
    s.modes.push(Mode::new("a", 10.0, 1.0).with_thermal(1.0, 0.0));
    s.modes.push(Mode::new("b", 5.0, 1.0));
    s.drives.push(ParametricDrive::new("a", "b", 1.0, 5.0, 0.0));
    let v_rwa = steady_covariance(&model_of(&s)).unwrap();
    let mut cfg = TimeDomainConfig::new(20.0, 1.0 / 400.0, true);
    cfg.sample_every = 10;
    let init = InitialState {
        mean: vec![C64::new(0.0, 0.0); 2],
        covariance: v_rwa.clone(),
    };
    let traj = integrate_time_domain(&s, &cfg, &init).unwrap();
    let err = (traj.mean_covariance_after(10.0) - &v_rwa).amax();
    assert!(err > 0.1, "{err}");
    assert!((err - STRONG_DRIVE_DEVIATION).abs() < 1e-3 * STRONG_DRIVE_DEVIATION, "{err}");
}

const STRONG_DRIVE_DEVIATION: f64 = 0.2645481477690984;

#[test]
fn fixtures_all_compile_and_are_stable() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../networks");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let spec = parse_network(&std::fs::read_to_string(&p).unwrap()).unwrap();
        let (sys, diags): (EffectiveSystem, _) = compile_effective(&spec).unwrap();
        assert!(diags.iter().all(|d| d.severity != paramnet::netmodel::Severity::Error), "{p:?}");
        assert!(build_state_space(&sys).stability_margin() < 0.0, "{p:?}");
        n += 1;
    }
    assert!(n >= 7);
}
