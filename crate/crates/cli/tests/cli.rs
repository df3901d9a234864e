use std::path::PathBuf;
use std::process::{Command, Output};

fn networks() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../networks")
}

fn paramnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paramnet"))
        .args(args)
        .env("PARAMNET_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let data = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, data)
}

fn da_sweep(out: &std::path::Path) -> String {
    let input = networks().join("dissipative_amp.json");
    let o = paramnet(&[
        "gain",
        input.to_str().unwrap(),
        "--sweep",
        "cooperativity",
        "2,5,10",
        "--omega-min",
        "-2",
        "--omega-max",
        "2",
        "--points",
        "41",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(out).unwrap()
}

#[test]
fn dissipative_gain_sweep_matches_closed_form_and_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = da_sweep(&dir.path().join("gain.csv"));
    let (header, data) = rows(&csv);
    assert_eq!(header, ["cooperativity", "omega_rad_s", "gain", "gain_db"]);
    assert_eq!(data.len(), 3 * 41);
    for r in &data {
        let (c, w) = (r[0], 2.0 * r[1]);
        let g0 = (2.0 * c - 1.0).powi(2);
        let w2 = w * w;
        let closed = ((g0.sqrt() - w2).powi(2) + w2 * (1.0 + w2).powi(2)) / (1.0 + w2).powi(3);
        assert!((r[2] / closed - 1.0).abs() < 1e-9, "{r:?} vs {closed}");
    }
    let golden = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/da_gain_sweep.csv")).unwrap();
    let (_, pinned) = rows(&golden);
    assert_eq!(pinned.len(), data.len());
    for (a, b) in pinned.iter().zip(&data) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{a:?} vs {b:?}");
        }
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "gain");
    assert_eq!(manifest["resolved"]["from"], "d1");
    assert_eq!(manifest["resolved"]["points"], 41);
    assert_eq!(manifest["input"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = da_sweep(&dir.path().join("a.csv"));
    let b = da_sweep(&dir.path().join("b.csv"));
    assert_eq!(a, b);
}

#[test]
fn lossless_cavity_reflects_with_unit_magnitude() {
    let input = networks().join("lossless_one_mode.json");
    let o = paramnet(&["scatter", input.to_str().unwrap(), "--points", "11"]);
    assert!(o.status.success());
    let (header, data) = rows(&String::from_utf8(o.stdout).unwrap());
    let col = header.iter().position(|h| h == "abs_S_a_a").unwrap();
    assert_eq!(data.len(), 11);
    assert!(data.iter().all(|r| (r[col] - 1.0).abs() < 1e-14));
}

#[test]
fn exit_codes() {
    let o = paramnet(&["gain", "/nonexistent/network.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());

    let pa = networks().join("pa.json");
    let pa = pa.to_str().unwrap();
    assert_eq!(paramnet(&["gain", pa, "--points", "1"]).status.code(), Some(1));
    assert_eq!(paramnet(&["gain", pa, "--sweep", "drives.0.phase", "1"]).status.code(), Some(1));
    assert_eq!(paramnet(&["gbw", pa]).status.code(), Some(1));
    assert_eq!(paramnet(&["gain", pa, "--sweep", "drives.0.lambda", "5"]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"modes": [{"label": "a", "omega": 1.0, "kappa_port": -1.0}]}"#).unwrap();
    assert_eq!(paramnet(&["compile", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn json_sweep_keeps_input_order() {
    let input = networks().join("dissipative_amp.json");
    let o = paramnet(&["stability", input.to_str().unwrap(), "--sweep", "cooperativity", "10,0.5,3", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let values: Vec<f64> = v["points"].as_array().unwrap().iter().map(|p| p["value"].as_f64().unwrap()).collect();
    assert_eq!(values, [10.0, 0.5, 3.0]);
    assert!(v["points"].as_array().unwrap().iter().all(|p| p["result"]["stable"] == true));
}
