use std::path::PathBuf;
use std::process::{Command, Output};

fn lfp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfp")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn data_rows(path: &PathBuf) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn density_table() {
    let out = scratch("density").join("mu.csv");
    let o = lfp(&["density", "--alpha", "1", "--vmin", "-2", "--vmax", "2", "--n", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 5);
    let centre: f64 = rows[2][1].parse().unwrap();
    assert!((centre - 1.0 / std::f64::consts::PI).abs() < 1e-14);
}

#[test]
fn weights_and_operator_outputs() {
    let dir = scratch("operator");
    let w = dir.join("w.csv");
    assert_eq!(lfp(&["weights", "--alpha", "1.5", "--h", "0.5", "--K", "41", "--out", w.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(data_rows(&w).len(), 41);
    let prefix = dir.join("op");
    let o = lfp(&["operator", "--alpha", "0.8", "--h", "0.5", "--J", "16", "--out", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for suffix in ["_L.csv", "_M.csv", "_VM.csv", "_IL.csv"] {
        assert!(dir.join(format!("op{suffix}")).exists(), "{suffix}");
    }
}

#[test]
fn even_nx_is_a_usage_error() {
    let o = lfp(&["run", "--model", "kinetic", "--h", "0.5", "--J", "8", "--nx", "32", "--T", "0.1", "--out", scratch("even").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("odd"));
}

#[test]
fn run_from_file_with_override() {
    let dir = scratch("run");
    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "alpha = 1.0\nh = 0.5\nJ = 16\ndt = 0.05\nT = 1.0\ninit = \"tc1\"\n").unwrap();
    let out = dir.join("out");
    let o = lfp(&["run", "--config", cfg.to_str().unwrap(), "--T", "0.2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("SUCCESS").exists());
    let trace = data_rows(&out.join("trace.csv"));
    assert_eq!(trace.len(), 5);
    let last_t: f64 = trace.last().unwrap()[0].parse().unwrap();
    assert!((last_t - 0.2).abs() < 1e-12);
}

#[test]
fn convergence_threshold_sets_exit_code() {
    let dir = scratch("convergence");
    let common = ["convergence", "--alpha", "1", "--h", "1", "--L", "16", "--dt", "0.1", "--T", "0.5", "--init", "tc1", "--levels", "3"];
    let ok = lfp(&[&common[..], &["--min-order", "1.0", "--out", dir.join("a.csv").to_str().unwrap()]].concat());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(data_rows(&dir.join("a.csv")).len(), 3);
    let fail = lfp(&[&common[..], &["--min-order", "5.0", "--out", dir.join("b.csv").to_str().unwrap()]].concat());
    assert_eq!(fail.status.code(), Some(1));
}

#[test]
fn reference_and_probe_tables() {
    let dir = scratch("reference");
    let tc3 = dir.join("tc3.csv");
    let o = lfp(&["reference", "--case", "tc3", "--t", "1", "--h", "0.5", "--J", "4", "--nx", "5", "--out", tc3.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&tc3).len(), 5 * 9);
    let probe = dir.join("probe.csv");
    let o = lfp(&["probe", "--alpha", "1", "--h", "0.5", "--J", "16", "--suite", "poincare", "--out", probe.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!data_rows(&probe).is_empty());
}

#[test]
fn decay_on_homogeneous_model_fails() {
    let o = lfp(&["decay", "--h", "0.5", "--J", "8", "--out", scratch("decay").join("d.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
