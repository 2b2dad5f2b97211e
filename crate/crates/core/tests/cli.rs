use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn phonocav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phonocav")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn body(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn cool_reproduces_e1_cooperativity() {
    let dir = tempfile::tempdir().unwrap();
    let o = phonocav(&["cool", "--g-hz", "5e6", "--gamma-convention", "full", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("cool.json"));
    let c = v["c"].as_f64().unwrap();
    assert!((c - 8.1).abs() < 0.1, "c = {c}");
    for key in ["n_th", "gamma_th_hz", "c", "gamma_e1_hz", "gamma_e2_hz", "n_fin", "convention"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["convention"], "full");
    assert_eq!(v["_config"]["command"], "cool");
    assert_eq!(v["_config"]["cool"]["g_hz"].as_f64(), Some(5e6));
}

#[test]
fn unknown_flag_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = phonocav(&["cool", "--frobnicate", "3", "--out", &out_arg(&out)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(!out.exists());
}

#[test]
fn validation_lists_every_problem_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = phonocav(&["cool", "--q", "0.5", "--temp-k", "-1", "--gamma-xy-hz", "0", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error[config]:"), "{err}");
    for field in ["cool.q", "cool.temp_k", "cool.gamma_xy_hz"] {
        assert!(err.contains(field), "{field} missing from {err}");
    }
    assert!(!out.exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[cool]\ng_hz = 1.5e6\nq = 1e6\ngamma_convention = \"half\"\n").unwrap();
    let o = phonocav(&["--config", cfg.to_str().unwrap(), "cool", "--q", "1e5", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("cool.json"));
    assert_eq!(v["_config"]["cool"]["q"].as_f64(), Some(1e5));
    assert_eq!(v["_config"]["cool"]["g_hz"].as_f64(), Some(1.5e6));
    assert_eq!(v["convention"], "half");
}

#[test]
fn bad_config_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[cool]\ng = 1.5e6\n").unwrap();
    let o = phonocav(&["--config", cfg.to_str().unwrap(), "cool", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[config]:"));
}

#[test]
fn oracle_curves_carry_header_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = phonocav(&["oracle", "--kind", "layered", "--samples", "500", "--out", &out_arg(d)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(a.join("oracle_layered.csv")).unwrap();
    assert!(text.starts_with("# phonocav oracle\n"));
    assert!(text.contains("# [oracle]"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "f_hz,cos_ka");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 501);
    assert_eq!(fs::read(a.join("oracle_layered.csv")).unwrap(), fs::read(b.join("oracle_layered.csv")).unwrap());
    let gaps = json(&a.join("oracle_layered.json"));
    assert!(!gaps["stop_bands"].as_array().unwrap().is_empty());

    let o = phonocav(&["oracle", "--kind", "wedge", "--out", &out_arg(&a)]);
    assert!(o.status.success());
    let wedge = body(&a.join("oracle_wedge.csv"));
    assert!(wedge.starts_with("r,phi,e_rr\n"));
}

#[test]
fn wedge_command_reports_inverse_r() {
    let dir = tempfile::tempdir().unwrap();
    let o = phonocav(&["wedge", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("wedge.json"));
    assert!((v["slope"].as_f64().unwrap() + 1.0).abs() < 0.05);
    assert!(v["max_rel_dev_force_balance"].as_f64().unwrap() < 0.05);
    let csv = body(&dir.path().join("wedge.csv"));
    assert!(csv.starts_with("r,e_rr_fem,e_rr_formula,e_rr_force_balance\n"));
}

#[test]
fn bands_row_count_and_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let o = phonocav(&["bands", "--n-k", "3", "--n-bands", "6", "--h", "2e-7", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = body(&dir.path().join("bands.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,band_index,family,frequency_hz"));
    assert_eq!(lines.count(), 3 * 6 * 2);
    let gaps = json(&dir.path().join("gaps.json"));
    assert!(gaps["gaps"].is_array());
    assert!(gaps["_config"]["bands"]["n_k"].as_u64() == Some(3));
}

#[test]
fn modes_export_feeds_couple() {
    let dir = tempfile::tempdir().unwrap();
    let d = out_arg(dir.path());
    let o = phonocav(&["modes", "--h", "2e-7", "--count", "2", "--out", &d]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let modes = json(&dir.path().join("modes.json"));
    let first = &modes["modes"][0];
    for key in [
        "frequency_hz",
        "veff_m3",
        "veff_over_lambda_p3",
        "veff_over_lambda_s3",
        "equipartition_ratio",
        "max_h_j_per_m3",
        "degenerate",
    ] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    let field = body(&dir.path().join("mode_0.csv"));
    assert!(field.starts_with("X,Y,uX,uY,eXX,eYY,eXY,h\n"));

    let mode = dir.path().join("mode_0.json");
    let o = phonocav(&[
        "couple",
        "--mode",
        mode.to_str().unwrap(),
        "--grid",
        "-2e-7,-2e-7,2e-7,2e-7,5,5",
        "--orientation",
        "z=[1,1,1],x=[-1,-1,2]",
        "--out",
        &d,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = body(&dir.path().join("couple.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("X,Y,orientation,g_A_hz,g_E1_hz,g_E2_hz"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty() && rows.len() <= 25);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("z[111]x[-1-12]")));
}

#[test]
fn out_of_plane_field_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = phonocav(&[
        "modes",
        "--model",
        "out_of_plane",
        "--h",
        "2e-7",
        "--count",
        "1",
        "--shift-hz",
        "2e9",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(body(&dir.path().join("mode_0.csv")).starts_with("X,Y,uZ,eXZ,eYZ,h\n"));
}
