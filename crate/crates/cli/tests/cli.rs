use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn qpvi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpvi")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qpvi-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

const ORBIT: &[&str] = &[
    "orbit", "--theta", "1/2,1/3,1/5,1/7", "--q", "11/10", "--t0", "2", "--y0", "3", "--Z0", "1/4", "--steps", "6", "--backend",
    "exact",
];

#[test]
fn exact_orbit_is_byte_identical() {
    let (a, b) = (scratch("orbit_a.json"), scratch("orbit_b.json"));
    for p in [&a, &b] {
        let mut args = ORBIT.to_vec();
        args.extend(["--out", p.to_str().unwrap()]);
        assert_eq!(qpvi(&args).status.code(), Some(0));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let lines: Vec<Value> = String::from_utf8(ta).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0]["y"], "3/1");
    assert_eq!(lines[6]["t"], "1771561/500000");
    assert!(lines.iter().all(|l| l["exact"] == true));
}

#[test]
fn config_file_matches_flags() {
    let cfg = scratch("orbit.json.cfg");
    std::fs::write(
        &cfg,
        r#"{"command": "orbit", "theta": ["1/2", "1/3", "1/5", "1/7"], "q": "11/10", "t0": 2, "y0": "3", "Z0": "1/4", "steps": 6, "backend": "exact"}"#,
    )
    .unwrap();
    let from_cfg = qpvi(&["--config", cfg.to_str().unwrap()]);
    let from_flags = qpvi(ORBIT);
    assert_eq!(from_cfg.status.code(), Some(0), "{}", String::from_utf8_lossy(&from_cfg.stderr));
    assert_eq!(from_cfg.stdout, from_flags.stdout);
}

#[test]
fn config_and_flags_are_exclusive() {
    let cfg = scratch("verify.cfg");
    std::fs::write(&cfg, r#"{"command": "verify", "suite": "9"}"#).unwrap();
    assert_eq!(qpvi(&["--config", cfg.to_str().unwrap(), "verify", "--suite", "9"]).status.code(), Some(2));
    assert_eq!(qpvi(&["--config", cfg.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_two() {
    let mut floats = ORBIT.to_vec();
    floats[4] = "1.1";
    let o = qpvi(&floats);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("floats"));
    assert_eq!(qpvi(&["orbit", "--theta", "1/2,1/3", "--q", "2", "--t0", "2", "--y0", "3", "--z0", "1"]).status.code(), Some(2));
    // t on the non-biregular set: Theta_1 Theta_t q^2 = (5/3)(7/4) 4.
    let o = qpvi(&["orbit", "--Theta", "3/2,5/3,7/4,9/5", "--q", "2", "--t0", "35/3", "--y0", "3", "--z0", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-biregular"));
    assert_eq!(qpvi(&["verify", "--suite", "99"]).status.code(), Some(2));
}

#[test]
fn numeric_orbit_accepts_floats() {
    let o = qpvi(&[
        "orbit", "--theta", "0.5,1/3,0.2,1/7", "--q", "1.1", "--t0", "2", "--y0", "3", "--Z0", "0.25", "--steps", "3", "--backend",
        "numeric",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let last: Value = serde_json::from_str(String::from_utf8(o.stdout).unwrap().lines().last().unwrap()).unwrap();
    assert_eq!(last["ell"], 3);
    assert_eq!(last["exact"], false);
}

#[test]
fn symbolic_degree_cap_exits_three() {
    let o = qpvi(&["orbit", "--theta", "1/2,1/3,1/5,1/7", "--q", "q", "--t0", "2", "--y0", "3", "--Z0", "1/4", "--steps", "3", "--cap", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degree cap"));
}

#[test]
fn verify_exit_status() {
    let out = scratch("suite.json");
    let o = qpvi(&["verify", "--suite", "9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS criterion  9"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v.to_string().contains("intersection diagrams"));
}

#[test]
fn lax_report_is_exact() {
    let v = stdout_json(&qpvi(&["lax", "--Theta", "3/2,5/3,7/4,9/5", "--q", "2", "--t", "3", "--lambda", "1", "--y", "5/2", "--Z", "1/3"]));
    assert_eq!(v["report"]["polynomial_zero"], true);
    assert!(v["report"]["samples"].as_array().unwrap().iter().all(|s| s["exact_zero"] == true));
}

#[test]
fn confluence_report_rows() {
    let v = stdout_json(&qpvi(&["confluence", "--theta", "1/2,1/3,1/5,1/7", "--t0", "2", "--y0", "3", "--Z0", "1/4", "--n-max", "2"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["a_n_at_1"], "3/1");
    assert!(rows.iter().all(|r| r["equal_delta"] == true));
}

#[test]
fn birkhoff_report() {
    let base = ["birkhoff", "--Theta", "3/2,4/3,5/4,5/3", "--q", "2", "--t", "3", "--lambda", "1", "--y", "5/2", "--Z", "1/3"];
    let mut args = base.to_vec();
    args.extend(["--transported", "--tilde"]);
    let v = stdout_json(&qpvi(&args));
    assert!(v["max_pseudo"].as_f64().unwrap() <= 1e-8);
    assert!(v["max_rational"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["tilde"].as_array().unwrap().len(), 5);
    let mut args = base.to_vec();
    args.extend(["--transported", "--perturb", "0.3"]);
    let v = stdout_json(&qpvi(&args));
    assert!(v["max_pseudo"].as_f64().unwrap() >= 1e-2);
}

#[test]
fn okamoto_outputs() {
    let o = qpvi(&["okamoto", "diagram", "--kind", "diff", "--theta", "1/3,2/5,3/7,5/4", "--t", "-3/2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.starts_with("graph boundary {"));
    let v = stdout_json(&qpvi(&[
        "okamoto", "diagram", "--kind", "q", "--Theta", "3/2,5/3,7/4,9/5", "--q", "3/2", "--t", "5/7", "--format", "json",
    ]));
    assert_eq!(v["components"].as_array().unwrap().len(), 4);
    let o = qpvi(&[
        "okamoto", "trajectory", "--theta", "0.3,0.7,0.45,1.6", "--t0", "2.5", "--t1", "2.6", "--exceptional", "beta_0^-", "--e", "0.4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("t_re,t_im,chart,"));
    assert!(csv.lines().nth(1).unwrap().contains("beta_0^-:1"));
}
