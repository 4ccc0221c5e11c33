use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lpdelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpdelay")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

const SET_1: [&str; 11] = ["analyze", "--I1", "0.8", "--I2", "0.5", "--I3", "0.4", "--alpha", "0.3", "--m", "1.5"];

#[test]
fn undamped_equilibrium_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "rest.cfg",
        "# no damping, no perturbation\nmodel = rigid_body\nI1 = 0.8\nI2 = 0.5\nI3 = 0.4\nalpha = 0\ntau = 0.5\nm = 1.5\n\
         h = 0.01\nt_end = 5\neps = 0\n",
    );
    let o = lpdelay(&["simulate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rest.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["zero_motion"], true);
    assert!(summary["max_displacement"].as_f64().unwrap() <= 1e-12);
    assert!(summary["casimir"]["max_drift"].as_f64().unwrap() <= 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("rest.csv")).unwrap();
    assert!(csv.lines().count() > 500);
}

#[test]
fn unknown_model_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "model = pendulum\ntau = 1\nh = 0.1\nt_end = 1\n");
    let o = lpdelay(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("model") && e.contains("pendulum"), "{e}");
}

#[test]
fn unknown_key_names_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "typo.cfg",
        "model = sphere\ntau = 1\nh = 0.1\nt_end = 1\ninitial = constant\nx0 = 1, 0, 0\nt_ned = 3\n",
    );
    let o = lpdelay(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("t_ned") && e.contains('7'), "{e}");
}

#[test]
fn simulation_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = "model = rigid_body\nI1 = 0.8\nI2 = 0.5\nI3 = 0.4\nalpha = 0.3\ntau = 0.8\nh = 0.01\nt_end = 20\n\
                eps = 0.05\ndirection = 0, 1, 1\noutput_csv = out.csv\n";
    let mut runs = Vec::new();
    for name in ["a.cfg", "b.cfg"] {
        let cfg = write(dir.path(), name, text);
        let o = lpdelay(&["simulate", "--config", &cfg]);
        assert!(o.status.success(), "{}", stderr(&o));
        runs.push(std::fs::read(dir.path().join("out.csv")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn analyze_default_set() {
    let o = lpdelay(&SET_1);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["schema_version"], "1.0.0");
    assert_eq!(r["status"], "ok");
    let hp = &r["spectral"]["hopf_point"];
    assert!(hp["residual"].as_f64().unwrap() <= 1e-10);
    assert!((hp["omega0"].as_f64().unwrap() - 2.137139378616).abs() < 1e-9);
    assert!((hp["tau0"].as_f64().unwrap() - 0.734999477578).abs() < 1e-9);
    // Numbers are printed with 17 significant digits, so they survive the
    // round trip and the identity holds bit for bit.
    let beta2 = r["hopf"]["beta2"].as_f64().unwrap();
    let re_c1 = r["hopf"]["C1"]["re"].as_f64().unwrap();
    assert_eq!(beta2, 2.0 * re_c1);
    assert!(r["paper_reference_values"].is_object());
    let listed: Vec<&str> =
        r["discrepancies"].as_array().unwrap().iter().map(|d| d["quantity"].as_str().unwrap()).collect();
    for q in ["omega0", "tau0", "mu2", "T2", "beta2"] {
        assert!(listed.contains(&q), "{q} missing from {listed:?}");
    }
}

#[test]
fn analyze_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut args = SET_1.to_vec();
    args.extend(["--output", out.to_str().unwrap()]);
    let o = lpdelay(&args);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["status"], "ok");
}

#[test]
fn analyze_rejects_non_major_axis() {
    let o = lpdelay(&["analyze", "--I1", "0.4", "--I2", "0.5", "--I3", "0.3", "--alpha", "0.3", "--m", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("I1 > I2"), "{}", stderr(&o));
}

#[test]
fn analyze_alternate_coefficient_variant() {
    let mut args = SET_1.to_vec();
    args.extend(["--variant", "paper"]);
    let o = lpdelay(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["spectral"]["coefficients"]["variant"], "paper");
    assert!(r["hopf"].is_null());

    args.pop();
    args.push("nonsense");
    assert_eq!(lpdelay(&args).status.code(), Some(1));
}

#[test]
fn sweep_below_critical_delay_decays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.cfg",
        "model = rigid_body\nI1 = 0.8\nI2 = 0.5\nI3 = 0.4\nalpha = 0.3\nm = 1.5\ntau = 0.1\nh = 0.01\nt_end = 40\n\
         eps = 0.01\ndirection = 0, 1, 1\n",
    );
    let o = lpdelay(&[
        "sweep",
        "--config",
        &cfg,
        "--tau-min",
        "0.1",
        "--tau-max",
        "0.6",
        "--points",
        "6",
        "--threads",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = String::from_utf8(o.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,decayed,amplitude,period,converged,decay_ratio,status"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    let taus: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(taus.windows(2).all(|w| w[0] < w[1]));
    assert!(rows.iter().all(|r| r[1] == "true" && r[6] == "ok"), "{csv}");

    let one = lpdelay(&["sweep", "--config", &cfg, "--tau-min", "0.3", "--tau-max", "0.3", "--points", "1"]);
    assert!(one.status.success());
    assert_eq!(String::from_utf8(one.stdout).unwrap().lines().count(), 2);

    let none = lpdelay(&["sweep", "--config", &cfg, "--tau-min", "0.3", "--tau-max", "0.6", "--points", "0"]);
    assert_eq!(none.status.code(), Some(1));
}

#[test]
fn verify_passes_and_catches_injected_fault() {
    let o = lpdelay(&["verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["passed"], true);
    assert!(r["checks"].as_array().unwrap().len() >= 15);

    let bad = lpdelay(&["verify", "--fault-inject", "structure-constant"]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(stderr(&bad).contains("algebra.jacobi"), "{}", stderr(&bad));
    let r = json(&bad);
    assert_eq!(r["passed"], false);
    assert!(r["failed"].as_array().unwrap().iter().any(|f| f == "algebra.jacobi"));

    assert_eq!(lpdelay(&["verify", "--fault-inject", "gremlins"]).status.code(), Some(1));
}
