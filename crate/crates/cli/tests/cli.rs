use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvstab"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .args(args)
        .output()
        .expect("spawn pvstab")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn golden(name: &str, out: &Output) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &out.stdout).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(String::from_utf8_lossy(&out.stdout), want, "report differs from {name}");
}

#[test]
fn curvature_example_golden() {
    let out = run(&["certify-pvc", "--instance", "fixtures/curvature.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rep = &v["report"];
    assert_eq!(rep["verdict"], "FULLY_STABLE");
    assert_eq!(rep["licq"]["holds"], false);
    assert_eq!(rep["gssosc"]["holds"], false);
    assert_eq!(rep["scoc_det_zero"], true);
    assert_eq!(rep["gusosc"]["ell_best"], "inf");
    assert_eq!(v["manifest"]["seed"], 42);
    golden("curvature_certify.json", &out);
}

#[test]
fn failure_family_golden() {
    let stable = run(&["solve", "--instance", "fixtures/orthant_stable.json", "--v", "0", "0", "--p", "-0.1", "-0.2", "--q", "0", "0"]);
    assert_eq!(stable.status.code(), Some(0));
    let x = &json(&stable)["report"]["result"]["x"];
    assert!((x[0].as_f64().unwrap() - 0.1).abs() < 1e-8 && (x[1].as_f64().unwrap() - 0.2).abs() < 1e-8);
    golden("orthant_stable_solve.json", &stable);

    let unstable = run(&["solve", "--instance", "fixtures/orthant_unstable.json", "--v", "0", "0", "--p", "-0.1", "-0.1", "--q", "0", "0"]);
    assert_eq!(unstable.status.code(), Some(2));
    let probe = &json(&unstable)["report"]["failure_probe"];
    assert_eq!(probe["applies"], true);
    assert_eq!(probe["solvability"]["status"], "empty");
    assert!(probe["solvability"]["witness"].is_object());
    golden("orthant_unstable_solve.json", &unstable);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["solve", "--instance", "fixtures/missing.json"]).status.code(), Some(1));
    assert_eq!(run(&["certify-pvc", "--instance", "fixtures/unconstrained_convex.json", "--samples", "50"]).status.code(), Some(0));
    assert_eq!(run(&["certify-pvc", "--instance", "fixtures/unconstrained_concave.json", "--samples", "50"]).status.code(), Some(2));
    // certificate needs smooth inequality constraints
    assert_eq!(run(&["certify-pvc", "--instance", "fixtures/box.json"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--instance", "fixtures/aqvi1.json", "--v", "1"]).status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["moduli", "--instance", "fixtures/box_moving.json", "--samples", "100", "--seed", "7"];
    let a = run(&args);
    let b = run(&[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[&args[..5], &["--seed", "8"]].concat());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn threshold_and_cones() {
    let t = json(&run(&["threshold", "--instance", "fixtures/orthant_stable.json", "--samples", "500"]));
    let r = t["report"]["sampled"]["r_est"].as_f64().unwrap();
    assert!((r - 1.0).abs() < 0.05);
    let c = json(&run(&["cones", "--instance", "fixtures/box.json"]));
    assert_eq!(c["report"]["critical_span"]["span_dim"], 1);
    assert_eq!(c["report"]["cone_limit"]["span_dim"], 1);
    assert_eq!(c["report"]["critical_cone"]["rays"].as_array().unwrap().len(), 1);
}

#[test]
fn moduli_table_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moduli.json");
    let out = run(&["moduli", "--instance", "fixtures/aqvi1.json", "--samples", "200", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let lip = &v["report"]["lipschitz"];
    assert!(lip["pass"].as_bool().unwrap());
    for key in ["kappa", "ell_est", "ell_p", "ell_q"] {
        assert!(lip[key].is_number(), "{key}");
    }
    assert!(lip["theory"]["alpha"].as_f64().unwrap() < 1.0);
    assert!(lip["theory"]["lipschitz_kappa"]["gamma1"].is_number());
    assert!(String::from_utf8_lossy(&out.stderr).contains("κ ="));
}

#[test]
fn pvi_certificate_on_box() {
    let out = run(&["certify-pvi", "--instance", "fixtures/box.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["closure_implies_span"], true);
    assert_eq!(v["report"]["pointbased"]["holds"], true);
}

#[test]
fn timing_is_opt_in() {
    let a = json(&run(&["cones", "--instance", "fixtures/box.json"]));
    assert!(a["manifest"]["wall_clock_seconds"].is_null());
    let b = json(&run(&["cones", "--instance", "fixtures/box.json", "--record-timing"]));
    assert!(b["manifest"]["wall_clock_seconds"].is_number());
}
