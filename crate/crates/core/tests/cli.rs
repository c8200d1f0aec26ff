use std::process::{Command, Output};

use serde_json::Value;

fn sphlab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sphlab"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    for var in ["SPHLAB_P", "SPHLAB_N", "SPHLAB_TOL", "SPHLAB_COSET_CAP", "SPHLAB_SEED", "SPHLAB_J_MIN", "SPHLAB_J_MAX", "SPHLAB_THREADS", "SPHLAB_OUT"] {
        if !env.iter().any(|(k, _)| *k == var) {
            cmd.env_remove(var);
        }
    }
    cmd.output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn fixture(name: &str) -> String {
    format!("@{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn omega_value_and_input_echo() {
    let o = sphlab(&["omega", "--p", "2", "--n", "2", "--param", "sigma:1", "--coweight", "1,-1"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let doc = stdout_json(&o);
    assert!((doc["re"].as_f64().unwrap() - 19.0 / 12.0).abs() < 1e-14);
    assert_eq!(doc["input"]["command"]["command"], "omega");
    assert_eq!(doc["input"]["config"]["p"], 2);
}

#[test]
fn errors_exit_one_with_json_on_stderr() {
    let o = sphlab(&["cosets", "--p", "4", "--n", "2", "--coweight", "1,-1"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "NotPrime");

    let o = sphlab(&["cosets", "--p", "2", "--n", "2", "--coweight", "1,0"], &[]);
    assert_eq!(o.status.code(), Some(1));

    let o = sphlab(&["--no-such-flag"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "Usage");
}

#[test]
fn not_found_exits_two() {
    let o = sphlab(
        &["find-witness", "--p", "2", "--n", "3", "--j-min", "100", "--j-max", "100", "--max-set-size", "2", "--pool-spread", "0", "--twists", "0", "--random-sets", "0"],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["found"], false);
}

#[test]
fn environment_supplies_defaults_and_flags_win() {
    let args = ["structure-constants", "--m1", "1,-1", "--m2", "1,-1"];
    let from_env = stdout_json(&sphlab(&args, &[("SPHLAB_P", "3"), ("SPHLAB_N", "2")]));
    assert_eq!(from_env["input"]["config"]["p"], 3);
    assert_eq!(from_env["terms"][0]["c"], 12);

    let mut with_flag = args.to_vec();
    with_flag.extend(["--p", "2"]);
    let flagged = stdout_json(&sphlab(&with_flag, &[("SPHLAB_P", "3"), ("SPHLAB_N", "2")]));
    assert_eq!(flagged["input"]["config"]["p"], 2);
    assert_eq!(flagged["terms"][0]["c"], 6);
}

#[test]
fn out_file_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cosets.json");
    let o = sphlab(&["cosets", "--p", "3", "--n", "2", "--coweight", "1,-1", "--out", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["count"], 12);

    let input = format!("@{}", path.display());
    let v = stdout_json(&sphlab(&["verify", "--input", &input], &[]));
    assert_eq!(v["verified"], true);

    let mut tampered = doc.clone();
    tampered["count"] = 13.into();
    let bad = serde_json::to_string(&tampered).unwrap();
    let o = sphlab(&["verify", "--input", &bad], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("$.count"));
}

#[test]
fn fixtures_verify() {
    for name in ["nonpd_witness_p2_n3.json", "unbounded_p2_sigma1.json"] {
        let o = sphlab(&["verify", "--input", &fixture(name)], &[]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout_json(&o)["verified"], true, "{name}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["structure-constants", "--p", "2", "--n", "3", "--m1", "1,0,-1", "--m2", "1,0,-1"];
    let one = stdout_json(&sphlab(&[&args[..], &["--threads", "1"]].concat(), &[]));
    let four = stdout_json(&sphlab(&[&args[..], &["--threads", "4"]].concat(), &[]));
    assert_eq!(one["terms"], four["terms"]);
}

#[test]
fn axiom_report_passes() {
    let o = sphlab(&["verify-axioms", "--p", "2", "--n", "2", "--param", "sigma:1"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = stdout_json(&o);
    assert_eq!(doc["all_passed"], true);
    assert_eq!(doc["checks"].as_array().unwrap().len(), 5);
}

#[test]
fn psd_reads_elements_from_stdin() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_sphlab"))
        .args(["psd", "--p", "2", "--n", "2", "--param", "sigma:1", "--elements", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(br#"[[[2,0],[0,"1/2"]],[[1,0],[0,1]]]"#).unwrap();
    let o = child.wait_with_output().unwrap();
    let doc = stdout_json(&o);
    assert_eq!(doc["verdict"], "NOT_PSD");
    assert!((doc["min_eigenvalue"].as_f64().unwrap() + 7.0 / 12.0).abs() < 1e-12);
}
