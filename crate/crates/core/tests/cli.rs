use std::process::{Command, Output};

use serde_json::Value;

fn legrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legrec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn recover_random_two_stage() {
    let out = legrec(&[
        "recover",
        "--p",
        "101",
        "--d",
        "1",
        "--algo",
        "two-stage",
        "--hidden",
        "random",
        "--seed",
        "42",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["success"], true);
    assert_eq!(v["recovered"], v["hidden"]);
    for key in [
        "recovered",
        "survivors_stage1",
        "survivors_stage2",
        "total_queries",
        "distinct_points",
        "elapsed_ms",
        "params",
        "fallback_used",
        "work",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["params"]["stage1_window"], 22);
}

#[test]
fn recover_explicit_hidden() {
    let out = legrec(&[
        "recover", "--p", "7", "--d", "1", "--algo", "brute", "--hidden", "3", "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["recovered"], "x + 3");
    let out = legrec(&[
        "recover",
        "--p",
        "13",
        "--d",
        "2",
        "--algo",
        "brute",
        "--hidden",
        "x^2 + x + 1",
        "--json",
    ]);
    let v = json(&out);
    assert_eq!(v["recovered"], "x^2 + x + 1");
    assert_eq!(v["total_queries"], 13);
}

#[test]
fn usage_errors_exit_2() {
    let out = legrec(&["recover", "--p", "4", "--d", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p must be an odd prime"));
    assert_eq!(legrec(&["recover", "--p", "2"]).status.code(), Some(2));
    assert_eq!(
        legrec(&["recover", "--p", "7", "--hidden", "1,2", "--d", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        legrec(&["recover", "--p", "7", "--reps", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        legrec(&["recover", "--p", "7", "--gamma", "0.3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        legrec(&["recover", "--p", "7", "--algo", "magic"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(legrec(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        legrec(&["--threads", "0", "recover", "--p", "7"])
            .status
            .code(),
        Some(2)
    );
    let out = legrec(&["verify-bounds", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget too small"));
}

#[test]
fn over_budget_recovery_is_a_semantic_failure() {
    let out = legrec(&[
        "recover", "--p", "1009", "--d", "2", "--algo", "brute", "--budget", "100000",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pair_identity_rows() {
    let out = legrec(&["verify-bounds", "--lemma", "pair-identity", "--p", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["lemma", "p", "d", "params", "measured", "bound", "status"]
    );
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 49);
    assert!(rows.iter().all(|row| &row[6] == "pass"));
    assert_eq!(rows.iter().filter(|row| &row[4] == "6").count(), 7);
}

#[test]
fn default_sweep_passes() {
    let out = legrec(&["verify-bounds"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert!(rows.iter().all(|row| matches!(&row[6], "pass" | "skipped")));
    for lemma in [
        "pair-identity",
        "weil",
        "weil-short",
        "mult-weil",
        "moment",
        "sigma",
    ] {
        assert!(
            rows.iter().any(|row| &row[0] == lemma && &row[6] == "pass"),
            "{lemma}"
        );
    }
}

#[test]
fn quantum_report_fields() {
    let out = legrec(&[
        "quantum",
        "--p",
        "101",
        "--d",
        "1",
        "--epsilon",
        "0.5",
        "--hidden",
        "random",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for key in [
        "k",
        "sigma_2d",
        "sigma_bound",
        "lambda_max",
        "alpha",
        "one_minus_alpha_times_p",
        "p_correct",
        "residual_mass",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["k"], 8);
    assert_eq!(v["queries"], 8);
    assert_eq!(v["p_correct"], v["alpha"]);
    let out = legrec(&[
        "quantum", "--p", "101", "--k", "6", "--hidden", "x + 17", "--json",
    ]);
    assert!(json(&out)["one_minus_alpha_times_p"].as_f64().unwrap() <= 10.0);
}

#[test]
fn bench_grid() {
    let out = legrec(&[
        "--no-timing",
        "bench",
        "--p",
        "101",
        "--p",
        "10007",
        "--seeds",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    let get = |p: &str, algo: &str, col: usize| -> u64 {
        rows.iter()
            .find(|row| &row[0] == p && &row[2] == algo)
            .unwrap()[col]
            .parse()
            .unwrap()
    };
    // brute-force work is p times the candidate count, which is p at d = 1
    assert_eq!(get("10007", "brute", 8), 10007 * 10007);
    assert!(get("10007", "two-stage", 6) < get("10007", "brute", 6));
    assert!(rows.iter().all(|row| row[5].is_empty()));
}

#[test]
fn no_timing_and_out_file() {
    let dir = std::env::temp_dir().join(format!("legrec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = legrec(&[
        "recover",
        "--p",
        "101",
        "--seed",
        "1",
        "--json",
        "--no-timing",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert!(v["elapsed_ms"].is_null());
    let again = legrec(&[
        "recover",
        "--p",
        "101",
        "--seed",
        "1",
        "--json",
        "--no-timing",
    ]);
    assert_eq!(again.stdout, std::fs::read(&path).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}
