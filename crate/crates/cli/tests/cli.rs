//! End-to-end runs of the `fspair` binary.

use std::path::Path;
use std::process::{Command, Output};

fn fspair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fspair"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn poisson_verification_meets_its_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let run = fspair(&[
        "verify", "--pair", "poisson", "--testfn", "bump", "--scale", "5.3", "--tol", "1e-8", "--json",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let v = read_json(&out);
    assert!(v["abs_residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["mu_truncation"], 64.0);
    assert_eq!(v["quadrature_tol"], 1e-8);
    assert_eq!(v["runtime_ms"], 0);
}

#[test]
fn unknown_pair_is_a_usage_error() {
    let run = fspair(&["verify", "--pair", "nosuch"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!run.stderr.is_empty());
    assert_eq!(fspair(&["verify", "--pair", "poisson", "--testfn", "bump", "--bogus"]).status.code(), Some(2));
    assert_eq!(fspair(&["verify", "--pair", "guinand", "--testfn", "bump"]).status.code(), Some(2));
    assert_eq!(fspair(&["bridge", "--pair", "poisson", "--k", "0", "--z", "0 + 2i", "--w", "0+2i", "--tmax", "8"]).status.code(), Some(2));
    assert_eq!(fspair(&["verify", "--pair", "file", "--testfn", "bump"]).status.code(), Some(2));
}

#[test]
fn guinand_table_has_the_expected_first_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let run = fspair(&["coeffs", "--family", "guinand", "--c", "0.111111", "--n", "8", "--csv", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,alpha_n"));
    let rows: Vec<(usize, f64)> = lines
        .map(|l| {
            let (n, v) = l.split_once(',').unwrap();
            (n.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0], (0, 1.0));
    assert_eq!(rows[1].0, 1);
    assert!((rows[1].1 + (24.0 * 0.111111 - 2.0)).abs() < 1e-12, "{}", rows[1].1);
}

#[test]
fn r3_and_theta_tables_are_integers() {
    let run = fspair(&["coeffs", "--family", "r3", "--n", "6"]);
    assert_eq!(String::from_utf8(run.stdout).unwrap(), "n,alpha_n\n0,1\n1,6\n2,12\n3,8\n4,6\n5,24\n6,24\n");
    let run = fspair(&["coeffs", "--family", "theta", "--n", "4"]);
    assert_eq!(String::from_utf8(run.stdout).unwrap(), "n,alpha_n\n0,1\n1,2\n2,0\n3,0\n4,2\n");
    assert_eq!(fspair(&["coeffs", "--family", "theta", "--c", "0.1", "--n", "4"]).status.code(), Some(2));
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["verify", "--pair", "guinand", "--c", "0.1111111111111111", "--testfn", "plateau", "--scale", "3", "--tol", "1e-4"],
        &["bridge", "--pair", "poisson", "--k", "0", "--z", "0+2i", "--w", "0.5+1i", "--tmax", "128", "--sweep"],
        &["nevindex", "--pair", "poisson", "--points", "6", "--seed", "7"],
        &["efcoef", "--pair", "poisson", "--lambda", "1", "--y", "1", "--T", "64"],
    ];
    for args in cases {
        let mut files = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{}-{run}.json", args[0]));
            let mut full: Vec<&str> = args.to_vec();
            let p = path.to_str().unwrap().to_owned();
            full.extend(["--json", &p]);
            let out = fspair(&full);
            assert!(out.status.code().unwrap() < 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
            files.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(files[0], files[1], "{args:?}");
    }
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let run = fspair(&[
        "verify", "--pair", "meyer", "--trunc", "200", "--testfn", "bump", "--scale", "2", "--shift", "0.3", "--tol",
        "1e-6", "--timing", "--json", out.to_str().unwrap(),
    ]);
    assert!(run.status.code().unwrap() < 2);
    assert!(read_json(&out)["runtime_ms"].is_u64());
}

#[test]
fn missed_tolerance_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("loose.json");
    // truncated far below the test function's reach, the sides disagree
    let run = fspair(&[
        "verify", "--pair", "guinand", "--c", "0.1111111111111111", "--trunc", "4", "--testfn", "bump", "--scale", "4",
        "--tol", "1e-12", "--json", out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(1));
    assert!(read_json(&out)["abs_residual"].as_f64().unwrap() > 1e-12);
}

#[test]
fn bridge_report_carries_the_closed_form() {
    let run = fspair(&["bridge", "--pair", "poisson", "--k", "0", "--z", "0+2i", "--w", "0+2i", "--tmax", "512", "--tol", "1e-4"]);
    assert_eq!(run.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    let closed = -(std::f64::consts::PI / 2.0) / (2.0 * std::f64::consts::PI).tanh() / (2.0 * std::f64::consts::PI);
    assert!((v["target_im"].as_f64().unwrap() - closed).abs() < 1e-10);
    assert!(v["abs_residual"].as_f64().unwrap() < 1e-4);
    assert_eq!(v["params"]["z"], serde_json::json!([0.0, 2.0]));
}

#[test]
fn recovery_and_index_reports() {
    let run = fspair(&["recover", "--pair", "poisson", "--k", "0", "--a", "0.5", "--b", "1.5", "--s", "1e-3", "--tol", "1e-3"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let v: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v["target_re"], 0.25);

    let run = fspair(&["nevindex", "--pair", "poisson", "--points", "8", "--seed", "3"]);
    assert_eq!(run.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v["value_re"], 0.0);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 8);

    // signed measures carry no index bound
    let run = fspair(&["nevindex", "--pair", "meyer", "--points", "6", "--seed", "1"]);
    assert_eq!(run.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v["params"]["bound_applies"], false);
}

#[test]
fn pair_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.json");
    std::fs::write(
        &path,
        r#"{"name":"two-point","antipodal":true,"strip_constant":0.1,
            "mu":{"degree_bound":2,"atoms":[{"t":0,"re":1,"im":0}]},
            "a":{"growth_constant":1,"support":[{"lambda":0,"re":1,"im":0}]}}"#,
    )
    .unwrap();
    let run = fspair(&["verify", "--pair", "file", "--file", path.to_str().unwrap(), "--testfn", "bump", "--tol", "1e-3"]);
    assert!(run.status.code().unwrap() < 2, "{}", String::from_utf8_lossy(&run.stderr));
    let v: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v["pair_name"], "two-point");
    std::fs::write(&path, "{").unwrap();
    assert_eq!(fspair(&["verify", "--pair", "file", "--file", path.to_str().unwrap(), "--testfn", "bump"]).status.code(), Some(2));
}

#[test]
fn pairs_list_names_every_builtin() {
    let run = fspair(&["pairs", "list"]);
    let text = String::from_utf8(run.stdout).unwrap();
    for name in ["poisson", "guinand", "meyer", "file"] {
        assert!(text.contains(name));
    }
}
