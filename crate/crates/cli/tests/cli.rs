use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn proxadmm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxadmm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn solved_example(dir: &Path) {
    assert_eq!(code(&proxadmm(&["example", "--out", "s.toml"], dir)), 0);
    let o = proxadmm(&["solve", "--config", "s.toml", "--trace", "t.csv"], dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bundled_example_converges_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    solved_example(dir.path());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert!(report["checks"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"] == true));
    let o = proxadmm(
        &["verify", "--trace", "t.csv", "--reference", "t.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
}

#[test]
fn corrupted_trace_fails_verification_with_index() {
    let dir = tempfile::tempdir().unwrap();
    solved_example(dir.path());
    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // Inflate ||Δu^5||²_G above its predecessor.
    let mut cells: Vec<String> = lines[6].split(',').map(String::from).collect();
    cells[1] = "10".into();
    lines[6] = cells.join(",");
    fs::write(dir.path().join("bad.csv"), lines.join("\n")).unwrap();
    let o = proxadmm(&["verify", "--trace", "bad.csv"], dir.path());
    assert_eq!(code(&o), 3);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["first_violation"][0], "step_monotone");
    assert_eq!(report["first_violation"][1], 5);
}

#[test]
fn bad_inputs_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    solved_example(dir.path());
    let neg = fs::read_to_string(dir.path().join("s.toml"))
        .unwrap()
        .replace("rho = 1.0", "rho = -1.0");
    fs::write(dir.path().join("neg.toml"), neg).unwrap();
    assert_eq!(
        code(&proxadmm(
            &["solve", "--config", "neg.toml", "--trace", "n.csv"],
            dir.path()
        )),
        1
    );
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(
        code(&proxadmm(&["verify", "--trace", "empty.csv"], dir.path())),
        1
    );
    fs::write(dir.path().join("other.csv"), "a,b\n0,1\n").unwrap();
    assert_eq!(
        code(&proxadmm(&["verify", "--trace", "other.csv"], dir.path())),
        1
    );
    assert_eq!(code(&proxadmm(&["no-such-command"], dir.path())), 1);
    assert_eq!(code(&proxadmm(&["--help"], dir.path())), 0);
}

#[test]
fn ergodic_needs_stored_iterates() {
    let dir = tempfile::tempdir().unwrap();
    solved_example(dir.path());
    let o = proxadmm(
        &[
            "solve",
            "--config",
            "s.toml",
            "--trace",
            "t.csv",
            "--ergodic",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--store-iterates"));
    let o = proxadmm(
        &[
            "solve",
            "--config",
            "s.toml",
            "--trace",
            "t.csv",
            "--ergodic",
            "3",
            "--store-iterates",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("ergodic average over 3 iterates"));
}

#[test]
fn iteration_cap_without_tolerance_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    solved_example(dir.path());
    let o = proxadmm(
        &[
            "solve",
            "--config",
            "s.toml",
            "--trace",
            "t.csv",
            "--max-iter",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn regularize_summary_feeds_verify() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&proxadmm(
            &["example", "--kind", "inverse", "--out", "inv.toml"],
            dir.path()
        )),
        0
    );
    let o = proxadmm(
        &[
            "regularize",
            "--config",
            "inv.toml",
            "--delta",
            "0.01",
            "--trace",
            "r.csv",
            "--summary",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(s["k_stop"], 100);
    let header = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(header.starts_with("k,E,Phi,err_x,err_y,err_z,feas_Az\n"));
    let o = proxadmm(
        &["verify", "--trace", "r.csv", "--reference", "r.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["checks"]["checks"].as_array().unwrap().len(), 5);
}

#[test]
fn table1_is_deterministic_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        [
            "table1",
            "--levels",
            "1e-1,1e-2",
            "--n",
            "120",
            "--seed",
            "42",
            "--out",
            out,
            "--traces",
            "tr",
        ]
    };
    assert_eq!(code(&proxadmm(&args("a.csv"), dir.path())), 0);
    assert_eq!(code(&proxadmm(&args("b.csv"), dir.path())), 0);
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert!(a.starts_with(b"delta,err_min,iter_min,ratio_half,ratio_quarter\n"));
    assert!(dir.path().join("tr/trace_delta_1e-1.csv").exists());
    let o = proxadmm(
        &["table1", "--levels", "1e-2,1e-1", "--out", "c.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn gravity_run_reports_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let o = proxadmm(
        &[
            "gravity",
            "--noise",
            "1e-2",
            "--seed",
            "1",
            "--n",
            "100",
            "--max-iter",
            "300",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"iter_min\""));
}
