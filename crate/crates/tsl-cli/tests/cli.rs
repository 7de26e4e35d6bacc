//! End-to-end tests of the `tsl` binary: verbs, exit codes, and the
//! determinism contract (identical inputs, byte-identical reports).

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const KL2: &str = r#"{"p": 3, "m": 1, "f": [{"coeff": 1, "exp": [1]}], "mu": [-1]}"#;
const KL3: &str = r#"{"p": 3, "m": 1,
    "f": [{"coeff": 1, "exp": [1, 0]}, {"coeff": 1, "exp": [0, 1]}],
    "mu": [-1, -1]}"#;

fn write_problem(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn tsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsl"))
        .args(args)
        .env_remove("TSL_CACHE_DIR")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_reports_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "kl2.json", KL2);
    let out = tsl(&["analyze", "--problem", problem.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["report"]["d"], 1);
    assert_eq!(v["report"]["rank"], 2);
    assert_eq!(v["report"]["case"], "below");
    assert_eq!(v["manifest"]["command"], "analyze");
    assert_eq!(v["manifest"]["input_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn analyze_names_malformed_term_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        "bad.json",
        r#"{"p": 3, "m": 1, "f": [{"coeff": 1, "exp": [1, 2]}], "mu": [-1]}"#,
    );
    let out = tsl(&["analyze", "--problem", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("f[0]"), "{err}");
    assert!(err.contains("length 2, expected 1"), "{err}");
}

#[test]
fn analyze_rejects_isobaric_deformation_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        "isobaric.json",
        r#"{"p": 3, "m": 1, "f": [{"coeff": 1, "exp": [1]}], "mu": [1]}"#,
    );
    let out = tsl(&["analyze", "--problem", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_passes_clean_family_and_fails_facet_divisor() {
    let dir = tempfile::tempdir().unwrap();
    let kl3_p5 = write_problem(
        dir.path(),
        "kl3p5.json",
        r#"{"p": 5, "m": 1,
            "f": [{"coeff": 1, "exp": [1, 0]}, {"coeff": 1, "exp": [0, 1]}],
            "mu": [-1, -1]}"#,
    );
    let out = tsl(&["check", "--problem", kl3_p5.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["report"]["all_pass"], true);

    // p = 3 divides the facet value at mu = (-3, -2).
    let divisor = write_problem(
        dir.path(),
        "divisor.json",
        r#"{"p": 3, "m": 1,
            "f": [{"coeff": 1, "exp": [1, 0]}, {"coeff": 1, "exp": [0, 1]}],
            "mu": [-3, -2]}"#,
    );
    let out = tsl(&["check", "--problem", divisor.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["all_pass"], false);
    assert!(v["report"]["hypotheses"]["h5"]["Fail"].is_string());

    let skew = write_problem(
        dir.path(),
        "skew.json",
        r#"{"p": 3, "m": 1,
            "f": [{"coeff": 1, "exp": [1]}, {"coeff": 1, "exp": [2]}],
            "mu": [-1]}"#,
    );
    let out = tsl(&["check", "--problem", skew.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["report"]["hypotheses"]["h2"]["Fail"].is_string());
}

#[test]
fn fiber_all_degree_two_lists_five_orbits() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "kl2.json", KL2);
    let out = tsl(&[
        "fiber",
        "--problem",
        problem.to_str().unwrap(),
        "--lambda",
        "all",
        "--max-degree",
        "2",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["report"]["count"], 5);
    assert_eq!(v["report"]["all_dominate"], true);
    let first = &v["report"]["reports"][0];
    assert_eq!(first["lambda"]["degree"], 1);
    assert_eq!(first["lambda"]["rep"], serde_json::json!([1]));
    let lpoly: Vec<&Value> = first["lpoly"].as_array().unwrap().iter().collect();
    assert_eq!(lpoly[0]["coeffs"], serde_json::json!(["1", "0"]));
    assert_eq!(lpoly[1]["coeffs"], serde_json::json!(["-1", "0"]));
    assert_eq!(lpoly[2]["coeffs"], serde_json::json!(["3", "0"]));
    assert_eq!(first["slopes"], serde_json::json!(["0", "1"]));
}

#[test]
fn basis_lists_monomials_with_weights() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "kl3.json", KL3);
    let out = tsl(&["basis", "--problem", problem.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["report"]["rank"], 3);
    let weights: Vec<&str> = v["report"]["elements"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["weight"].as_str().unwrap())
        .collect();
    assert_eq!(weights, ["0", "1", "2"]);
}

#[test]
fn global_sym2_reports_cross_checked_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "kl2.json", KL2);
    let out = tsl(&[
        "global",
        "--problem",
        problem.to_str().unwrap(),
        "--op",
        "sym2",
        "--dmax",
        "2",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["report"]["op"], "sym2");
    assert_eq!(v["report"]["domain"], "gm");
    assert_eq!(v["report"]["cross_check"], "euler-moment-exact");
    assert_eq!(v["report"]["coefficients"].as_array().unwrap().len(), 3);
    assert_eq!(v["report"]["degree_bounds"]["forces_r_equals_s"], true);
    assert_eq!(v["manifest"]["command"], "global --op sym2 --dmax 2 --domain gm");
}

#[test]
fn reports_are_byte_identical_across_reruns_and_cache_states() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "kl2.json", KL2);
    let cache = dir.path().join("cache");
    let args = [
        "fiber",
        "--problem",
        problem.to_str().unwrap(),
        "--lambda",
        "all",
        "--max-degree",
        "2",
    ];
    let plain = tsl(&args);
    let mut with_cache = args.to_vec();
    with_cache.extend(["--cache-dir", cache.to_str().unwrap()]);
    let cold = tsl(&with_cache);
    let warm = tsl(&with_cache);
    assert!(plain.status.success());
    assert_eq!(plain.stdout, cold.stdout);
    assert_eq!(cold.stdout, warm.stdout);
    // Volatile statistics go to stderr, not into the report.
    assert!(String::from_utf8_lossy(&warm.stderr).contains("cache_hits"));
    assert!(!String::from_utf8_lossy(&warm.stdout).contains("wall_ms"));
}

#[test]
fn json_out_writes_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "kl2.json", KL2);
    let out_path = dir.path().join("report.json");
    let out = tsl(&[
        "analyze",
        "--problem",
        problem.to_str().unwrap(),
        "--json-out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["report"]["rank"], 2);
}

#[test]
fn ceiling_stops_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "kl2.json", KL2);
    let out = tsl(&[
        "fiber",
        "--problem",
        problem.to_str().unwrap(),
        "--lambda",
        "1",
        "--ceiling",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn lambda_validation_rejects_bad_values() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "kl2.json", KL2);
    let zero = tsl(&["fiber", "--problem", problem.to_str().unwrap(), "--lambda", "0"]);
    assert_eq!(zero.status.code(), Some(1));
    // 1 read as a two-coordinate element generates a proper subfield.
    let subfield = tsl(&["fiber", "--problem", problem.to_str().unwrap(), "--lambda", "1,0"]);
    assert_eq!(subfield.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&subfield.stderr).contains("degree 1"));
    // A genuine degree-2 point works.
    let deg2 = tsl(&["fiber", "--problem", problem.to_str().unwrap(), "--lambda", "0,1"]);
    let v = stdout_json(&deg2);
    assert_eq!(v["report"]["reports"][0]["lambda"]["degree"], 2);
}

#[test]
fn rescaled_deformation_matches_pure_family_at_cubed_fiber() {
    let dir = tempfile::tempdir().unwrap();
    let pure = write_problem(dir.path(), "kl2.json", KL2);
    let cubed = write_problem(
        dir.path(),
        "kl2cubed.json",
        r#"{"p": 3, "m": 1, "f": [{"coeff": 1, "exp": [1]}], "mu": [-1],
            "deformation_exponent": 3}"#,
    );
    // Over F_3, lambda^3 = lambda, so every fiber of the rescaled family
    // equals the matching fiber of the pure one.
    let a = stdout_json(&tsl(&["fiber", "--problem", pure.to_str().unwrap(), "--lambda", "2"]));
    let b = stdout_json(&tsl(&["fiber", "--problem", cubed.to_str().unwrap(), "--lambda", "2"]));
    assert_eq!(a["report"]["reports"][0]["lpoly"], b["report"]["reports"][0]["lpoly"]);
    assert_eq!(a["report"]["reports"][0]["slopes"], b["report"]["reports"][0]["slopes"]);
}

#[test]
fn cache_gc_removes_stale_entries() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "kl2.json", KL2);
    let cache = dir.path().join("cache");
    let out = tsl(&[
        "fiber",
        "--problem",
        problem.to_str().unwrap(),
        "--lambda",
        "1",
        "--cache-dir",
        cache.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let kept = tsl(&["cache", "gc", "--cache-dir", cache.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&kept.stdout).unwrap();
    assert_eq!(v["removed"], 0);
    assert!(v["kept"].as_u64().unwrap() > 0);
    let swept = tsl(&[
        "cache",
        "gc",
        "--cache-dir",
        cache.to_str().unwrap(),
        "--max-age-days",
        "0",
    ]);
    let v: Value = serde_json::from_slice(&swept.stdout).unwrap();
    assert_eq!(v["kept"], 0);
    assert!(v["removed"].as_u64().unwrap() > 0);
}
