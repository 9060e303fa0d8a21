use std::path::PathBuf;
use std::process::{Command, Output};

fn pleb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pleb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pullback.json")
}

#[test]
fn unknown_suite_is_a_usage_error() {
    assert_eq!(pleb(&["verify", "bogus"]).status.code(), Some(2));
}

#[test]
fn too_small_lattice_is_a_usage_error() {
    assert_eq!(
        pleb(&["verify", "algebra", "--n", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_triple_file_is_a_usage_error() {
    assert_eq!(
        pleb(&["verify", "algebra", "--triple", "/nonexistent/triple.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn help_exits_zero() {
    let o = pleb(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verify"));
}

#[test]
fn solve_b_coeffs_recovers_plebanski_values() {
    let o = pleb(&[
        "solve",
        "b-coeffs",
        "--a",
        "1,1/4,1/2",
        "--c",
        "0,1",
        "--b1",
        "1/4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "b = 1/4, 2, 0, 0, -1");
}

#[test]
fn solve_b_coeffs_rejects_equal_c() {
    let o = pleb(&["solve", "b-coeffs", "--c", "1,1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_b_coeffs_rejects_malformed_lists() {
    assert_eq!(
        pleb(&["solve", "b-coeffs", "--a", "1,2"]).status.code(),
        Some(2)
    );
}

#[test]
fn solve_inner_products_for_plebanski_operators() {
    let o = pleb(&["solve", "inner-products", "--pleb"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("beta = (1/4, 8, 1), gamma = (1, 0)"),
        "{text}"
    );
    assert!(
        text.contains("(h, h^i, h~, chi) = (-1, -1, -1, -2)"),
        "{text}"
    );
}

#[test]
fn solve_adjoints_for_plebanski_grams() {
    let o = pleb(&["solve", "adjoints", "--pleb"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("lattice pairing residual"));
}

#[test]
fn verify_split_passes() {
    let o = pleb(&["verify", "split"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
}

#[test]
fn json_report_has_the_check_schema() {
    let dir = std::env::temp_dir().join(format!("pleb-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("algebra.json");
    let o = pleb(&["verify", "algebra", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["suite"], "algebra");
    assert_eq!(v["pass"], true);
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        let mut keys: Vec<&str> = c.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "check_id",
                "paper_ref",
                "residual",
                "seed",
                "status",
                "tolerance"
            ]
        );
        assert_eq!(c["status"], "pass");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn reports_are_deterministic_for_a_seed() {
    let a = pleb(&[
        "verify", "complex", "--json", "--seed", "5", "--trials", "5",
    ]);
    let b = pleb(&[
        "verify",
        "complex",
        "--json",
        "--seed",
        "5",
        "--trials",
        "5",
        "--threads",
        "1",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn fixture_triple_passes_decomposition() {
    let o = pleb(&[
        "verify",
        "decompose",
        "--triple",
        fixture().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn impossible_tolerance_fails_with_exit_one() {
    let o = pleb(&["verify", "algebra", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAILED"));
}
