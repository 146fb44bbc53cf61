use std::path::PathBuf;
use std::process::Command;

use treegrp_cli::{run, Outcome};

fn treegrp(args: &[&str]) -> Outcome {
    run(std::iter::once("treegrp").chain(args.iter().copied()))
}

/// A fresh directory under the system temp dir, one per test.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("treegrp-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn validate_on_builder_output_matches_golden() {
    let out = treegrp(&["scaffold", "validate"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout, golden("validate.txt"));
}

#[test]
fn rank_two_search_matches_golden() {
    let out = treegrp(&["endo", "search", "--stage-bound", "1"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, golden("search.txt"));
    assert!(out.stdout.contains("survivors 2\n"));
    assert!(out.stdout.contains("only id and -id: true"));
}

#[test]
fn built_dump_round_trips_through_validate() {
    let dir = scratch("roundtrip");
    let dump = dir.join("chain.dump");
    let built = treegrp(&["scaffold", "build", "--save", dump.to_str().unwrap()]);
    assert_eq!(built.code, 0);
    let checked = treegrp(&["scaffold", "validate", "--dump", dump.to_str().unwrap()]);
    assert_eq!(checked.code, 0);
    assert!(checked.stdout.ends_with("status: ok\n"));
}

#[test]
fn corrupted_dump_names_the_clause() {
    let dir = scratch("corrupt");
    let dump = dir.join("chain.dump");
    treegrp(&["scaffold", "build", "--save", dump.to_str().unwrap()]);
    let text = std::fs::read_to_string(&dump).unwrap();
    let broken = text.replace("x2->x0", "x2->x1");
    assert_ne!(broken, text);
    std::fs::write(&dump, broken).unwrap();
    let out = treegrp(&["scaffold", "validate", "--dump", dump.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("clause d: FAIL"));
    assert!(out.stdout.ends_with("status: FAIL (clause (d))\n"));
}

#[test]
fn search_without_stage_bound_is_a_usage_error() {
    let out = treegrp(&["endo", "search"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("--stage-bound"));
    assert!(out.stdout.ends_with("status: error (missing budget --stage-bound)\n"));
}

#[test]
fn unknown_verb_and_bad_flags_exit_two() {
    assert_eq!(treegrp(&["frobnicate"]).code, 2);
    assert_eq!(treegrp(&["divides", "--p", "2"]).code, 2);
    assert_eq!(treegrp(&["endo", "search", "--stage-bound", "x"]).code, 2);
}

#[test]
fn help_and_version_exit_zero() {
    let help = treegrp(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("report"));
    let version = treegrp(&["--version"]);
    assert_eq!(version.code, 0);
    assert!(version.stdout.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn missing_input_file_exits_three() {
    let out = treegrp(&["scaffold", "validate", "--dump", "/nonexistent/treegrp.dump"]);
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("/nonexistent/treegrp.dump"));
}

#[test]
fn out_flag_writes_the_report() {
    let dir = scratch("out");
    let path = dir.join("report.txt");
    let out = treegrp(&["--out", path.to_str().unwrap(), "profinite", "bezout", "--primes", "2,3,5,7", "--m", "2"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("treegrp-report v1\n"));
    assert!(text.contains("sum l_p * k / p^2 = 1: pass"));
}

#[test]
fn bad_input_and_foreign_vectors() {
    let out = treegrp(&["profinite", "bezout", "--primes", "2,4"]);
    assert_eq!(out.code, 2);
    assert!(out.stdout.ends_with("status: error (bad input: 4 is not prime)\n"));
    // A vector supported off the scaffold is simply not divisible.
    let out = treegrp(&["divides", "--a", "x99", "--p", "2"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("divides: false"));
}

#[test]
fn report_is_deterministic_and_green() {
    let a = treegrp(&["report"]);
    let b = treegrp(&["report"]);
    assert_eq!(a.code, 0, "{}", a.stdout);
    assert_eq!(a, b);
    assert_eq!(a.stdout, golden("report.txt"));
    let other_seed = treegrp(&["--seed", "7", "report"]);
    assert_ne!(other_seed.stdout, a.stdout);
}

#[test]
fn binary_matches_in_process_run() {
    let o = Command::new(env!("CARGO_BIN_EXE_treegrp"))
        .args(["nil2", "check", "--samples", "10"])
        .output()
        .unwrap();
    let inproc = treegrp(&["nil2", "check", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(inproc.code));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), inproc.stdout);
}
