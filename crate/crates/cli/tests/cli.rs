use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tspec(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tspec"))
        .args(args)
        .env("TSPEC_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn example_gap_reports_three_fifths() {
    let dir = tempfile::tempdir().unwrap();
    let o = tspec(dir.path(), &["example-gap", "--m", "10", "--c", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("gap 0.6 > 0.5"), "{text}");
    assert!(text.contains("smallest m with (m-4)/m > 0.5: 9"));
    let gap: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("gap.json")).unwrap()).unwrap();
    assert_eq!(gap["result"]["gap"]["value"], "3/5");
    assert_eq!(gap["header"]["command"], "example-gap");
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("# {"));
    assert!(csv.lines().nth(1).unwrap().starts_with("experiment,m,n,"));
}

#[test]
fn gap_threshold_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = tspec(dir.path(), &["example-gap", "--m", "10", "--c", "0.6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("gap 0.6 <= 0.6"));
}

#[test]
fn jump_shift_on_beta_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = tspec(dir.path(), &["--map", "builtin:beta:3/2", "verify", "jump-shift", "--k", "1..32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("jump-shift PASS"));
    assert!(dir.path().join("jump_shift.json").exists());
}

#[test]
fn doubling_is_markov_with_zero_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let o = tspec(dir.path(), &["--map", "builtin:doubling", "lambda", "--depth", "16"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("Markov"), "{text}");
    assert!(text.contains("Λ^inf = 0 (exact)"));
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert!(tspec(dir.path(), &["--seed", "7", "verify", "ly", "--n", "1..4"]).status.success());
        assert!(tspec(dir.path(), &["ulam", "--m-list", "32,64"]).status.success());
    }
    for name in ["ly.json", "results.csv", "eigenvalues.csv", "spectrum.svg", "ulam.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn ulam_writes_plot_with_both_circles() {
    let dir = tempfile::tempdir().unwrap();
    let o = tspec(dir.path(), &["--map", "builtin:example:10:tm", "ulam", "--m-list", "64", "--n-range", "1..6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(dir.path().join("spectrum.svg")).unwrap();
    assert!(svg.contains("stroke-dasharray"));
    assert!(svg.contains("discretization spectrum, M = 64"));
}

#[test]
fn map_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"breakpoints":["0","1/2","1"],"branches":[{"coeffs":["0","2"]},{"coeffs":["-1","2"]}]}"#;
    let path = dir.path().join("halves.json");
    fs::write(&path, spec).unwrap();
    let o = tspec(dir.path(), &["--map", path.to_str().unwrap(), "orbits", "--depth", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("map halves"));
}

#[test]
fn bad_inputs_fail_with_messages() {
    let dir = tempfile::tempdir().unwrap();
    let o = tspec(dir.path(), &["--map", "builtin:nope", "orbits"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown map source"));
    let o = tspec(dir.path(), &["--weight", "poly:0", "orbits"]);
    assert_eq!(o.status.code(), Some(2));
    let o = tspec(dir.path(), &["verify", "ly", "--lambda-tilde", "1/2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("must exceed"));
}
