use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_afbench");

fn afbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(cwd).env_remove("AFBENCH_JOBS").output().expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = afbench(args, cwd);
    assert!(out.status.success(), "{:?} failed: {}", args, String::from_utf8_lossy(&out.stderr));
    out
}

fn code(args: &[&str], cwd: &Path) -> i32 {
    afbench(args, cwd).status.code().expect("exited")
}

fn write_scene(dir: &Path, size: usize) {
    let spec = format!(
        r#"{{"texture": {{"kind": "mixed"}}, "depth": {{"kind": "random_constant"}}, "seed": 3, "width": {size}, "height": {size}}}"#
    );
    fs::write(dir.join("scene.json"), spec).unwrap();
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn one_stack_has_the_full_ladder() {
    let t = tempfile::tempdir().unwrap();
    write_scene(t.path(), 16);
    ok(&["simulate", "--scene", "scene.json", "--out", "ds"], t.path());
    let stack = t.path().join("ds/stack_0000");
    assert!(stack.join("manifest.json").exists());
    for k in 0..49 {
        assert!(stack.join(format!("slice_{k}_L.pgm")).exists());
        assert!(stack.join(format!("slice_{k}_R.pgm")).exists());
    }
    assert!(!stack.join("slice_49_L.pgm").exists());
    let index: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(t.path().join("ds/dataset.json")).unwrap()).unwrap();
    assert_eq!(index["count"], 1);
    assert_eq!(index["stacks"][0], "stack_0000");
}

#[test]
fn simulation_is_byte_identical_for_a_seed() {
    let t = tempfile::tempdir().unwrap();
    write_scene(t.path(), 16);
    let args = |out: &'static str| {
        ["simulate", "--scene", "scene.json", "--count", "3", "--seed", "9", "--noise-sigma", "0.02", "--out", out]
    };
    ok(&args("a"), t.path());
    ok(&args("b"), t.path());
    assert_eq!(tree_bytes(&t.path().join("a")), tree_bytes(&t.path().join("b")));
    ok(
        &["simulate", "--scene", "scene.json", "--count", "3", "--seed", "10", "--noise-sigma", "0.02", "--out", "c"],
        t.path(),
    );
    assert_ne!(tree_bytes(&t.path().join("a")), tree_bytes(&t.path().join("c")));
}

#[test]
fn green_only_stacks() {
    let t = tempfile::tempdir().unwrap();
    write_scene(t.path(), 16);
    ok(&["simulate", "--scene", "scene.json", "--no-dual-pixel", "--out", "ds"], t.path());
    let stack = t.path().join("ds/stack_0000");
    assert!(stack.join("slice_0.pgm").exists());
    assert!(!stack.join("slice_0_L.pgm").exists());
    // the data lacks what a dual-pixel algorithm needs
    assert_eq!(code(&["eval", "--data", "ds", "--alg", "ncc"], t.path()), 3);
    ok(&["eval", "--data", "ds", "--alg", "tv_l2"], t.path());
}

#[test]
fn invalid_specs_are_usage_errors() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("bad.json"), r#"{"texture": {"kind": "plaid"}, "depth": {"kind": "constant"}}"#).unwrap();
    assert_eq!(code(&["simulate", "--scene", "bad.json", "--out", "ds"], t.path()), 2);
    assert_eq!(code(&["simulate", "--scene", "missing.json", "--out", "ds"], t.path()), 2);
    assert_eq!(code(&["simulate", "--scene", "bad.json"], t.path()), 2);
    assert_eq!(code(&["frobnicate"], t.path()), 2);
}

fn dataset(t: &Path) {
    write_scene(t, 24);
    ok(&["simulate", "--scene", "scene.json", "--count", "4", "--out", "ds"], t);
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn eval_rows_and_protocols() {
    let t = tempfile::tempdir().unwrap();
    dataset(t.path());
    let out = ok(&["eval", "--data", "ds", "--alg", "tv_l2", "--protocol", "focal_stack"], t.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.starts_with("algorithm,protocol,input_mode,within_0,within_1,within_2,within_4,mae,rmse,count,failures\n")
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][..3], ["tv_l2", "focal_stack", "green"]);
    assert_eq!(rows[0][9], "4");

    let out = ok(&["eval", "--data", "ds", "--alg", "all-contrast", "--out", "all.csv"], t.path());
    assert!(out.stdout.is_empty());
    assert_eq!(csv_rows(&fs::read_to_string(t.path().join("all.csv")).unwrap()).len(), 24);

    let out =
        ok(&["eval", "--data", "ds", "--protocol", "multi_step", "--steps", "2", "--alg", "zncc_calibrated"], t.path());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0][..3], ["zncc_calibrated", "multi_step:2", "dual_pixel"]);
    assert_eq!(rows[0][9], (4 * 49).to_string());
}

#[test]
fn eval_errors() {
    let t = tempfile::tempdir().unwrap();
    dataset(t.path());
    let out = afbench(&["eval", "--data", "ds", "--alg", "sharpness"], t.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tv_l2") && err.contains("census_hamming"), "{}", err);
    assert_eq!(code(&["eval", "--data", "nowhere", "--alg", "tv_l2"], t.path()), 2);
    assert_eq!(code(&["eval", "--data", "ds", "--alg", "tv_l2", "--protocol", "single_slice"], t.path()), 2);
    assert_eq!(
        code(
            &["eval", "--data", "ds", "--alg", "zncc_calibrated", "--protocol", "multi_step", "--steps", "1"],
            t.path()
        ),
        2
    );
    assert_eq!(code(&["eval", "--data", "ds", "--alg", "tv_l2", "--jobs", "0"], t.path()), 2);
    fs::remove_file(t.path().join("ds/stack_0002/slice_7_R.pgm")).unwrap();
    assert_eq!(code(&["eval", "--data", "ds", "--alg", "tv_l2"], t.path()), 3);
    fs::write(t.path().join("ds/dataset.json"), "{").unwrap();
    assert_eq!(code(&["eval", "--data", "ds", "--alg", "tv_l2"], t.path()), 3);
}

#[test]
fn trained_scorer_joins_the_report() {
    let t = tempfile::tempdir().unwrap();
    dataset(t.path());
    ok(&["train", "--data", "ds", "--steps", "30", "--features", "tv_l2,ncc", "--out", "scorer.json"], t.path());
    let scorer: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(t.path().join("scorer.json")).unwrap()).unwrap();
    assert_eq!(scorer["n"], 49);
    ok(&["eval", "--data", "ds", "--scorer", "scorer.json", "--alg", "tv_l2,ncc", "--out", "r.csv"], t.path());
    let rows = csv_rows(&fs::read_to_string(t.path().join("r.csv")).unwrap());
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["tv_l2", "ncc", "shallow_scorer"]);
    let report = String::from_utf8(ok(&["report", "r.csv"], t.path()).stdout).unwrap();
    assert!(report.contains("shallow_scorer") && report.contains("tv_l2"));
    assert_eq!(code(&["train", "--data", "ds", "--features", "focus", "--out", "s.json"], t.path()), 2);
    assert_eq!(code(&["eval", "--data", "ds", "--scorer", "absent.json"], t.path()), 2);
}

#[test]
fn report_ranks_and_is_byte_stable() {
    let t = tempfile::tempdir().unwrap();
    let header = "algorithm,protocol,input_mode,within_0,within_1,within_2,within_4,mae,rmse,count,failures\n";
    fs::write(
        t.path().join("a.csv"),
        format!("{header}x,focal_stack,green,0,0,0,0,3,3.5,10,0\ny,focal_stack,dual_pixel,0,0,0,0,1,1.5,10,0\n"),
    )
    .unwrap();
    fs::write(t.path().join("b.csv"), format!("{header}z,focal_stack,green,1,1,1,1,0.5,0.75,10,1\n")).unwrap();
    let first = ok(&["report", "--format", "csv", "a.csv", "b.csv"], t.path()).stdout;
    let second = ok(&["report", "--format", "csv", "a.csv", "b.csv"], t.path()).stdout;
    assert_eq!(first, second);
    let rows = csv_rows(&String::from_utf8(first).unwrap());
    let order: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(order, ["y", "z", "x"]);
    assert_eq!(rows[1][8], "0.750000");
    let md = String::from_utf8(ok(&["report", "--format", "markdown", "a.csv", "b.csv"], t.path()).stdout).unwrap();
    assert_eq!(md.lines().count(), 5);
    assert_eq!(code(&["report", "missing.csv"], t.path()), 2);
    fs::write(t.path().join("c.csv"), "name,score\nx,1\n").unwrap();
    assert_eq!(code(&["report", "c.csv"], t.path()), 3);
}

#[test]
fn jobs_fall_back_to_the_environment() {
    let t = tempfile::tempdir().unwrap();
    write_scene(t.path(), 16);
    let run = |jobs: &str, out: &str| {
        let s = Command::new(BIN)
            .args(["simulate", "--scene", "scene.json", "--count", "2", "--out", out])
            .env("AFBENCH_JOBS", jobs)
            .current_dir(t.path())
            .output()
            .unwrap();
        s.status.code()
    };
    assert_eq!(run("2", "a"), Some(0));
    assert_eq!(run("0", "b"), Some(2));
    assert_eq!(run("many", "c"), Some(2));
}
