//! End-to-end tests of the `kstab` binary on the example inputs in `data/`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn kstab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kstab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("KSTAB_THREADS")
        .output()
        .expect("failed to launch kstab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("kstab terminated by a signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_square_reports_a_and_vanishing_futaki() {
    let dir = tempfile::tempdir().unwrap();
    let out = kstab(dir.path(), &["analyze", path_str(&data("square.txt"))]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["a"], "4");
    assert_eq!(report["futaki"], serde_json::json!(["0", "0"]));
    assert_eq!(report["delzant"], true);
}

#[test]
fn analyze_weighted_segment_gives_futaki_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = kstab(dir.path(), &["analyze", path_str(&data("weighted_segment.txt"))]);
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["futaki"], serde_json::json!(["1/2"]));
    assert_eq!(report["futaki_vanishes"], false);
}

#[test]
fn analyze_trapezoid_has_nonzero_futaki_component() {
    let dir = tempfile::tempdir().unwrap();
    let out = kstab(dir.path(), &["analyze", path_str(&data("trapezoid.txt"))]);
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("report.json"));
    let futaki = report["futaki"].as_array().unwrap();
    assert!(futaki.iter().any(|c| c != "0"), "{futaki:?}");
    assert!(report["delzant"].is_boolean());
}

#[test]
fn pipeline_exit_codes() {
    let cases = [
        ("square.txt", 0),
        ("segment.txt", 0),
        ("weighted_segment.txt", 3),
        ("weighted_hexagon.txt", 2),
        ("trapezoid.txt", 3),
    ];
    for (file, expected) in cases {
        let dir = tempfile::tempdir().unwrap();
        let out = kstab(dir.path(), &["pipeline", path_str(&data(file)), "--mesh", "24"]);
        assert_eq!(code(&out), expected, "{file}: {}", stdout(&out));
        let summary = json(&dir.path().join("pipeline.json"));
        assert_eq!(summary["exit"], expected, "{file}");
    }
}

#[test]
fn solve_refuses_and_force_produces_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("weighted_segment.txt");
    let refused = kstab(dir.path(), &["solve", path_str(&input), "--mesh", "32"]);
    assert_eq!(code(&refused), 3);

    let forced = kstab(dir.path(), &["solve", path_str(&input), "--mesh", "32", "--force"]);
    assert_eq!(code(&forced), 4, "{}", stdout(&forced));
}

#[test]
fn solve_on_non_box_is_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let out = kstab(dir.path(), &["solve", path_str(&data("weighted_hexagon.txt")), "--force"]);
    assert_eq!(code(&out), 5);
}

#[test]
fn destabilize_writes_witness() {
    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("witness.json");
    let out = kstab(
        dir.path(),
        &["destabilize", path_str(&data("weighted_hexagon.txt")), "--witness", path_str(&witness)],
    );
    assert_eq!(code(&out), 0);
    let w = json(&witness);
    let text = w.to_string();
    assert!(text.contains('-'), "witness should carry a negative value: {text}");
}

#[test]
fn manifest_records_inputs_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("square.txt");
    let out = kstab(dir.path(), &["solve", path_str(&input), "--mesh", "16", "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["tool"], "kstab");
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["parameters"]["mesh"], 16);
    let contents = fs::read_to_string(&input).unwrap();
    assert_eq!(manifest["inputs"][0]["contents"], contents);
    for name in manifest["outputs"].as_array().unwrap() {
        assert!(dir.path().join(name.as_str().unwrap()).exists(), "{name} listed but missing");
    }
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let runs: &[&[&str]] = &[
        &["solve", "SQUARE", "--mesh", "16", "--perturbation", "0.1"],
        &["flow-sphere", "--random", "6", "--seed", "11"],
        &["futaki", "TRAPEZOID", "--xi", "1,0", "--kmax", "12"],
    ];
    for args in runs {
        let args: Vec<String> = args
            .iter()
            .map(|a| match *a {
                "SQUARE" => data("square.txt").display().to_string(),
                "TRAPEZOID" => data("trapezoid.txt").display().to_string(),
                other => other.to_string(),
            })
            .collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(code(&kstab(a.path(), &args)), 0);
        assert_eq!(code(&kstab(b.path(), &args)), 0);
        let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let x = fs::read(a.path().join(&name)).unwrap();
            let y = fs::read(b.path().join(&name)).unwrap();
            assert!(x == y, "{args:?}: {name:?} differs between runs");
        }
    }
}

#[test]
fn flows_classify_the_examples() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = kstab(dir.path(), &["flow-sphere", "--points", path_str(&data("sphere_22.txt"))]);
    assert_eq!(code(&sphere), 0);
    assert_eq!(json(&dir.path().join("report.json"))["verdict"]["kind"], "balanced");
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("iteration,point,x,y,z,multiplicity,moment_norm,step"));

    let sphere = kstab(dir.path(), &["flow-sphere", "--points", path_str(&data("sphere_31.txt"))]);
    assert_eq!(code(&sphere), 0);
    assert_eq!(json(&dir.path().join("report.json"))["verdict"]["kind"], "fixed-point");

    let matrix = kstab(dir.path(), &["flow-matrix", "--matrix", path_str(&data("jordan.txt"))]);
    assert_eq!(code(&matrix), 0);
    assert_eq!(json(&dir.path().join("report.json"))["verdict"]["kind"], "collapses-to-zero");
}

#[test]
fn filtration_and_ray_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = kstab(
        dir.path(),
        &["filtration", path_str(&data("abs_segment.txt")), "--piece", "1:0", "--piece", "-1:0", "--k", "32"],
    );
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let csv = fs::read_to_string(dir.path().join("filtration.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k,d_k,level_sum,F_k,estimate");

    let out = kstab(dir.path(), &["ray", path_str(&data("segment.txt")), "--hessian", "0", "--linear", "1", "--mesh", "32"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(dir.path().join("ladder.csv").exists());
}

#[test]
fn parse_errors_exit_one_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "dim 2\nvertices\n0 0\n1 x\n").unwrap();
    let out = kstab(dir.path(), &["analyze", path_str(&bad)]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}
