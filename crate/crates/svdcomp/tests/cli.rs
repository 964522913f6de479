//! Integration tests against the compiled binary: exit-code classes,
//! output shapes, and run-to-run determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn svdcomp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svdcomp"))
        .args(args)
        .current_dir(dir)
        .env_remove("SVDCOMP_DATA_DIR")
        .env_remove("SVDCOMP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn calibrate_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = svdcomp(&["calibrate", "--synthetic", "--out", "a.json"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = svdcomp(&["calibrate", "--synthetic", "--out", "b.json"], dir.path());
    assert!(b.status.success());
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("b.json")).unwrap()
    );
    // Stdout matches too, apart from the echoed output path.
    let tail = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(tail(&stdout(&a)), tail(&stdout(&b)));
    assert!(stdout(&a).contains("explained_fraction_1"));
}

#[test]
fn predict_shapes_and_flag_plumbing() {
    let dir = tempfile::tempdir().unwrap();
    assert!(svdcomp(
        &["calibrate", "--synthetic", "--out", "model.json"],
        dir.path()
    )
    .status
    .success());

    let out = svdcomp(
        &[
            "predict",
            "--model",
            "model.json",
            "--sex",
            "female",
            "--q5",
            "0.05",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "age,qx");
    assert_eq!(lines.len(), 111);
    assert!(String::from_utf8_lossy(&out.stderr).contains("q45_source=predicted"));

    let out = svdcomp(
        &[
            "predict",
            "--model",
            "model.json",
            "--sex",
            "male",
            "--q5",
            "0.05",
            "--q45",
            "0.2",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["q45_source"], "input");
    assert_eq!(doc["q45_used"], 0.2);
}

#[test]
fn exit_codes_partition_by_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    assert!(svdcomp(
        &["calibrate", "--synthetic", "--out", "model.json"],
        dir.path()
    )
    .status
    .success());

    // Usage: probability out of range.
    let out = svdcomp(
        &[
            "predict",
            "--model",
            "model.json",
            "--sex",
            "female",
            "--q5",
            "1.5",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // Io: missing model file.
    let out = svdcomp(
        &[
            "predict",
            "--model",
            "missing.json",
            "--sex",
            "female",
            "--q5",
            "0.05",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));

    // Io: empty data directory means no input data.
    fs::create_dir(dir.path().join("empty")).unwrap();
    let out = svdcomp(
        &["calibrate", "--data-dir", "empty", "--out", "x.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no input data"));
    assert!(!dir.path().join("x.json").exists());

    // Parse: malformed life-table file.
    fs::create_dir(dir.path().join("bad")).unwrap();
    fs::write(
        dir.path().join("bad/XX.fltper_1x1.txt"),
        "not a life table\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("bad/XX.mltper_1x1.txt"),
        "not a life table\n",
    )
    .unwrap();
    let out = svdcomp(
        &["calibrate", "--data-dir", "bad", "--out", "x.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));

    // Numeric failures are distinct from usage: a corpus too small for
    // the weight regressions.
    let out = svdcomp(
        &[
            "validate",
            "--synthetic",
            "--samples",
            "1",
            "--fraction",
            "0.04",
            "--seed",
            "1",
            "--out-dir",
            "cv_bad",
        ],
        dir.path(),
    );
    // Per-sample calibration failures are recorded, not fatal.
    assert!(out.status.success());
    assert!(stdout(&out).contains("failed samples: 1"));
}

#[test]
fn validate_is_deterministic_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    for tag in ["one", "two"] {
        let out = svdcomp(
            &[
                "validate",
                "--synthetic",
                "--samples",
                "2",
                "--fraction",
                "0.5",
                "--seed",
                "7",
                "--out-dir",
                tag,
            ],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let mut names: Vec<String> = fs::read_dir(dir.path().join("one"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names.len(),
        2 * 2 * 2 + 4,
        "per-sample plus aggregate files"
    );
    for name in names {
        let a = fs::read(dir.path().join("one").join(&name)).unwrap();
        let b = fs::read(dir.path().join("two").join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn compare_emits_the_eight_row_table() {
    let dir = tempfile::tempdir().unwrap();
    assert!(svdcomp(
        &["calibrate", "--synthetic", "--out", "model.json"],
        dir.path()
    )
    .status
    .success());
    let out = svdcomp(
        &[
            "compare",
            "--synthetic",
            "--model",
            "model.json",
            "--demo-baseline",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "sex,row,summary,c1_q5_only,c2_q5_q45,c3_difference"
    );
    assert_eq!(lines.len(), 9);
    for (i, row) in ["R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8"]
        .iter()
        .enumerate()
    {
        assert!(
            lines[i + 1].contains(row),
            "line {}: {}",
            i + 1,
            lines[i + 1]
        );
    }
}

#[test]
fn sweep_produces_per_fraction_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = svdcomp(
        &[
            "validate",
            "--synthetic",
            "--samples",
            "1",
            "--sweep",
            "0.3:0.7:0.4",
            "--seed",
            "3",
            "--out-dir",
            "sweep",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let names: Vec<String> = fs::read_dir(dir.path().join("sweep"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("sweep_0.30_")));
    assert!(names.iter().any(|n| n.starts_with("sweep_0.70_")));
}

#[test]
fn inspect_reports_model_metadata() {
    let dir = tempfile::tempdir().unwrap();
    assert!(svdcomp(
        &["calibrate", "--synthetic", "--out", "model.json"],
        dir.path()
    )
    .status
    .success());
    let out = svdcomp(&["inspect", "--model", "model.json"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("format_version: 1"));
    assert!(text.contains("offset: -10"));
    assert!(text.contains("components: 4"));
    assert!(text.contains("corpus_fingerprint: "));
}

#[test]
fn bundled_data_files_calibrate_through_the_parser() {
    // The shipped HMD-format synthetic files drive the full pipeline.
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    let dir = tempfile::tempdir().unwrap();
    let out = svdcomp(
        &[
            "calibrate",
            "--data-dir",
            data.to_str().unwrap(),
            "--out",
            "model.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("96 female, 96 male"));
}
