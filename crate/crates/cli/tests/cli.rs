//! End-to-end tests of the installed binary: exit codes, output files,
//! determinism and the config round trip.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use weedrec_core::eval;
use weedrec_core::synth::{self, SynthConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weedrec"))
}

fn write_dataset(dir: &Path) -> PathBuf {
    let cfg = SynthConfig {
        users: 40,
        items: 30,
        target_ratings: 700,
        clusters: 3,
        ..SynthConfig::filmtrust()
    };
    let m = synth::generate(&cfg, 11);
    let mut out = Vec::new();
    m.write_triples(&mut out).unwrap();
    let path = dir.join("demo.txt");
    fs::write(&path, out).unwrap();
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn validate_prints_summary_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let out = bin()
        .args(["validate", "--dataset"])
        .arg(&data)
        .args(["--format", "filmtrust"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("40 users, 30 items"), "{text}");
    assert!(text.contains("scale [0.5, 4]"), "{text}");
    assert!(text.contains("ok"));
}

#[test]
fn validate_missing_file_exits_1() {
    let out = bin()
        .args(["validate", "--dataset", "/nonexistent/nope.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("file not found"), "{}", stderr(&out));
}

#[test]
fn validate_scale_violation_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "1 1 2.0\n2 1 9.0\n").unwrap();
    let out = bin()
        .args(["validate", "--dataset"])
        .arg(&path)
        .args(["--format", "filmtrust"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("9"), "{err}");
}

#[test]
fn evaluate_user_mean_has_full_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let report_path = dir.path().join("report.json");
    let csv_path = dir.path().join("pairs.csv");
    let out = bin()
        .current_dir(dir.path())
        .args(["evaluate", "--dataset"])
        .arg(&data)
        .args(["--format", "filmtrust", "--baseline", "user-mean"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let report = eval::from_json(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.coverage, 1.0);
    assert_eq!(report.z_predictions, report.per_pair.len());
    assert!(report.rmse >= report.mae);

    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("user,item,actual,predicted,used_fallback\n"));
    assert_eq!(csv.lines().count(), 1 + report.z_predictions);
}

#[test]
fn evaluate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let args = [
        "--format",
        "filmtrust",
        "--baseline",
        "proposed",
        "--iterations",
        "30",
        "--pop-max",
        "40",
        "--seed",
        "7",
    ];
    let run = |name: &str| {
        let out = bin()
            .current_dir(dir.path())
            .args(["evaluate", "--dataset"])
            .arg(&data)
            .args(args)
            .args(["--out-json", name])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read(dir.path().join(name)).unwrap()
    };
    let a = run("a.json");
    let b = run("b.json");
    assert_eq!(a, b, "identical runs produced different bytes");
}

#[test]
fn emitted_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .args(["evaluate", "--dataset"])
        .arg(&data)
        .args([
            "--format",
            "filmtrust",
            "--baseline",
            "pcc-topk-unweighted",
            "--theta",
            "0.35",
            "--split-seed",
            "9",
            "--out-json",
            "first.json",
            "--emit-config",
            "effective.conf",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    // re-run from the emitted config alone, redirecting only the output
    let out = bin()
        .current_dir(dir.path())
        .args(["--config", "effective.conf"])
        .args(["evaluate", "--out-json", "second.json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let first = fs::read(dir.path().join("first.json")).unwrap();
    let second = fs::read(dir.path().join("second.json")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn flags_beat_env_and_env_beats_default() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let eval_args = [
        "--format",
        "filmtrust",
        "--baseline",
        "user-mean",
        "--test-fraction",
        "0.3",
    ];

    // env-provided seed equals the same seed given as a flag
    let via_env = bin()
        .current_dir(dir.path())
        .env("WEEDREC_SEED", "5")
        .args(["evaluate", "--dataset"])
        .arg(&data)
        .args(eval_args)
        .args(["--split-seed", "5", "--out-json", "env.json"])
        .output()
        .unwrap();
    assert!(via_env.status.success(), "{}", stderr(&via_env));
    let via_flag = bin()
        .current_dir(dir.path())
        .args(["evaluate", "--dataset"])
        .arg(&data)
        .args(eval_args)
        .args(["--seed", "5", "--split-seed", "5", "--out-json", "flag.json"])
        .output()
        .unwrap();
    assert!(via_flag.status.success(), "{}", stderr(&via_flag));
    assert_eq!(
        fs::read(dir.path().join("env.json")).unwrap(),
        fs::read(dir.path().join("flag.json")).unwrap()
    );

    // an explicit flag wins over the environment
    let out = bin()
        .current_dir(dir.path())
        .env("WEEDREC_SEED", "999")
        .args(["evaluate", "--dataset"])
        .arg(&data)
        .args(eval_args)
        .args(["--seed", "5", "--split-seed", "5", "--out-json", "both.json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read(dir.path().join("flag.json")).unwrap(),
        fs::read(dir.path().join("both.json")).unwrap()
    );
}

#[test]
fn predict_happy_path_and_unknown_user() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());

    let out = bin()
        .args(["predict", "--dataset"])
        .arg(&data)
        .args([
            "--format",
            "filmtrust",
            "--user",
            "1",
            "--item",
            "1",
            "--iterations",
            "30",
            "--pop-max",
            "40",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("user=1 item=1 predicted="), "{text}");
    assert!(text.contains("fallback="), "{text}");

    // an item nobody rated falls back but still predicts
    let out = bin()
        .args(["predict", "--dataset"])
        .arg(&data)
        .args([
            "--format",
            "filmtrust",
            "--user",
            "1",
            "--item",
            "99999",
            "--iterations",
            "30",
            "--pop-max",
            "40",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("fallback=true"), "{}", stdout(&out));

    let out = bin()
        .args(["predict", "--dataset"])
        .arg(&data)
        .args(["--format", "filmtrust", "--user", "424242", "--item", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown user"), "{}", stderr(&out));
}

#[test]
fn predict_uses_the_model_cache() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let cache = dir.path().join("models.txt");

    // handcrafted cache: user 1 trusts only user 2, whose rating of the
    // item is known from the dataset
    let m = synth::generate(
        &SynthConfig {
            users: 40,
            items: 30,
            target_ratings: 700,
            clusters: 3,
            ..SynthConfig::filmtrust()
        },
        11,
    );
    let (item, rating) = {
        let vi = m.user_index(weedrec_core::UserId(2)).unwrap();
        let &(ii, r) = m.ratings_of(vi).first().unwrap();
        (m.item_id(ii), r)
    };
    fs::write(&cache, "1, 2:1, 0.5\n").unwrap();

    let out = bin()
        .args(["predict", "--dataset"])
        .arg(&data)
        .args(["--format", "filmtrust", "--user", "1"])
        .args(["--item", &item.0.to_string()])
        .args(["--models"])
        .arg(&cache)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains(&format!("predicted={rating}")),
        "cache not used: {text} (expected {rating})"
    );
    assert!(text.contains("fallback=false"), "{text}");
}

#[test]
fn trace_writes_monotone_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let trace_path = dir.path().join("trace.csv");

    let out = bin()
        .args(["trace", "--dataset"])
        .arg(&data)
        .args([
            "--format",
            "filmtrust",
            "--user",
            "1",
            "--iterations",
            "40",
            "--pop-max",
            "40",
        ])
        .args(["--out"])
        .arg(&trace_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let csv = fs::read_to_string(&trace_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,best,worst,pop,sigma"));
    let mut prev = f64::INFINITY;
    let mut rows = 0;
    for line in lines {
        let best: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(best <= prev);
        prev = best;
        rows += 1;
    }
    assert_eq!(rows, 41); // t = 0..=40

    let out = bin()
        .args(["trace", "--dataset"])
        .arg(&data)
        .args(["--format", "filmtrust", "--user", "424242"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "not-a-key = 1\n").unwrap();
    let out = bin()
        .args(["--config"])
        .arg(&conf)
        .args(["validate", "--dataset", "whatever.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown config key"), "{}", stderr(&out));
}
