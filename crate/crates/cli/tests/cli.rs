use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlc-demod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(2), "{args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    let last = err.lines().last().unwrap_or_default();
    assert!(last.starts_with("error kind="), "{err}");
    assert!(last.contains(" message=\""), "{err}");
    last.to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.owd");
    let test = dir.path().join("test.txt");
    let model = dir.path().join("mld.owm");
    ok(&[
        "generate", "--scheme", "qpsk", "--n", "20", "--k", "200", "--snr-db", "25", "--seed", "3",
        "--out", p(&train), "--test-out", p(&test), "--test-k", "80",
    ]);
    assert!(std::fs::read_to_string(&test).unwrap().starts_with('#'));
    ok(&["train", "--demod", "mld", "--data", p(&train), "--out", p(&model)]);
    let report = ok(&["eval", "--model", p(&model), "--data", p(&test)]);
    assert!(report.starts_with("accuracy=1 "), "{report}");
    assert!(report.contains("accurate_bit_rate=2 "), "{report}");
}

#[test]
fn adaboost_models_need_their_training_set() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.owd");
    let other = dir.path().join("other.owd");
    let model = dir.path().join("ada.owm");
    ok(&["generate", "--scheme", "ook", "--n", "10", "--k", "60", "--snr-db", "20", "--out", p(&train)]);
    ok(&["generate", "--scheme", "ook", "--n", "10", "--k", "60", "--snr-db", "20", "--seed", "1", "--out", p(&other)]);
    ok(&["train", "--demod", "adaboost", "--q", "3", "--data", p(&train), "--out", p(&model)]);
    let err = fails(&["eval", "--model", p(&model), "--data", p(&train)]);
    assert!(err.contains("kind=invalid_argument") || err.contains("training"), "{err}");
    fails(&["eval", "--model", p(&model), "--data", p(&train), "--train-data", p(&other)]);
    let report = ok(&["eval", "--model", p(&model), "--data", p(&train), "--train-data", p(&train)]);
    assert!(report.starts_with("accuracy="));
}

#[test]
fn sweep_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--demod=mld,adaboost,dbn".into(),
            "--scheme=ook,4ppm".into(),
            "--values=20,10,0".into(),
            "--size-factor=0.01".into(),
            "--epochs=2".into(),
            "--q=4".into(),
            "--seed=5".into(),
            format!("--out={}", out.display()),
        ]
    };
    let a_args = args(&a);
    let b_args = args(&b);
    ok(&a_args.iter().map(String::as_str).collect::<Vec<_>>());
    ok(&b_args.iter().map(String::as_str).collect::<Vec<_>>());
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("demod,scheme,axis,axis_value,"));
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 3);
}

#[test]
fn sweep_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        "# n axis\ndemods = mld\nschemes = ook\naxis = n\nvalues = 10, 20\nsize_factor = 0.01\n",
    )
    .unwrap();
    let csv = ok(&["sweep", "--config", p(&cfg), "--seed", "2"]);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("mld,ook,n,10,"), "{csv}");
    assert!(rows[1].starts_with("mld,ook,n,20,"), "{csv}");
}

#[test]
fn invalid_requests_report_one_error_line() {
    let err = fails(&["sweep", "--demod", "mld", "--values", "10,20,15"]);
    assert!(err.contains("kind=invalid_argument"), "{err}");
    let err = fails(&["generate", "--scheme", "ook", "--k", "10", "--distance-cm=-3", "--out", "/tmp/never.owd"]);
    assert!(err.contains("distance"), "{err}");
    fails(&["eval", "--model", "/nonexistent/model.owm", "--data", "/nonexistent/data.owd"]);

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.owd");
    ok(&["generate", "--scheme", "ook", "--n", "10", "--k", "20", "--out", p(&data)]);
    let err = fails(&["train", "--demod", "mld", "--scheme", "qpsk", "--data", p(&data), "--out", p(&dir.path().join("m"))]);
    assert!(err.contains("kind=scheme_mismatch"), "{err}");
}

#[test]
fn raster_dump_writes_pgm_images() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.owd");
    let out = dir.path().join("img");
    ok(&["generate", "--scheme", "4ppm", "--n", "16", "--k", "8", "--out", p(&data)]);
    ok(&["raster-dump", "--data", p(&data), "--count", "3", "--out", p(&out)]);
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3);
    let bytes = std::fs::read(out.join(&names[0])).unwrap();
    assert!(bytes.starts_with(b"P"));
}
