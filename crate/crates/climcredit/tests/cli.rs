use std::path::Path;
use std::process::Command;

fn climcredit(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_climcredit")).args(args).output().unwrap()
}

fn code(out: &std::process::Output) -> i32 {
    out.status.code().unwrap()
}

fn demo(out: &Path) {
    let o = climcredit(&["demo", "--out", out.to_str().unwrap(), "--paths", "500"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn demo_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    for f in ["bundle.json", "report.csv", "report.json", "plot_pd.csv", "data/config.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    let cfg = dir.path().join("data/config.json");
    let cfg_s = cfg.to_str().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();

    let ok = climcredit(&["validate", "--config", cfg_s, "--out", out_s]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("bundle.json").is_file());

    let missing = climcredit(&["risk", "--config", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(code(&missing), 2);

    let bad_alpha = climcredit(&["risk", "--config", cfg_s, "--alpha", "1.5", "--out", out_s]);
    assert_eq!(code(&bad_alpha), 2);

    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    json["scenarios"][0]["delta0"] = 1.0e5.into();
    json["scenarios"][0]["path"] = serde_json::json!({"geometric": {"growth": 0.0}});
    let extreme = dir.path().join("data/extreme.json");
    std::fs::write(&extreme, json.to_string()).unwrap();
    let ill = climcredit(&["risk", "--config", extreme.to_str().unwrap(), "--out", out_s]);
    assert_eq!(code(&ill), 3, "{}", String::from_utf8_lossy(&ill.stderr));
}

#[test]
fn seed_and_paths_flags_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    let cfg = dir.path().join("data/config.json");
    let out = dir.path().join("run");
    let o = climcredit(&[
        "risk",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--paths",
        "1000",
        "--workers",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = climcredit::report::read_csv(&out.join("report.csv")).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.seed == 7 && r.paths == 1000));
}
