use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kinkfield_cli::config::ExperimentConfig;
use serde_json::Value;

fn kinkfield(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kinkfield"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("KINKFIELD_THREADS", t),
        None => cmd.env_remove("KINKFIELD_THREADS"),
    };
    cmd.output().expect("spawn kinkfield")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_mode(mode: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![mode, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    kinkfield(&args, Some("1"))
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const SMALL_SAMPLE: &str = r#"{"eps":[0.3],"charge":2,"length":8.0,"grid":{"spacing":0.1},
 "sampler":{"n_steps":3000,"burn_in":500,"thinning":10}}"#;

#[test]
fn missing_config_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_mode("sample", &dir.path().join("absent.json"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(64), "{}", text(&o));
}

#[test]
fn syntax_error_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"eps\": [0.1,\n  oops\n}");
    let o = run_mode("sample", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(64));
    assert!(text(&o).contains("bad.json:3:"), "{}", text(&o));
}

#[test]
fn field_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"eps":[0.2,-0.1]}"#, "eps[1]"),
        (r#"{"sampler":{"n_steps":100,"burn_in":200}}"#, "sampler.burn_in"),
        (r#"{"schema_version":99}"#, "schema_version"),
        (r#"{"unknown_key":1}"#, "unknown_key"),
        (r#"{"mode":"spectrum"}"#, "mode"),
    ];
    for (i, (cfg, field)) in cases.iter().enumerate() {
        let p = write_config(dir.path(), &format!("c{i}.json"), cfg);
        let o = run_mode("sample", &p, &dir.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(64), "{cfg}: {}", text(&o));
        assert!(text(&o).contains(field), "{cfg}: {}", text(&o));
    }
}

#[test]
fn bad_usage_and_threads_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_SAMPLE);
    let o = run_mode("no-such-mode", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(64));
    let o = kinkfield(&["sample"], None);
    assert_eq!(o.status.code(), Some(64));
    let o = kinkfield(&["sample", "--config", cfg.to_str().unwrap()], Some("zero"));
    assert_eq!(o.status.code(), Some(64));
    assert!(text(&o).contains("KINKFIELD_THREADS"));
}

#[test]
fn unwritable_output_exits_74() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_SAMPLE);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = run_mode("sample", &cfg, &blocker.join("out"), &[]);
    assert_eq!(o.status.code(), Some(74), "{}", text(&o));
}

#[test]
fn single_epsilon_slope_test_warns_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"eps":[0.4],"charge":1,"length":8.0,"grid":{"spacing":0.1},
 "sampler":{"n_steps":3000,"burn_in":500,"thinning":10},"analysis":{"slope_test":true}}"#,
    );
    let out = dir.path().join("out");
    let o = run_mode("analyze", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    let report = json(&out.join("report.json"));
    let warnings = report["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().starts_with("insufficient-data")), "{warnings:?}");
}

#[test]
fn reports_are_byte_identical_and_the_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_SAMPLE);
    let out = dir.path().join("out");
    run_mode("sample", &cfg, &out, &[]);
    let first = std::fs::read(out.join("report.json")).unwrap();
    let o = kinkfield(&["sample", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.code().is_some());
    assert_eq!(first, std::fs::read(out.join("report.json")).unwrap());
    run_mode("sample", &cfg, &out, &["--seed", "7"]);
    assert_ne!(first, std::fs::read(out.join("report.json")).unwrap());
}

#[test]
fn sample_outputs_have_fixed_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL_SAMPLE);
    let out = dir.path().join("out");
    run_mode("sample", &cfg, &out, &[]);
    let csv = std::fs::read_to_string(out.join("samples_e0_c0.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,energy,acceptance_cum,dist_to_manifold,xi_1,xi_2"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 6);
    assert!(row[1].parse::<f64>().is_ok());
    let ckpt = std::fs::read(out.join("chain_e0_c0.ckpt")).unwrap();
    assert_eq!(&ckpt[..4], b"KFCK");
    assert_eq!(u32::from_le_bytes(ckpt[4..8].try_into().unwrap()), kinkfield::sampler::CHECKPOINT_VERSION);
    let manifest = json(&out.join("manifest.json"));
    assert!(manifest["created_unix_seconds"].as_u64().unwrap() > 0);
    let files = manifest["files"].as_array().unwrap();
    let samples = files.iter().find(|f| f["name"] == "samples_e0_c0.csv").unwrap();
    assert_eq!(samples["rows"], 250);
    assert_eq!(samples["zero_rows"], false);
    // timestamps stay out of the report
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(!report.contains("unix"));
}

#[test]
fn empty_tables_are_flagged_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"eps":[0.3],"charge":2,"length":8.0,"grid":{"spacing":0.1},
 "sampler":{"n_steps":3000,"burn_in":500,"thinning":10},"analysis":{"slope_test":false}}"#,
    );
    let out = dir.path().join("out");
    run_mode("analyze", &cfg, &out, &[]);
    let manifest = json(&out.join("manifest.json"));
    let files = manifest["files"].as_array().unwrap();
    let cov = files.iter().find(|f| f["name"] == "covariance.csv").unwrap();
    assert_eq!(cov["zero_rows"], true);
    assert!(manifest["gaps"].as_array().unwrap().iter().any(|g| g.as_str().unwrap().starts_with("covariance.csv")));
    let hist = std::fs::read_to_string(out.join("centers_hist.csv")).unwrap();
    assert_eq!(hist.lines().next(), Some("bin_left,bin_right,count_j1,count_j2,beta_ref_j1,beta_ref_j2"));
}

#[test]
fn config_round_trip_is_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "c.json",
        r#"{"eps":[0.2,0.1],"charge":-2,"length":{"preset":"paper-scaling","eta":0.15},
 "analysis":{"probes":[0.5,1.0],"tube_radius":0.8,"window_trim":0.5},"seed":42}"#,
    );
    let a = ExperimentConfig::load(&p).unwrap();
    let text = a.to_json();
    let b = ExperimentConfig::from_json(&text, &p).unwrap();
    assert_eq!(a, b);
    assert_eq!(text, b.to_json());
}

#[test]
fn verify_deterministic_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", "{}");
    let started = std::time::Instant::now();
    let o = run_mode("verify-deterministic", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(started.elapsed().as_secs() < 60);
}
