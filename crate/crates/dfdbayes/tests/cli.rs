use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dfdbayes::config::{DataSpec, ExperimentKind, RunConfig, SamplerSpec};
use dfdbayes::formats::{read_json, PosteriorSummary};
use serde_json::Value;

fn dfdbayes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfdbayes")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, config: &RunConfig) -> PathBuf {
    let path = dir.join("config-in.json");
    fs::write(&path, config.to_json()).unwrap();
    path
}

/// A CMP run small enough for a test.
fn small_cmp(out: &Path) -> RunConfig {
    let mut c = RunConfig::preset(ExperimentKind::Cmp);
    c.data = DataSpec::Simulate { theta: vec![4.0, 0.75], n: 300, iters_per_draw: None };
    c.sampler.n_samples = 200;
    c.sampler.burn_in = 500;
    c.sampler.thin = 2;
    c.sampler.chains = 2;
    c.calibration.replicates = 20;
    c.output_dir = out.to_path_buf();
    c
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "timing.json" {
                files.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn ingest_check_reports_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("counts.csv");
    fs::write(&path, "x_0,x_1\n1,4\n3,0\n\n2,2\n").unwrap();
    let out = dfdbayes(&["ingest-check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n"], 3);
    assert_eq!(report["d"], 2);
    assert_eq!(report["column_max"], serde_json::json!([3, 4]));
    assert_eq!(report["column_means"], serde_json::json!([2.0, 2.0]));
}

#[test]
fn ingest_check_names_the_bad_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("counts.csv");
    fs::write(&path, "1\n2\n-3\n").unwrap();
    let out = dfdbayes(&["ingest-check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&dfdbayes(&["sample"])), 1);

    let bad = tmp.path().join("bad.json");
    let mut json: Value = serde_json::from_str(&small_cmp(tmp.path()).to_json()).unwrap();
    json["colour"] = Value::from("blue");
    fs::write(&bad, json.to_string()).unwrap();
    let out = dfdbayes(&["sample", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));

    let cmp = write_config(tmp.path(), &small_cmp(tmp.path()));
    let out = dfdbayes(&["experiment", "ising", "--config", cmp.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));

    let out = dfdbayes(&["sample", "--config", cmp.to_str().unwrap(), "--beta", "-1"]);
    assert_ne!(code(&out), 0);
}

#[test]
fn calibration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    // constant data: the loss decreases without bound, so no minimiser exists
    fs::write(tmp.path().join("const.csv"), "3\n".repeat(50)).unwrap();
    let mut c = small_cmp(&tmp.path().join("out"));
    c.data = DataSpec::File { path: "const.csv".into() };
    let path = write_config(tmp.path(), &c);
    let out = dfdbayes(&["calibrate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("calibration"), "{}", stderr(&out));
}

#[test]
fn sample_writes_outputs_with_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let path = write_config(tmp.path(), &small_cmp(&out_dir));
    let out = dfdbayes(&["sample", "--config", path.to_str().unwrap(), "--seed", "11", "--threads", "1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let config = RunConfig::load(&out_dir.join("config.json")).unwrap();
    assert_eq!(config.seed, 11);
    let hash = config.hash();
    for name in ["data.json", "dfd_chains.json", "dfd_calibration.json", "dfd_summary.json", "dfd_predictive.json"] {
        let v: Value = serde_json::from_slice(&fs::read(out_dir.join(name)).unwrap()).unwrap();
        assert_eq!(v["seed"], 11, "{name}");
        assert_eq!(v["config_hash"], hash.as_str(), "{name}");
    }
    let chains = fs::read_to_string(out_dir.join("dfd_chains.csv")).unwrap();
    assert_eq!(chains.lines().next(), Some("chain_id,iter,log_density,theta_0,theta_1"));
    assert_eq!(chains.lines().count(), 1 + 2 * 200);
    let summary: PosteriorSummary = read_json(&out_dir.join("dfd_summary.json")).unwrap();
    assert!(summary.beta > 0.0);
    assert!((summary.mean[0] - 4.0).abs() < 1.5 && (summary.mean[1] - 0.75).abs() < 0.4, "{:?}", summary.mean);
}

#[test]
fn fixed_beta_skips_calibration() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let path = write_config(tmp.path(), &small_cmp(&out_dir));
    let out = dfdbayes(&["sample", "--config", path.to_str().unwrap(), "--beta", "0.5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(!out_dir.join("dfd_calibration.json").exists());
    let summary: PosteriorSummary = read_json(&out_dir.join("dfd_summary.json")).unwrap();
    assert_eq!(summary.beta, 0.5);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let mut c = small_cmp(&out_dir);
    c.comparisons.truncate(1);
    let path = write_config(tmp.path(), &c);
    let run = || {
        let out = dfdbayes(&["experiment", "cmp", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let files = snapshot(&out_dir);
        fs::remove_dir_all(&out_dir).unwrap();
        files
    };
    let first = run();
    assert!(first.len() >= 8, "{:?}", first.keys());
    assert!(first == run());
    // thread count does not change results
    let out = dfdbayes(&["--threads", "1", "experiment", "cmp", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(first == snapshot(&out_dir));
}

#[test]
fn zero_beta_samples_the_prior() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = RunConfig::preset(ExperimentKind::Ising);
    c.comparisons.clear();
    c.data = DataSpec::Simulate { theta: vec![5.0], n: 100, iters_per_draw: None };
    c.sampler = SamplerSpec { n_samples: 4000, burn_in: 1000, thin: 10, chains: 4, ..c.sampler };
    c.predictive = None;
    c.output_dir = tmp.path().join("out");
    let path = write_config(tmp.path(), &c);
    let out = dfdbayes(&["sample", "--config", path.to_str().unwrap(), "--beta", "0"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: PosteriorSummary = read_json(&c.output_dir.join("dfd_summary.json")).unwrap();
    // chi-squared(3) prior: mean 3
    assert!((summary.mean[0] - 3.0).abs() <= 0.2, "prior mean {}", summary.mean[0]);
}
