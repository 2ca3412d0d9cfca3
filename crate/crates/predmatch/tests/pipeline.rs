//! End-to-end driver tests: config files through the library driver and the
//! installed binary, report files on disk, and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

use predmatch::cli::{run_config, OutputFormat};
use predmatch::config::ExperimentConfig;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("predmatch_pipeline_{tag}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn hpd_residual_task_writes_reports_with_structure_columns() {
    let dir = temp_dir("hpd");
    let toml = r#"
task = "hpd-residual"
family = "bvn-cholesky"
priors = ["jeffreys", "right-haar"]
alphas = [0.3, 0.5, 0.7]

[[theta_grid]]
min = 1.0
max = 1.0
count = 1

[[theta_grid]]
min = 1.0
max = 2.0
count = 2

[[theta_grid]]
min = 0.0
max = 0.3
count = 2
"#;
    let config = ExperimentConfig::from_toml(toml).unwrap();
    let out = run_config(&config, &dir, OutputFormat::Csv, None).unwrap();
    assert!(out.ok);
    let csv = fs::read_to_string(&out.files[0]).unwrap();
    assert!(csv.contains("m,min_eig_ratio,form"));
    assert!(csv.contains("shared-profile"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn diagnose_task_reports_dependence() {
    let dir = temp_dir("diag");
    let toml = r#"
task = "diagnose"
family = "bvn-cholesky"

[[theta_grid]]
min = 1.0
max = 1.0
count = 1

[[theta_grid]]
min = 1.0
max = 2.0
count = 2

[[theta_grid]]
min = 0.0
max = 0.3
count = 2
"#;
    let config = ExperimentConfig::from_toml(toml).unwrap();
    let out = run_config(&config, &dir, OutputFormat::Json, None).unwrap();
    assert!(out.summary.contains("shared-profile"));
    assert!(out.summary.contains("dependent"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn family_verify_task_passes_for_builtins() {
    let dir = temp_dir("famverify");
    let toml = r#"
task = "verify"
family = "location-scale-t(1)"

[[theta_grid]]
min = 0.0
max = 0.0
count = 1

[[theta_grid]]
min = 1.0
max = 1.0
count = 1
"#;
    let config = ExperimentConfig::from_toml(toml).unwrap();
    let out = run_config(&config, &dir, OutputFormat::Json, None).unwrap();
    assert!(out.ok, "{}", out.summary);
    assert!(out.summary.contains("sampler-ks"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn coverage_task_small_run_via_config() {
    let dir = temp_dir("cov");
    let toml = r#"
task = "coverage"
family = "normal-location"
priors = ["uniform"]
alphas = [0.2]
seed = 17

[coverage]
n = 4
replicates = 150
theta0 = [0.5]
"#;
    let config = ExperimentConfig::from_toml(toml).unwrap();
    let out = run_config(&config, &dir, OutputFormat::Both, None).unwrap();
    assert!(out.ok, "{}", out.summary);
    let json = fs::read_to_string(
        out.files
            .iter()
            .find(|f| f.extension().unwrap() == "json")
            .unwrap(),
    )
    .unwrap();
    assert!(json.contains("\"coverage_hat\""));
    assert!(json.contains("\"config_hash\""));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn binary_list_families_and_describe() {
    let bin = env!("CARGO_BIN_EXE_predmatch");
    let out = Command::new(bin).arg("list-families").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("bvn-cholesky"));

    let out = Command::new(bin)
        .args(["describe", "normal-mean-eq-var"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("jeffreys"));

    let out = Command::new(bin)
        .args(["describe", "nope"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn binary_run_residual_config_and_bad_config() {
    let dir = temp_dir("binrun");
    let config_path = dir.join("exp.toml");
    fs::write(
        &config_path,
        r#"
task = "residual"
family = "normal-location"
priors = ["uniform"]
alphas = [0.1, 0.9]

[[theta_grid]]
min = -1.0
max = 1.0
count = 3
"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_predmatch");
    let out = Command::new(bin)
        .args(["run", config_path.to_str().unwrap()])
        .args(["--out-dir", dir.to_str().unwrap()])
        .args(["--format", "csv"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("quantile_normal-location_uniform.csv").exists());

    // malformed config: nonzero exit and a parse diagnostic
    let bad = dir.join("bad.toml");
    fs::write(&bad, "task = \"residual\"\nfamily = 42\n").unwrap();
    let out = Command::new(bin)
        .args(["run", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config parse error"), "{err}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn upmp_task_reports_structured_errors_for_dependent_sensitivities() {
    let dir = temp_dir("upmp");
    let toml = r#"
task = "hpd-upmp"
family = "bvn-cholesky"

[[theta_grid]]
min = 1.0
max = 1.0
count = 1

[[theta_grid]]
min = 1.0
max = 1.0
count = 1

[[theta_grid]]
min = 0.0
max = 0.0
count = 1
"#;
    let config = ExperimentConfig::from_toml(toml).unwrap();
    let out = run_config(&config, &dir, OutputFormat::Json, None).unwrap();
    // the dependent case is reported, not thrown
    assert!(out.summary.contains("linearly dependent"));
    let json = fs::read_to_string(&out.files[0]).unwrap();
    assert!(json.contains("\"error\""));
    let _ = fs::remove_dir_all(&dir);
}
