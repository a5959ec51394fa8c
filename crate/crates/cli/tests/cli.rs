use edgefem_cli::config::PlanSpec;
use edgefem_cli::output::{receiver_csv, RECEIVER_HEADER};
use edgefem_cli::run::{run_forward, run_mesh_rules, run_mms};
use edgefem_cli::{execute, CliError, ConfigError, Mode, RunConfig};
use std::path::Path;
use std::process::Command;

fn config(text: &str) -> RunConfig {
    RunConfig::from_toml(text).unwrap()
}

const RULES: &str = r#"
[materials]
region = [{ id = 1, rho_h = 0.3 }, { id = 2, rho_h = 100.0 }, { id = 3, air = true }]

[source]
frequency = 3.0
length = 100.0

[refinement]
p = 2
threshold = 3
"#;

const FORWARD: &str = r#"
[mesh.box]
min = [-800.0, -800.0, -800.0]
max = [800.0, 800.0, 800.0]
divisions = [4, 4, 4]

[materials]
region = [{ id = 1, rho_h = 1.0 }]

[source]
frequency = 1.0
position = [10.0, 20.0, 30.0]
direction = [1.0, 0.0, 0.0]
moment = 1.0

[receivers]
line = { start = [0.0, 100.0, 0.0], end = [0.0, 600.0, 0.0], count = 6 }

[refinement]
p = 2

[solver]
preconditioner = "ssor"
tolerance = 1e-10
"#;

fn key_of(err: CliError) -> String {
    match err {
        CliError::Config(ConfigError::MissingKey(k)) | CliError::Config(ConfigError::Invalid { key: k, .. }) => k.to_string(),
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn mesh_rules_reports_rule_spacing() {
    let report = run_mesh_rules(&config(RULES)).unwrap();
    assert!((report.d_delta - 16.95).abs() < 0.01, "{}", report.d_delta);
    assert_eq!(report.regions.len(), 2);
    assert_eq!(report.rho_min, 0.3);
    assert!(report.uniform_mesh.is_none());
}

#[test]
fn source_spacing_rule() {
    let text = RULES.replace("p = 2", "p = 3");
    let report = run_mesh_rules(&config(&text)).unwrap();
    assert_eq!(report.d_s, Some(10.0));
}

#[test]
fn uniform_estimate_uses_box_volume() {
    let text = format!("{RULES}\n[mesh.box]\nmin = [0.0, 0.0, 0.0]\nmax = [1000.0, 1000.0, 1000.0]\n");
    let report = run_mesh_rules(&config(&text)).unwrap();
    let est = report.uniform_mesh.unwrap();
    let cells = 1e9 / report.d_delta.powi(3);
    assert!((est.cells - cells).abs() < 1e-6 * cells);
    // p = 2: 2 dofs per edge, 2 per face, none inside.
    assert!((est.dof - cells * (7.0 * 2.0 + 12.0 * 2.0)).abs() < 1e-6 * est.dof);
}

#[test]
fn missing_frequency_names_the_key() {
    let text = RULES.replace("frequency = 3.0", "");
    let err = run_mesh_rules(&config(&text)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("source.frequency"), "{err}");
}

#[test]
fn out_of_range_order_names_the_key() {
    for p in ["0", "7", "[1, 9]"] {
        let text = RULES.replace("p = 2", &format!("p = {p}"));
        assert_eq!(key_of(run_mesh_rules(&config(&text)).unwrap_err()), "refinement.p");
    }
}

#[test]
fn unknown_threshold_names_the_key() {
    let text = RULES.replace("threshold = 3", "threshold = 2");
    let err = run_mesh_rules(&config(&text)).unwrap_err();
    assert!(err.to_string().contains("refinement.threshold"), "{err}");
}

#[test]
fn absent_mesh_source_is_rejected() {
    let text = FORWARD.replace("[mesh.box]", "[mesh.unused]");
    assert!(RunConfig::from_toml(&text).is_err());
    let rest = FORWARD.split_once("[materials]").unwrap().1;
    let text = format!("[mesh]\n[materials]{rest}");
    let err = run_forward(&config(&text)).unwrap_err();
    assert!(key_of(err).starts_with("mesh"));
    let both = FORWARD.replace("[mesh.box]", "[mesh]\nmsh = \"a.msh\"\n[mesh.box]");
    assert_eq!(key_of(run_forward(&config(&both)).unwrap_err()), "mesh");
}

#[test]
fn mms_needs_two_levels() {
    let text = r#"
[mesh.box]
min = [0.0, 0.0, 0.0]
max = [1.0, 1.0, 1.0]
levels = [2]
[refinement]
p = 1
"#;
    let err = run_mms(&config(text)).unwrap_err();
    assert!(err.to_string().contains("at least two levels"), "{err}");
}

#[test]
fn small_mms_run_has_first_order_slope() {
    let text = r#"
[mesh.box]
min = [0.0, 0.0, 0.0]
max = [1.0, 1.0, 1.0]
levels = [2, 4]
[refinement]
p = 1
[solver]
method = "dense"
"#;
    let records = run_mms(&config(text)).unwrap();
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!(r.levels.len(), 2);
    assert_eq!(r.pairwise_slopes.len(), 1);
    assert!((r.pairwise_slopes[0] - 1.0).abs() < 0.25, "{:?}", r.pairwise_slopes);
}

#[test]
fn zero_moment_gives_zero_fields() {
    let text = FORWARD.replace("moment = 1.0", "moment = 0.0");
    let result = run_forward(&config(&text)).unwrap();
    assert_eq!(result.fields.len(), 6);
    assert!(result.fields.iter().all(|e| e.iter().all(|c| c.norm() == 0.0)));
}

#[test]
fn receiver_outside_mesh_is_named() {
    let text = FORWARD.replace("end = [0.0, 600.0, 0.0]", "end = [0.0, 1000.0, 0.0]");
    let err = run_forward(&config(&text)).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("receiver 4"), "{err}");
}

#[test]
fn receiver_csv_layout() {
    let result = run_forward(&config(FORWARD)).unwrap();
    assert!(result.report.converged);
    let csv = receiver_csv(&result);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(RECEIVER_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 9);
    assert_eq!(row[1], "1.00000000000000e2");
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn mixed_plan_is_accepted() {
    let text = FORWARD.replace("p = 2", "mode = \"mixed\"\nlow = 1\nhigh = 2\nfraction = 0.5");
    let c = config(&text);
    let plan = c.refinement().unwrap();
    assert_eq!(plan.plans, vec![PlanSpec::Mixed { low: 1, high: 2, fraction: 0.5 }]);
    assert!(run_forward(&c).unwrap().report.converged);
}

#[test]
fn execute_writes_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{FORWARD}\n[output]\ntimings = false\n");
    execute(Mode::Forward, &config(&text), Some(dir.path().to_path_buf())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("receivers.csv")).unwrap();
    assert!(csv.starts_with(RECEIVER_HEADER));
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(!summary.contains("time"), "{summary}");
}

fn run_binary(args: &[&str], config: &Path, out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_edgefem"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--log-level")
        .arg("warn")
        .output()
        .unwrap()
}

#[test]
fn outputs_are_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("forward.toml");
    std::fs::write(&path, format!("{FORWARD}\n[output]\ntimings = false\n")).unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("out{workers}"));
        let status = run_binary(&["forward", "--workers", workers], &path, &out);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push((
            std::fs::read(out.join("receivers.csv")).unwrap(),
            std::fs::read(out.join("summary.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, RULES.replace("frequency = 3.0", "")).unwrap();
    let o = run_binary(&["mesh-rules"], &bad, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("source.frequency"));

    let outside = dir.path().join("outside.toml");
    std::fs::write(&outside, FORWARD.replace("position = [10.0, 20.0, 30.0]", "position = [0.0, 0.0, 900.0]")).unwrap();
    let o = run_binary(&["forward"], &outside, &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("source"));

    let stalled = dir.path().join("stalled.toml");
    std::fs::write(&stalled, FORWARD.replace("tolerance = 1e-10", "tolerance = 1e-10\nmax_iterations = 2")).unwrap();
    let o = run_binary(&["forward"], &stalled, &out);
    assert_eq!(o.status.code(), Some(4));
    assert!(out.join("receivers.csv").exists());

    let good = dir.path().join("rules.toml");
    std::fs::write(&good, RULES).unwrap();
    let o = run_binary(&["mesh-rules"], &good, &out);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("spacing.json")).unwrap()).unwrap();
    assert!((json["d_delta"].as_f64().unwrap() - 16.95).abs() < 0.01);
}
