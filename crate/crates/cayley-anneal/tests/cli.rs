//! Black-box checks of the command-line interface: artifact shapes, preset
//! wiring, error reporting and flag validation.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cayley-anneal"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn geometry_preset_writes_validated_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("geo");
    let output = bin()
        .args(["--preset", "2", "--out", out_dir.to_str().unwrap(), "geometry"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let meta: serde_json::Value = serde_json::from_str(&read(&out_dir, "metadata.json")).unwrap();
    assert_eq!(meta["n_atoms"], 22);
    assert_eq!(meta["task"], "geometry");

    let validation: serde_json::Value =
        serde_json::from_str(&read(&out_dir, "validation.json")).unwrap();
    assert_eq!(validation["sqrt3_rule_satisfied"], true);

    let geometry = read(&out_dir, "geometry.txt");
    assert_eq!(geometry.lines().filter(|l| l.starts_with("edge ")).count(), 21);
    assert_eq!(geometry.lines().filter(|l| !l.starts_with("edge ")).count(), 22);
}

#[test]
fn phase_diagram_grid_covers_the_three_regular_phases() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("grid.toml");
    std::fs::write(
        &config,
        r#"
[phase_diagram]
u_min = 0.5
u_max = 1.0
u_points = 2
delta_min = -1.0
delta_max = 5.0
delta_points = 4
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("pd");
    let output = bin()
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "phase-diagram",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let csv = read(&out_dir, "phase_diagram.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "U_over_Omega0,Delta_over_Omega0,label,degeneracy,energy"
    );
    let labels: Vec<&str> = lines.map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(labels.len(), 8);
    // Δ sweeps −1, 1, 3, 5 at U/Ω0 = 0.5 then 1.0: below zero the empty
    // pattern wins, at 3U the boundary is degenerate, above it saturation.
    assert_eq!(labels[0], "I");
    assert_eq!(labels[1], "III");
    assert_eq!(labels[3], "II");
    assert!(labels.contains(&"Other"), "3U boundary row present");
}

#[test]
fn sampling_a_noiseless_anneal_finds_the_ordered_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("ideal.toml");
    std::fs::write(
        &config,
        r#"
[schedule]
steps = 128

[noise]
trajectories = 0

[run]
shots = 1500
seed = 12
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("sample");
    let output = bin()
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "sample",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let summary: serde_json::Value = serde_json::from_str(&read(&out_dir, "summary.json")).unwrap();
    assert_eq!(summary["simulated_argmax_label"], 575);
    assert_eq!(summary["argmax_label"], 575, "measurement errors leave 575 on top");

    let histogram = read(&out_dir, "histogram.csv");
    assert_eq!(histogram.lines().next().unwrap(), "label,count,probability,stderr");
    let total: u64 = histogram
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 1500);
}

#[test]
fn anneal_records_one_snapshot_per_sample_time() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("anneal.toml");
    std::fs::write(
        &config,
        r#"
[graph]
shells = 2

[schedule]
samples = 9
steps = 96

[noise]
trajectories = 0
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("anneal");
    let output = bin()
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "anneal",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let jsonl = read(&out_dir, "anneal.jsonl");
    let records: Vec<serde_json::Value> = jsonl
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 9);
    assert!(records.iter().all(|r| r["O_N"].is_number() && r["norm"].is_number()));

    let summary: serde_json::Value = serde_json::from_str(&read(&out_dir, "summary.json")).unwrap();
    assert!(summary["final_ground_probability"].as_f64().unwrap() > 0.5);
}

#[test]
fn hologram_task_emits_pattern_and_intensity_history() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("holo.toml");
    std::fs::write(
        &config,
        r#"
[graph]
shells = 2

[holography]
width = 32
height = 32
iterations = 3
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("holo");
    let output = bin()
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "holo",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let pattern = std::fs::read(out_dir.join("hologram.phase")).unwrap();
    assert!(pattern.starts_with(b"32 32\n"));
    assert_eq!(pattern.len(), b"32 32\n".len() + 32 * 32 * 8);

    let csv = read(&out_dir, "holo_intensities.csv");
    assert_eq!(csv.lines().next().unwrap(), "iteration,target,intensity");
    // 4 targets × (3 iterations + final pass).
    assert_eq!(csv.lines().count(), 1 + 4 * 4);

    let summary: serde_json::Value = serde_json::from_str(&read(&out_dir, "summary.json")).unwrap();
    assert!(summary["final_uniformity"].as_f64().unwrap() > 0.0);
}

#[test]
fn invalid_configuration_reports_a_structured_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    std::fs::write(&config, "[graph]\nshells = 9\n").unwrap();
    let output = bin()
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            tmp.path().join("x").to_str().unwrap(),
            "geometry",
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    let err: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].is_string());
}

#[test]
fn config_and_preset_flags_are_mutually_exclusive() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("any.toml");
    std::fs::write(&config, "").unwrap();
    let output = bin()
        .args([
            "--config",
            config.to_str().unwrap(),
            "--preset",
            "1",
            "geometry",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "clap usage error");
    assert!(String::from_utf8_lossy(&output.stderr).contains("--preset"));
}
