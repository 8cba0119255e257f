use std::path::PathBuf;
use std::process::Command;

fn qsts() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qsts"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn validate_bundled_config() {
    let out = qsts().args(["--json", "validate"]).arg(data("config.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["buses"], 30);
}

#[test]
fn missing_profile_stops_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        format!(
            "network = {:?}\noutput_dir = \"out\"\n[profiles]\nkind = \"files\"\npaths = [\"gone.csv\"]\n",
            data("network.toml")
        ),
    )
    .unwrap();
    let out = qsts().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gone.csv"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn limits_of_sample_file() {
    let out = qsts().arg("limits").arg(data("limits-sample.csv")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("5.3717") && text.contains("0.6283"), "{text}");

    let out = qsts().args(["--json", "limits"]).arg(data("limits-sample.csv")).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let max = v["entries"][0]["gen_max_lim"].as_f64().unwrap();
    assert!((max - (3.0 + 1.5 * 2.5f64.sqrt())).abs() < 1e-12);
}

#[test]
fn run_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("week");
    let out = qsts()
        .args(["--json", "run"])
        .arg(data("config.toml"))
        .arg("--output")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["summary"]["recorded_steps"], 168);

    let out = qsts()
        .arg("analyze")
        .arg(&run_dir)
        .args(["--metric", "all", "--window", "week:2035-W02"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["losses"]["steps"], 168);
    // 30 buses, each within the 1e-8 pu solver tolerance on a 100 MVA base
    assert!(report["losses"]["worst_mismatch_mw"].as_f64().unwrap() < 30.0 * 1e-8 * 100.0);

    let out = qsts().arg("analyze").arg(&run_dir).args(["--window", "fortnight"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulation_failure_exits_2_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(data("profiles-week.csv")).unwrap();
    let mut lines: Vec<String> = src.lines().map(str::to_string).collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "LD9").unwrap();
    let mut row: Vec<String> = lines[6].split(',').map(str::to_string).collect();
    row[col] = "50000".into();
    lines[6] = row.join(",");
    let prof = dir.path().join("p.csv");
    std::fs::write(&prof, lines.join("\n") + "\n").unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        format!(
            "network = {:?}\noutput_dir = \"out\"\n[profiles]\nkind = \"files\"\npaths = [\"p.csv\"]\n\
             [engine]\nresolution_min = 60\nhorizon = [0, 12]\n[scheduler]\nmode = \"sequential\"\n",
            data("network.toml")
        ),
    )
    .unwrap();
    let out = qsts().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let failures = std::fs::read_to_string(dir.path().join("out/diagnostics/failures.json")).unwrap();
    assert!(failures.contains("\"step\": 5"), "{failures}");
}
