use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wlc_core::runner::output::{read_csv_table, read_json_table, COLUMNS, SUMMARY_COLUMNS};

fn wlc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlc"))
        .args(args)
        .env("WLC_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_scenario_writes_csv_and_reports_linewidth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "scenario = \"empty\"\n[cavity]\nfinesse = 100\nlength_m = 1.0\n[scan]\npoints = 1001\n");
    let out_path = dir.path().join("empty.csv");
    let out = wlc(&["empty", "--config", s(&cfg), "--output", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let g = report["linewidth"]["gamma_empty_mhz"].as_f64().unwrap();
    let m = report["linewidth"]["gamma_measured_mhz"].as_f64().unwrap();
    assert!((g - 3.0).abs() < 0.01);
    assert!((m - g).abs() / g < 1e-3);

    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    let rows = read_csv_table(&out_path).unwrap();
    assert_eq!(rows.len(), 1001);
    let peak = rows.iter().map(|r| r.transmission).fold(0.0, f64::max);
    assert!((peak - 1.0).abs() < 1e-9);
}

#[test]
fn json_format_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "scenario = \"spectrum\"\n[scan]\npoints = 201\n[output]\nformat = \"csv\"\n");
    let out_path = dir.path().join("s.json");
    let out = wlc(&["spectrum", "--config", s(&cfg), "--output", s(&out_path), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_json_table(&out_path).unwrap();
    assert_eq!(rows.len(), 201);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["metadata"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["metadata"]["config"]["scenario"], "spectrum");
    assert_eq!(v["metadata"]["config"]["scan"]["points"], 201);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let both = write(dir.path(), "b.toml", "[cavity]\nfinesse = 100\nreflectivity = 0.97\n");
    assert_eq!(wlc(&["empty", "--config", s(&both)]).status.code(), Some(2));
    let unknown = write(dir.path(), "u.toml", "[cavity]\nfinese = 100\n");
    assert_eq!(wlc(&["empty", "--config", s(&unknown)]).status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    assert_eq!(wlc(&["empty", "--config", s(&missing)]).status.code(), Some(2));
    assert_eq!(wlc(&["spectrum"]).status.code(), Some(2));
}

#[test]
fn scenario_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // lines overlap: no anomalous dispersion to tune
    let cfg = write(dir.path(), "c.toml", "[medium]\nseparation_mhz = 1.0\nwidth_fwhm_mhz = 2.0\n");
    let out = wlc(&["tune", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tune"));
}

#[test]
fn sweep_writes_one_file_per_separation_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[scan]\npoints = 401\n[sweep]\nseparations_mhz = [6.0, 8.0, 14.0]\nretune_each = true\n",
    );
    let out_dir = dir.path().join("sweep");
    let out = wlc(&["sweep-separation", "--config", s(&cfg), "--output", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for label in ["gamma_6.0000mhz.csv", "gamma_8.0000mhz.csv", "gamma_14.0000mhz.csv"] {
        assert_eq!(read_csv_table(&out_dir.join(label)).unwrap().len(), 401);
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), SUMMARY_COLUMNS.join(","));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for (r, sep) in rows.iter().zip([6.0, 8.0, 14.0]) {
        // config → rad/s → output round trip
        assert!((r[0] - sep).abs() <= 1e-12 * sep);
        assert!((r[1] + 9.0).abs() <= 9e-6);
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[scan]\npoints = 801\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(wlc(&["spectrum", "--config", s(&cfg), "--output", s(&a)]).status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_wlc"))
        .args(["spectrum", "--config", s(&cfg), "--output", s(&b)])
        .env("WLC_THREADS", "7")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn predict_writes_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"medium": {"separation_mhz": 7.95}}"#);
    let path = dir.path().join("p.json");
    let out = wlc(&["predict", "--config", s(&cfg), "--output", s(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["report"]["linewidth"]["gamma_wlc_predicted_mhz"].as_f64().unwrap() > 0.0);
}

#[test]
fn selftest_reports_every_criterion() {
    let out = wlc(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for id in 1..=9 {
        assert!(
            text.contains(&format!("criterion {id}:")),
            "missing criterion {id} in\n{text}"
        );
    }
    let all_pass = text.lines().filter(|l| l.starts_with("[FAIL]")).count() == 0;
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 3 }));
}
