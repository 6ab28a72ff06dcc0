use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dunkl-hermite"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(Result::unwrap).collect()
}

fn column(path: &Path, name: &str) -> usize {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().position(|h| h == name).unwrap()
}

#[test]
fn basis_prints_constants_and_writes_file() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["basis", "--group", "z2", "--kappa", "0.5", "--degree", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for key in ["gamma           0.5", "basis size      7", "c_kappa", "m_kappa"] {
        assert!(text.contains(key), "{text}");
    }
    assert!(tmp.path().join("out/basis.json").exists());

    let again = run(tmp.path(), &["basis", "--group", "z2", "--kappa", "0.5", "--degree", "6"]);
    assert!(String::from_utf8_lossy(&again.stderr).contains("cached basis"));
}

#[test]
fn degree_zero_is_a_single_function() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["basis", "--group", "z2^2", "--kappa", "1,1", "--degree", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("basis size      1"));
}

#[test]
fn negative_multiplicity_is_a_configuration_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(&cfg, r#"{"root_system": {"type": "catalogue", "name": "z2", "multiplicity": -0.5}}"#).unwrap();
    let o = run(tmp.path(), &["basis", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));

    let o = run(tmp.path(), &["basis", "--kappa", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(&cfg, r#"{"degre": 4}"#).unwrap();
    let o = run(tmp.path(), &["basis", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classical_heat_kernel_at_the_origin() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("p.csv"), "t,x1,y1\n1,0,0\n").unwrap();
    let o = run(tmp.path(), &["eval", "heat-kernel", "--points", "p.csv", "--kappa", "0", "--degree", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let path = tmp.path().join("out/heat-kernel.csv");
    let rows = read_csv(&path);
    let value: f64 = rows[0][column(&path, "value")].parse().unwrap();
    let expected = (2.0 * std::f64::consts::PI * 2f64.sinh()).powf(-0.5);
    assert!((value - expected).abs() < 1e-14 * expected);
}

#[test]
fn riesz_kernel_flags_orbit_coincident_points() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("p.csv"), "x1,y1\n1,-1\n1,2\n").unwrap();
    let o = run(tmp.path(), &["eval", "riesz-kernel", "--points", "p.csv", "--kappa", "0.5", "--degree", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let path = tmp.path().join("out/riesz-kernel.csv");
    let rows = read_csv(&path);
    let status = column(&path, "status");
    assert_eq!(&rows[0][status], "orbit-too-close");
    assert_eq!(&rows[1][status], "ok");
    assert!(rows[1][column(&path, "panels")].parse::<usize>().unwrap() > 0);
}

#[test]
fn dunkl_kernel_without_multiplicity_is_the_exponential() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("p.csv"), "x1,x2,y1,y2\n0.3,-0.7,1.1,0.4\n-2,1,0.5,0.5\n").unwrap();
    let o = run(tmp.path(), &["eval", "dunkl-kernel", "--points", "p.csv", "--group", "z2^2", "--kappa", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let path = tmp.path().join("out/dunkl-kernel.csv");
    let (v, e) = (column(&path, "value"), column(&path, "exp_inner"));
    for row in read_csv(&path) {
        let value: f64 = row[v].parse().unwrap();
        let exp: f64 = row[e].parse().unwrap();
        assert!((value - exp).abs() < 1e-13 * exp);
    }
}

#[test]
fn corrupted_basis_file_fails_its_checksum() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run(tmp.path(), &["basis", "--degree", "4"]).status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("out/basis.json")).unwrap();
    let bad = text.replacen("\"norm\": \"1\"", "\"norm\": \"2\"", 1);
    assert_ne!(bad, text);
    fs::write(tmp.path().join("bad.json"), bad).unwrap();
    let o = run(tmp.path(), &["verify", "--basis", "bad.json", "--checks", "eigen"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));
}

#[test]
fn empty_check_list_writes_an_empty_report() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["verify", "--checks", ""]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["results"].as_array().unwrap().len(), 0);
    assert!(tmp.path().join("out/report.csv").exists());
}

#[test]
fn identical_runs_give_identical_reports() {
    let tmp = TempDir::new().unwrap();
    let args = ["verify", "--checks", "eigen,riesz-l2,lp-empirical", "--seed", "7", "--degree", "8"];
    let a = run(tmp.path(), &[&args[..], &["--out", "a"]].concat());
    let b = run(tmp.path(), &[&args[..], &["--out", "b"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    for file in ["report.json", "report.csv"] {
        let x = fs::read(tmp.path().join("a").join(file)).unwrap();
        let y = fs::read(tmp.path().join("b").join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
}

#[test]
fn failing_check_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.json");
    // Four terms of the eigenfunction series cannot reproduce the heat kernel.
    fs::write(&cfg, r#"{"verify": {"heat": {"degree": 4, "times": [0.1]}}}"#).unwrap();
    let o = run(tmp.path(), &["verify", "--config", cfg.to_str().unwrap(), "--checks", "heat,eigen"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("heat") && text.contains("fail"), "{text}");
    assert!(text.contains("eigen") && text.contains("pass"), "{text}");
}

#[test]
fn full_suite_reports_every_check() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["verify", "--group", "z2", "--kappa", "0.5"]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 10);
    let failed = results.iter().any(|r| r["status"] == "fail");
    assert_eq!(o.status.code(), Some(if failed { 1 } else { 0 }));
}
