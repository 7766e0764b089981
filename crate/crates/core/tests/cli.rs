use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use compop::galerkin::read_exported;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compop"))
}

fn write_symbol(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

const DIAG: &str = r#"{"domain":{"blocks":[1,1]},"symbol":{"type":"diag","r":[0.5,0.5]}}"#;
const SCALED_LENS: &str =
    r#"{"domain":{"blocks":[1,1]},"symbol":{"type":"scale","s":0.6,"inner":{"type":"lens","theta":[0.5,0.5]}}}"#;
const LENS: &str = r#"{"domain":{"blocks":[1,1]},"symbol":{"type":"lens","theta":[0.5,0.5]}}"#;

#[test]
fn singvals_diagonal() {
    let dir = TempDir::new().unwrap();
    let sym = write_symbol(dir.path(), "diag.json", DIAG);
    let out = dir.path().join("out");
    let o = run(&["singvals", "--symbol", sym.to_str().unwrap(), "--degree", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("singvals.csv"));
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0][0], "1");
    assert!((rows[0][1].parse::<f64>().unwrap() - 1.0).abs() < 1e-15);
    assert!((rows[9][1].parse::<f64>().unwrap() - 0.125).abs() < 1e-15);
}

#[test]
fn singvals_to_stdout_matches_file() {
    let dir = TempDir::new().unwrap();
    let sym = write_symbol(dir.path(), "diag.json", DIAG);
    let out = dir.path().join("out");
    let o = run(&["singvals", "--symbol", sym.to_str().unwrap(), "--degree", "4"]);
    assert!(o.status.success());
    let f = run(&["singvals", "--symbol", sym.to_str().unwrap(), "--degree", "4", "--out", out.to_str().unwrap()]);
    assert!(f.status.success());
    assert_eq!(o.stdout, fs::read(out.join("singvals.csv")).unwrap());
}

#[test]
fn export_matrix_round_trip() {
    let dir = TempDir::new().unwrap();
    let sym = write_symbol(dir.path(), "lens.json", LENS);
    let out = dir.path().join("out");
    let o = run(&[
        "singvals",
        "--symbol",
        sym.to_str().unwrap(),
        "--degree",
        "5",
        "--out",
        out.to_str().unwrap(),
        "--export-matrix",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("matrix.json")).unwrap()).unwrap();
    let n = meta["n"].as_u64().unwrap() as usize;
    assert_eq!(n, 21);
    let m = read_exported(&out.join("matrix.bin"), n).unwrap();
    assert!((m[(0, 0)].re - 1.0).abs() < 1e-15);
}

#[test]
fn bounds_scaled_lens_has_every_column() {
    let dir = TempDir::new().unwrap();
    let sym = write_symbol(dir.path(), "s.json", SCALED_LENS);
    let out = dir.path().join("out");
    let o = run(&["bounds", "--symbol", sym.to_str().unwrap(), "--degree", "8", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("bounds.csv"));
    assert_eq!(rows.len(), 45);
    for row in rows.iter().take(9) {
        for col in 1..=4 {
            assert!(!row[col].is_empty(), "row {row:?} col {col}");
        }
        let compressed: f64 = row[1].parse().unwrap();
        let upper: f64 = row[4].parse().unwrap();
        assert!(compressed <= upper);
    }
    let prov: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("bounds.provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["degree"], 8);
    assert_eq!(prov["tail"]["applicable"], true);
}

#[test]
fn bounds_lens_has_blank_tail() {
    let dir = TempDir::new().unwrap();
    let sym = write_symbol(dir.path(), "l.json", LENS);
    let out = dir.path().join("out");
    let o = run(&["bounds", "--symbol", sym.to_str().unwrap(), "--degree", "6", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("bounds.csv"));
    assert!(rows.iter().all(|r| r[4].is_empty()));
}

#[test]
fn violated_certificate_exits_two() {
    let dir = TempDir::new().unwrap();
    let sym = write_symbol(dir.path(), "l.json", LENS);
    let out = dir.path().join("out");
    let o = run(&[
        "bounds",
        "--symbol",
        sym.to_str().unwrap(),
        "--degree",
        "6",
        "--sup-norm",
        "0.01",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn invalid_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let bad = write_symbol(dir.path(), "bad.json", r#"{"domain":{"blocks":[1]},"symbol":{"type":"spiral"}}"#);
    let o = run(&["singvals", "--symbol", bad.to_str().unwrap(), "--degree", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["singvals", "--degree", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "usage");
    let dup = write_symbol(dir.path(), "dup.json", r#"{"domain":{"blocks":[1,1]},"symbol":{"type":"duplicate"}}"#);
    let o = run(&["singvals", "--symbol", dup.to_str().unwrap(), "--degree", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn decay_from_symbol_and_input() {
    let dir = TempDir::new().unwrap();
    let sym = write_symbol(dir.path(), "diag.json", DIAG);
    let out = dir.path().join("out");
    let o = run(&["singvals", "--symbol", sym.to_str().unwrap(), "--degree", "20", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = out.join("singvals.csv");
    let o = run(&["decay", "--input", csv.to_str().unwrap(), "--dim", "2", "--window", "100:231"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let slope = fit["slope"].as_f64().unwrap();
    assert!((slope - 2f64.sqrt() * 2f64.ln()).abs() < 0.15 * 2f64.sqrt() * 2f64.ln());

    let o2 = run(&["decay", "--symbol", sym.to_str().unwrap(), "--degree", "20", "--dim", "2", "--window", "100:231"]);
    assert!(o2.status.success());
    let fit2: serde_json::Value = serde_json::from_slice(&o2.stdout).unwrap();
    assert_eq!(fit2["slope"], fit["slope"]);
}

#[test]
fn witness_csv() {
    let o = run(&["witness", "--n-max", "12"]);
    assert!(o.status.success());
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let vals: Vec<f64> = r.records().map(|x| x.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(vals.len(), 12);
    assert!((vals[9] - 1024.0 / 184756f64.sqrt()).abs() < 1e-10);
}

#[test]
fn deterministic_across_runs_and_jobs() {
    let dir = TempDir::new().unwrap();
    let sym = write_symbol(dir.path(), "s.json", SCALED_LENS);
    let args = ["bounds", "--symbol", sym.to_str().unwrap(), "--degree", "7"];
    let a = run(&args);
    let b = run(&[&args[..], &["--jobs", "1"]].concat());
    let c = run(&[&args[..], &["--jobs", "3"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn help_and_version() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("singvals"));
    let o = run(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
}
