use std::path::Path;
use std::process::{Command, Output};

fn gapforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapforge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn solve_reports_every_branch_as_json() {
    let o = gapforge(&["solve", "--lambda-b", "5", "--mu", "1", "--temp", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let phases: Vec<&str> = v["solutions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["phase"].as_str().unwrap())
        .collect();
    assert_eq!(phases, ["pure_mean_field", "mixed_lower", "mixed_upper"]);
    assert_eq!(v["multiplicity"], 2);
    let upper = &v["solutions"][2];
    assert!((upper["w_bar"].as_f64().unwrap() - 5.0).abs() < 1e-8);
    assert!((upper["delta_b"].as_f64().unwrap() - 24f64.sqrt()).abs() < 1e-6);
}

#[test]
fn conflicting_temperature_flags_are_usage_errors() {
    let o = gapforge(&["solve", "--lambda-b", "5", "--mu", "1", "--temp", "1", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gapforge(&["solve", "--lambda-b", "5", "--mu", "-1", "--temp", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scan_is_row_major_and_reproducible() {
    let args = [
        "scan", "--lambda-b", "1:3:3", "--lambda-m", "0:1:3", "--mu", "1", "--temp", "0.1",
    ];
    let a = gapforge(&args);
    let b = gapforge(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let (header, rows) = csv_rows(&stdout(&a));
    assert_eq!(rows.len(), 9);
    let lb = column(&header, "lambda_b");
    let lm = column(&header, "lambda_m");
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[lb].parse().unwrap(), r[lm].parse().unwrap()))
        .collect();
    assert_eq!(pairs[0], (1.0, 0.0));
    assert_eq!(pairs[1], (1.0, 0.5));
    assert_eq!(pairs[3], (2.0, 0.0));
    assert_eq!(pairs[8], (3.0, 1.0));
}

#[test]
fn temperature_sweep_loses_pairing_once() {
    let o = gapforge(&[
        "scan", "--lambda-b", "5", "--mu", "1", "--temp", "0.01:4:200",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&stdout(&o));
    let m = column(&header, "multiplicity");
    let paired: Vec<bool> = rows.iter().map(|r| r[m] != "0").collect();
    let flips = paired.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(paired[0]);
    assert!(!paired[paired.len() - 1]);
    assert_eq!(flips, 1);
}

#[test]
fn equilibrium_curve_is_monotone() {
    let o = gapforge(&["scan", "--equilibrium", "--lambda-b-bar", "1.1:10:50"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&stdout(&o));
    let mu = column(&header, "mu_bar");
    let x = column(&header, "x");
    let mus: Vec<f64> = rows.iter().map(|r| r[mu].parse().unwrap()).collect();
    let xs: Vec<f64> = rows.iter().map(|r| r[x].parse().unwrap()).collect();
    assert_eq!(rows.len(), 50);
    assert!(mus.windows(2).all(|w| w[1] > w[0]));
    assert!(xs.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn verify_exit_codes() {
    let base = ["verify", "--regime", "ia", "--lambda-b", "5", "--lambda-m", "0.5", "--mu", "1"];
    let ok = gapforge(&[&base[..], &["--temp", "0.05"]].concat());
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let strict = gapforge(&[&base[..], &["--temp", "0.05", "--rel-tol", "1e-30"]].concat());
    assert_eq!(strict.status.code(), Some(3));
    let outside = gapforge(&[&base[..], &["--temp", "2"]].concat());
    assert_eq!(outside.status.code(), Some(2));
}

#[test]
fn config_file_is_merged_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"lambda_b": 5.0, "mu": 1.0, "temp": 0.01}"#).unwrap();
    let o = gapforge(&["solve", "--config", good.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csv_rows(&stdout(&o)).1.len(), 3);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"lambda_b": 5.0, "mu": 1.0, "temp": 0.01, "bogus": 1}"#).unwrap();
    let o = gapforge(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_kernel(path: &Path, momenta: &[f64], value: impl Fn(usize, usize) -> f64) {
    let mut text = momenta
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(",");
    text.push('\n');
    for i in 0..momenta.len() {
        let row: Vec<String> = (0..momenta.len()).map(|j| value(i, j).to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn zero_kernels_give_zero_gaps_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let momenta: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
    let km = dir.path().join("m.csv");
    let kb = dir.path().join("b.csv");
    write_kernel(&km, &momenta, |_, _| 0.0);
    write_kernel(&kb, &momenta, |_, _| 0.0);
    let summary = dir.path().join("summary.json");
    let o = gapforge(&[
        "kernel-solve", "--lambda-b", "1", "--mu", "1", "--temp", "0.5",
        "--kernel-m-csv", km.to_str().unwrap(),
        "--kernel-b-csv", kb.to_str().unwrap(),
        "--summary", summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 20);
    for name in ["delta_m", "delta_b"] {
        let c = column(&header, name);
        assert!(rows.iter().all(|r| r[c].parse::<f64>().unwrap() == 0.0));
    }
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["iterations"], 1);
}

#[test]
fn malformed_kernel_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let km = dir.path().join("m.csv");
    std::fs::write(&km, "0,1,2\n1,0,0\n0,x,0\n0,0,1\n").unwrap();
    let o = gapforge(&[
        "kernel-solve", "--lambda-b", "1", "--mu", "1", "--temp", "0.5",
        "--kernel-m-csv", km.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn shell_kernel_matches_scalar_solution() {
    let o = gapforge(&[
        "kernel-solve", "--lambda-b", "5", "--mu", "1", "--temp", "0.01",
        "--epsilon", "0.01", "--init", "seed:1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    let p = column(&header, "p");
    let db = column(&header, "delta_b");
    let at_fermi = rows
        .iter()
        .find(|r| r[p].parse::<f64>().unwrap() == 1.0)
        .expect("sqrt(mu) is a grid node");
    let kernel: f64 = at_fermi[db].parse().unwrap();
    let exact = 24f64.sqrt();
    assert!((kernel - exact).abs() / exact < 1e-2, "{kernel}");
}

#[test]
fn exhausted_budget_exits_with_last_state() {
    let o = gapforge(&[
        "kernel-solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5",
        "--grid-points", "200", "--init", "seed:3", "--max-iters", "2",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(csv_rows(&stdout(&o)).1.len(), 200);
}

#[test]
fn branch_mode_labels_each_branch() {
    let o = gapforge(&[
        "kernel-solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5",
        "--grid-points", "400", "--scheme", "anderson:5", "--max-iters", "500",
        "--seeds", "0,1,4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    let b = column(&header, "branch");
    let mut branches: Vec<&str> = rows.iter().map(|r| r[b].as_str()).collect();
    branches.dedup();
    assert_eq!(branches.len(), 3);
}
