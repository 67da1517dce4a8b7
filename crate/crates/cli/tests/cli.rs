use std::process::{Command, Output};

use serde_json::Value;

fn spqm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spqm")).args(args).output().expect("binary runs")
}

fn spqm_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spqm"))
        .args(args)
        .env("SPQM_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Metadata line and CSV records.
fn split_csv(text: &str) -> (Value, Vec<String>, Vec<Vec<String>>) {
    let (meta, rest) = text.split_once('\n').unwrap();
    let mut rdr = csv::Reader::from_reader(rest.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (serde_json::from_str(meta).unwrap(), header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn moments_example_ends_at_five_sixths() {
    let o = spqm(&["moments", "--kappa", "1", "--t-final", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (meta, header, rows) = split_csv(&stdout(&o));
    assert_eq!(meta["subcommand"], "moments");
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    let last = rows.last().unwrap();
    let t: f64 = last[column(&header, "t")].parse().unwrap();
    let n: f64 = last[column(&header, "n")].parse().unwrap();
    let rn: f64 = last[column(&header, "riccati_n")].parse().unwrap();
    assert_eq!(t, 5.0);
    assert!((n - 5.0 / 6.0).abs() < 1e-12);
    assert!((rn - 5.0 / 6.0).abs() < 1e-8);
}

#[test]
fn moments_with_step_adds_discrete_columns() {
    let o = spqm(&["moments", "--kappa", "1", "--t-final", "1", "--dt", "1e-3", "--points", "4"]);
    assert!(o.status.success());
    let (_, header, rows) = split_csv(&stdout(&o));
    assert_eq!(rows.len(), 4);
    let n: f64 = rows[3][column(&header, "direct_n")].parse().unwrap();
    assert!((n - 0.5).abs() < 5e-3);
}

#[test]
fn missing_dt_is_a_usage_error() {
    let o = spqm(&["simulate", "--kappa", "1", "--t-final", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("--dt") && err.contains("Usage"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn invalid_parameters_exit_two() {
    for args in [
        vec!["povm", "--t-final", "1", "--dt", "0.01"],
        vec!["simulate", "--kappa", "-1", "--t-final", "1", "--dt", "0.01"],
        vec!["simulate", "--kappa", "1", "--t-final", "1", "--dt", "0.03"],
        vec!["simulate", "--kappa", "1", "--t-final", "1", "--dt", "0.01", "--format", "xml"],
        vec!["simulate", "--kappa", "100", "--t-final", "1", "--dt", "0.01"],
        vec!["moments", "--kappa", "1", "--t-final", "1", "--dt", "0.01", "--points", "7"],
        vec!["frobnicate"],
    ] {
        let o = spqm(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn config_file_fills_in_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\nkappa = 2\nt-final=0.5\ndt = 0.01\nseed=99\npaths = 4\n").unwrap();
    let out = dir.path().join("sim.csv");
    let o = spqm(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (meta, _, rows) = split_csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["parameters"]["kappa"], 2.0);
    assert_eq!(meta["parameters"]["dt"], 0.01);
    assert_eq!(rows.len(), 4);

    std::fs::write(&cfg, "kappa=1\nwidth=3\n").unwrap();
    let o = spqm(&["moments", "--config", cfg.to_str().unwrap(), "--t-final", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"));
}

#[test]
fn output_is_deterministic_across_worker_counts() {
    let args = ["distributions", "--kappa", "1", "--t-final", "0.5", "--dt", "0.01", "--paths", "3000", "--points", "2"];
    let a = spqm_env(&args, "1");
    let b = spqm_env(&args, "3");
    let c = spqm(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let o = spqm_env(&args, "many");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_cross_checks_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("paths.csv");
    let o = spqm(&[
        "simulate", "--kappa", "1", "--t-final", "1", "--dt", "1e-3", "--paths", "5", "--dump", dump.to_str().unwrap(),
        "--dump-paths", "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, header, rows) = split_csv(&stdout(&o));
    for row in &rows {
        let rec: f64 = row[column(&header, "recursion_vs_sums")].parse().unwrap();
        let cross: f64 = row[column(&header, "cross_chart")].parse().unwrap();
        assert!(rec < 1e-10 && cross < 1e-2);
    }
    let (meta, header, rows) = split_csv(&std::fs::read_to_string(&dump).unwrap());
    assert_eq!(meta["subcommand"], "simulate-dump");
    assert_eq!(&header[..4], ["path", "k", "re_dw", "im_dw"]);
    assert_eq!(rows.len(), 2 * 1001);
    // Cartan columns are empty before the seed time.
    assert_eq!(rows[1][column(&header, "ell")], "");
    assert_ne!(rows[300][column(&header, "ell")], "");
}

#[test]
fn modified_measure_simulation() {
    let o = spqm(&["simulate", "--kappa", "1", "--t-final", "1", "--dt", "0.01", "--paths", "3", "--measure", "modified"]);
    assert!(o.status.success());
    assert_eq!(split_csv(&stdout(&o)).0["details"]["measure"], "modified");
}

#[test]
fn povm_json_report() {
    let o = spqm(&[
        "povm", "--kappa", "1", "--t-final", "0.2", "--dt", "0.01", "--dim", "12", "--paths", "500", "--channel-dim",
        "6", "--radial", "30", "--angular", "48", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let meta: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(meta["parameters"]["format"], "json");
    let rows: Vec<Value> = lines.map(|l| serde_json::from_str(l).unwrap()).collect();
    let by = |name: &str| rows.iter().find(|r| r["check"] == name).unwrap().clone();
    assert!(by("completeness")["deviation"].as_f64().unwrap() < 1e-6);
    assert!(by("coherent_limit")["deviation"].as_f64().unwrap() < 1e-10);
    assert!(by("channel_trace_distance")["value"].as_f64().unwrap() < 0.1);
    let bad = spqm(&["povm", "--kappa", "1", "--t-final", "0.2", "--dt", "0.01", "--channel-dim", "40"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_reports_failure_with_exit_one() {
    // A coarse step misses the moment tolerance.
    let o = spqm(&["verify", "--kappa", "1", "--t-final", "1", "--dt", "0.01", "--only", "1,2"]);
    assert_eq!(o.status.code(), Some(1));
    let (_, header, rows) = split_csv(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][column(&header, "passed")], "false");
    assert_eq!(rows[1][column(&header, "passed")], "true");
    assert!(stderr(&o).contains("[FAIL]"));
}

#[test]
fn verify_full_suite_passes() {
    let o = spqm(&["verify", "--kappa", "1", "--t-final", "1", "--dt", "1e-3", "--dim", "24", "--paths", "20000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (meta, _, rows) = split_csv(&stdout(&o));
    assert_eq!(rows.len(), 17);
    assert_eq!(meta["details"]["all_passed"], true);
}
