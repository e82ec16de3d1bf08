use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_amsbq"));
    c.env_remove("AMSBQ_LOG");
    c
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SHORT_MI: &str = "benchmark = forrester-classic\nmethod = amsbq\nacquisition = mi\nbudget = 6\nseed = 1\n";

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_is_byte_reproducible_and_file_matches_stdout() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(&dir, "a.conf", SHORT_MI);
    let out = dir.path().join("a.csv");
    let first = run(&["run", p(&conf)]);
    let second = run(&["run", p(&conf)]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, second.stdout);
    assert!(run(&["run", p(&conf), "--out", p(&out)]).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), first.stdout);
    assert!(!first.stdout.contains(&b'\r'));
}

#[test]
fn seed_override_changes_the_run() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(&dir, "a.conf", SHORT_MI);
    let a = run(&["run", p(&conf), "--seed", "2"]);
    let b = run(&["run", p(&conf), "--seed", "3"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn csv_has_header_and_final_flag() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(&dir, "a.conf", SHORT_MI);
    let o = run(&["run", p(&conf)]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "schema,iter,source,x1,y,cost,cum_cost,ez,vz,rel_err,acq_value,lambda,b_1_1,b_1_2,b_2_2,final"
    );
    let cols = lines[0].split(',').count();
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), cols, "{l}");
        assert!(l.starts_with("1,"));
    }
    assert!(lines.last().unwrap().ends_with(",1"));
    assert!(lines[1..lines.len() - 1].iter().all(|l| l.ends_with(",0")));
    let sources: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap()).collect();
    assert!(sources.contains(&"1") && sources.contains(&"2"));
}

#[test]
fn budget_override_bounds_the_spend() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(&dir, "a.conf", SHORT_MI);
    let text = stdout(&run(&["run", p(&conf), "--budget", "5"]));
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    // cost and cum_cost are columns 5 and 6; only the last query may cross
    let last = rows.last().unwrap();
    assert!(last[6] >= 5.0);
    assert!(last[6] - last[5] < 5.0);
    assert!(rows[..rows.len() - 1].iter().all(|r| r[6] < 5.0));
}

#[test]
fn percentile_estimate_writes_one_row() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(&dir, "pe.conf", "benchmark = forrester-classic\nmethod = pe\npe_nodes = 64\nseed = 0\n");
    let o = run(&["run", p(&conf)]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(f[1], "64");
    assert_eq!(f[3], "nan");
    assert_eq!(f[8], "0");
}

#[test]
fn pathological_rate_needs_opt_in() {
    let dir = TempDir::new().unwrap();
    // the product rate keeps buying ever cheaper f2 queries, so cap the loop
    let conf = write_config(&dir, "a.conf", &format!("{SHORT_MI}max_iterations = 5\n"));
    let refused = run(&["run", p(&conf), "--acq", "ip"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("pathological"));
    let allowed = run(&["run", p(&conf), "--acq", "ip", "--allow-pathological"]);
    assert!(allowed.status.success(), "{}", String::from_utf8_lossy(&allowed.stderr));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(&dir, "a.conf", SHORT_MI);
    assert_eq!(run(&["run", "/nonexistent/config"]).status.code(), Some(2));
    assert_eq!(run(&["run", p(&conf), "--acq", "ucb"]).status.code(), Some(2));
    assert_eq!(run(&["compare", p(&conf)]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let bad = write_config(&dir, "bad.conf", "benchmark = forrester-classic\nmethod = amsbq\nbudget = -1\n");
    assert_eq!(run(&["run", p(&bad)]).status.code(), Some(2));
    let unknown = write_config(&dir, "unknown.conf", "benchmark = nope\nmethod = amsbq\nbudget = 3\n");
    assert_eq!(run(&["run", p(&unknown)]).status.code(), Some(2));
    let typo = write_config(&dir, "typo.conf", "benchmark = forrester-classic\nbudgte = 3\n");
    assert_eq!(run(&["run", p(&typo)]).status.code(), Some(2));
}

#[test]
fn compare_rejects_mixed_benchmarks() {
    let dir = TempDir::new().unwrap();
    let a = write_config(&dir, "a.conf", SHORT_MI);
    let b = write_config(&dir, "b.conf", "benchmark = forrester-wiggly\nmethod = vbq\nbudget = 3\n");
    let o = run(&["compare", p(&a), p(&b)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_writes_summary_and_reports_unreached_tolerance() {
    let dir = TempDir::new().unwrap();
    let a = write_config(&dir, "a.conf", "benchmark = forrester-classic\nmethod = amsbq\nbudget = 5\nseeds = 0 1\n");
    let b = write_config(&dir, "b.conf", "benchmark = forrester-classic\nmethod = vbq\nbudget = 5\nseeds = 0 1\n");
    let out = dir.path().join("summary.csv");
    let o = run(&["compare", p(&a), p(&b), "--tolerance", "1e-12", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("forrester-classic,amsbq-mi,2,0,0,1e-12,inf,inf,"), "{}", lines[1]);
    assert!(lines[2].starts_with("forrester-classic,vbq,2,0,0,1e-12,inf,inf,"), "{}", lines[2]);
    assert!(stdout(&o).contains("amsbq-mi"));
}

#[test]
fn log_level_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(&dir, "a.conf", SHORT_MI);
    let quiet = run(&["run", p(&conf)]);
    let loud = bin().args(["run", p(&conf)]).env("AMSBQ_LOG", "debug").output().unwrap();
    assert!(!String::from_utf8_lossy(&quiet.stderr).contains("DEBUG"));
    assert!(String::from_utf8_lossy(&loud.stderr).contains("DEBUG"));
    assert_eq!(quiet.stdout, loud.stdout);
}
