use std::path::Path;
use std::process::{Command, Output};

fn eptr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eptr")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(eptr(&[], d).status.code(), Some(2));
    assert_eq!(eptr(&["sim", "--problem", "linreg", "--vary", "epsilon"], d).status.code(), Some(2));
    assert_eq!(eptr(&["sim", "--problem", "nope", "--vary", "epsilon", "--seed", "1"], d).status.code(), Some(2));
    assert_eq!(eptr(&["audit", "--problem", "bayes", "--seed", "1", "--trials", "9999"], d).status.code(), Some(2));
    assert_eq!(eptr(&["audit", "--problem", "linreg", "--seed", "1", "--break-lipschitz", "--trials", "10000"], d).status.code(), Some(2));
    assert_eq!(eptr(&["audit", "--problem", "bayes", "--seed", "1", "--epsilon", "0"], d).status.code(), Some(2));
    assert_eq!(eptr(&["kernel-build", "--s", "0"], d).status.code(), Some(2));
    assert_eq!(eptr(&["kernel-build", "--s", "13"], d).status.code(), Some(2));
    assert_eq!(eptr(&["release", "--problem", "linreg", "--input", "missing.csv", "--seed", "1"], d).status.code(), Some(2));
    assert_eq!(eptr(&["sim", "--problem", "kernel", "--vary", "pi_min", "--seed", "1"], d).status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = eptr(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("kernel-build"));
}

#[test]
fn kernel_build_prints_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let o = eptr(&["kernel-build", "--s", "2"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("1,1.33333333333\n"), "{text}");
    assert!(text.contains("2,-0.333333333333\n"), "{text}");
    assert_eq!(text.lines().filter(|l| l.ends_with(",ok")).count(), 4);
    let fourth = text.lines().find(|l| l.starts_with("4,")).unwrap();
    let quad: f64 = fourth.split(',').nth(2).unwrap().parse().unwrap();
    assert!((quad + 12.0).abs() < 1e-6);

    let o = eptr(&["kernel-build", "--s", "1"], dir.path());
    assert!(stdout(&o).contains("1,1.00000000000\n"));
}

#[test]
fn sim_writes_csv_and_flags_override_spec() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = r#"{"problem":"linreg","sweep_var":"n","grid":[300,600],"n":300,"epsilon":1.0,
                   "delta":0.01,"reps":50,"master_seed":3,"test_size":50}"#;
    std::fs::write(d.join("spec.json"), spec).unwrap();
    let o = eptr(&["sim", "--spec", "spec.json", "--reps", "2", "--methods", "eptr", "--out", "r.csv"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "problem,method,sweep_var,sweep_value,rep,seed,metric,value,released");
    // 2 grid points × 2 reps × 2 metrics
    assert_eq!(lines.len(), 1 + 8);
    assert!(lines[1..].iter().all(|l| l.starts_with("linreg,eptr,n,")));
    assert_eq!(stdout(&o).lines().count(), 2);

    // the same run from flags only
    let o = eptr(
        &["sim", "--problem", "linreg", "--vary", "n", "--grid", "300,600", "--n", "300", "--reps", "2", "--seed", "3",
          "--test-size", "50", "--methods", "eptr", "--out", "r2.csv"],
        d,
    );
    assert!(o.status.success());
    assert_eq!(csv, std::fs::read_to_string(d.join("r2.csv")).unwrap());
}

#[test]
fn audit_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = eptr(&["audit", "--problem", "bayes", "--trials", "20000", "--seed", "4", "--out", "a.csv", "--report", "a.txt"], d);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("VERDICT: PASS"));
    assert_eq!(std::fs::read_to_string(d.join("a.txt")).unwrap(), stdout(&o));
    let csv = std::fs::read_to_string(d.join("a.csv")).unwrap();
    assert!(csv.starts_with("pair,"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",PASS")));

    let o = eptr(&["audit", "--problem", "bayes", "--trials", "50000", "--seed", "4", "--break-lipschitz"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("VERDICT: FAIL"));
}

#[test]
fn release_reads_each_schema() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut lin = String::from("y,x1,x2\n");
    let mut bayes = String::new();
    let mut ker = String::new();
    for i in 0..3000 {
        let (a, b) = (((i * 37) % 101) as f64 / 50.0 - 1.0, ((i * 61) % 89) as f64 / 44.0 - 1.0);
        lin.push_str(&format!("{},{a},{b}\n", 0.5 * a - 0.25 * b));
        bayes.push_str(&format!("{},{a},{b}\n", i % 3));
        ker.push_str(&format!("{},{}\n", a, (b + 1.0) / 2.0));
    }
    std::fs::write(d.join("lin.csv"), lin).unwrap();
    std::fs::write(d.join("bayes.csv"), bayes).unwrap();
    std::fs::write(d.join("ker.csv"), ker).unwrap();

    let fields = |o: &Output| stdout(o).trim().split(',').map(|f| f.parse::<f64>().unwrap()).count();
    let o = eptr(&["release", "--problem", "linreg", "--input", "lin.csv", "--seed", "1"], d);
    assert!(o.status.success());
    assert_eq!(fields(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let o = eptr(&["release", "--problem", "bayes", "--input", "bayes.csv", "--seed", "1"], d);
    assert_eq!(fields(&o), 3 + 3 * 2);
    let o = eptr(&["release", "--problem", "kernel", "--input", "ker.csv", "--seed", "1"], d);
    assert_eq!(fields(&o), 1);
}

#[test]
fn release_prints_bot_and_rejects_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // every record far from the query point: γ = 0
    std::fs::write(d.join("far.csv"), "0.3,0\n".repeat(50)).unwrap();
    let bots = (0..20)
        .filter(|s| {
            let o = eptr(&["release", "--problem", "kernel", "--input", "far.csv", "--sigma", "0.02", "--seed", &s.to_string()], d);
            stdout(&o) == "BOT\n"
        })
        .count();
    assert!(bots >= 18, "{bots}");

    // rank-deficient design
    std::fs::write(d.join("flat.csv"), "0.5,0,0\n-0.5,0,0\n0.25,0,0\n").unwrap();
    let bots = (0..20)
        .filter(|s| stdout(&eptr(&["release", "--problem", "linreg", "--input", "flat.csv", "--seed", &s.to_string()], d)) == "BOT\n")
        .count();
    assert!(bots >= 18, "{bots}");

    std::fs::write(d.join("bad.csv"), "1,2\n3\n").unwrap();
    let o = eptr(&["release", "--problem", "linreg", "--input", "bad.csv", "--seed", "1"], d);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(d.join("bad2.csv"), "0.5,1,2\n").unwrap();
    let o = eptr(&["release", "--problem", "bayes", "--input", "bad2.csv", "--seed", "1"], d);
    assert_eq!(o.status.code(), Some(2));
}
