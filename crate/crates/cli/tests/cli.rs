use std::path::Path;
use std::process::{Command, Output};

fn eestim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eestim"))
        .args(args)
        .current_dir(dir)
        .env("EESTIM_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.trim().strip_prefix('=')?.trim().parse().ok())
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn generate_exact_estimate_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = eestim(&["generate", "--model", "ising", "--size", "4x4", "--theta", "0.3", "--seed", "3", "--out", "x.txt"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = eestim(&["exact", "--model", "ising", "--in", "x.txt"], d);
    assert_eq!(o.status.code(), Some(0));
    let exact = value(&stdout(&o), "theta.bonds");

    let o = eestim(
        &["estimate", "--model", "ising", "--in", "x.txt", "--steps", "100000", "--cd-steps", "5000", "--out", "t.csv"],
        d,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    let (hat, std) = (value(&text, "theta.bonds"), value(&text, "theta_std.bonds"));
    assert!((hat - exact).abs() < 3.0 * std, "{hat} vs {exact}");

    let trace = std::fs::read_to_string(d.join("t.csv")).unwrap();
    assert_eq!(trace.lines().count(), 100_001);
    assert_eq!(trace.lines().next().unwrap().split(',').count(), 4);

    let o = eestim(&["diagnose", "--in", "t.csv"], d);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("converged = true"));
}

#[test]
fn generated_draws_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--model", "vbm", "--size", "25", "--theta", &vec!["0.1"; 300].join(","), "--count", "3", "--sweeps", "20", "--seed", "7"];
    let a = eestim(&args, dir.path());
    let b = eestim(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).matches("spin chain 25").count(), 3);
}

#[test]
fn boundary_data_exits_with_nonexistence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("flat.txt"), "spin 2 3\n1 1 1\n1 1 1\n").unwrap();
    let o = eestim(&["exact", "--model", "ising", "--in", "flat.txt"], d);
    assert_eq!(o.status.code(), Some(3));

    std::fs::write(d.join("empty.txt"), "4\n").unwrap();
    let o = eestim(&["experiment", "ergm", "--in", "empty.txt"], d);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("boundary"));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.txt"), "spin 2 2\n1 1\n1 7\n").unwrap();
    let o = eestim(&["exact", "--model", "ising", "--in", "bad.txt"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    assert_eq!(eestim(&["estimate", "--model", "vbm", "--in", "missing.txt"], d).status.code(), Some(2));
    assert_eq!(eestim(&["experiment", "crf", "--a", "0.1"], d).status.code(), Some(2));
    assert_eq!(eestim(&["generate", "--model", "ising", "--size", "3", "--theta", "1"], d).status.code(), Some(2));
    assert_eq!(eestim(&["no-such-command"], d).status.code(), Some(2));
}

#[test]
fn unconverged_trace_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // a discrepancy that never changes sign
    let mut csv = String::from("t,theta_1,d_1,accepted\n");
    for t in 1..=200 {
        csv.push_str(&format!("{t},{},{},1\n", 0.1 * t as f64, 1 + t % 3));
    }
    std::fs::write(d.join("t.csv"), csv).unwrap();
    let o = eestim(&["diagnose", "--in", "t.csv"], d);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("converged = false"));
}

#[test]
fn ergm_experiment_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.txt"), "# short run\nee_steps = 60000\ncd_steps = 2000\n").unwrap();
    let o = eestim(&["experiment", "ergm", "--config", "cfg.txt", "--seed", "2", "--out", "run"], d);
    assert!(matches!(o.status.code(), Some(0 | 4)), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["graph.txt", "trace.csv", "summary.txt"] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }
    let summary = std::fs::read_to_string(d.join("run/summary.txt")).unwrap();
    assert_eq!(summary, stdout(&o));
    assert!(summary.contains("theta_exact.arc"));
}
