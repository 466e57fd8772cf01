use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn avglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avglab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn body(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn walk_dp_small_exact_value() {
    let o = avglab(&["walk-dp", "--d", "1", "--kernel", "avg-diff", "--steps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# avglab "));
    assert_eq!(lines.next().unwrap(), "name,n,numerator,denominator,float_value");
    assert!(text.lines().any(|l| l == "p_tilde,2,3,8,0.375"), "{text}");
}

#[test]
fn series_verify_reports_zero_residuals() {
    let o = avglab(&["series-verify", "--d", "2", "--order", "24"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().skip(2).count() > 3);
    assert!(!text.contains("fail"), "{text}");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["walk-dp", "--d", "0"][..],
        &["simulate", "--trials", "-5"],
        &["bogus"],
        &["accept", "--quick", "--tol.nope", "1"],
        &["clt", "--function", "sinh"],
    ] {
        assert_eq!(avglab(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn tolerance_failure_exits_1() {
    let o = avglab(&["accept", "--quick", "--only", "4", "--tol.asym_d1", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[FAIL]"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nd = 1\nsteps = 3\nkernel = avg-diff\n").unwrap();
    let c = cfg.to_str().unwrap();

    let text = stdout(&avglab(&["walk-dp", "--config", c]));
    assert!(text.lines().any(|l| l.starts_with("p_tilde,3,")));
    assert!(!text.lines().any(|l| l.starts_with("p_tilde,4,")));

    let text = stdout(&avglab(&["walk-dp", "--config", c, "--steps", "4"]));
    assert!(text.lines().any(|l| l.starts_with("p_tilde,4,")));

    fs::write(&cfg, "stepz = 3\n").unwrap();
    assert_eq!(avglab(&["walk-dp", "--config", c]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = avglab(&[
            "simulate", "--d", "1", "--t", "8", "--trials", "200", "--seed", seed, "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        body(&out)
    };
    let a = run("a.csv", "7");
    assert_eq!(a, run("b.csv", "7"));
    assert_ne!(a, run("c.csv", "8"));
    assert!(a.starts_with("# avglab "));
    assert!(a.contains("seed=7"));
    assert!(a.lines().nth(1).unwrap() == "d,t,trials,estimator,mean,std_error,seed");
}

#[test]
fn simulate_exact_and_field_dump() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("field.csv");
    let json = dir.path().join("s.json");
    let o = avglab(&[
        "simulate", "--d", "2", "--t", "3", "--trials", "100", "--initial", "0,0:0.75;1,0:0.25",
        "--field-out", field.to_str().unwrap(), "--json-summary", json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dump = body(&field);
    assert_eq!(dump.lines().nth(1).unwrap(), "index,x1,x2,mass");
    let total: f64 = dump.lines().skip(2).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let summary: serde_json::Value = serde_json::from_str(&body(&json)).unwrap();
    assert!(summary.is_object());

    let o = avglab(&["simulate", "--d", "1", "--t", "4", "--trials", "20", "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn quick_acceptance_passes() {
    let o = avglab(&["accept", "--quick", "--only", "1,2,3"]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.matches("[PASS]").count(), 3, "{err}");
}
