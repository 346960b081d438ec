use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn thinlayer(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_thinlayer"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn run(dir: &Path, name: &str, config: &str) -> (i32, std::path::PathBuf) {
    let cfg = dir.join(format!("{name}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(name);
    let code = thinlayer(&["run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    (code, out)
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

const NEUMANN: &str = r#"
experiment = "limit-solve"
[geometry]
kind = "interval"
length = 3.141592653589793
resolution = 0.001
[profile]
robin = 0.0
[solver]
eigenvalues = 4
"#;

#[test]
fn neumann_interval_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), "neumann", NEUMANN);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("j,lambda,cluster_id,residual\n"));
    let lambda = column(&csv, "lambda");
    for (j, l) in lambda.iter().enumerate() {
        let exact = (j * j) as f64;
        assert!((l - exact).abs() <= 1e-5 * exact.max(1.0), "j={j}: {l}");
    }
    let m = manifest(&out);
    assert_eq!(m["status"], "complete");
    assert_eq!(m["exit_code"], 0);
    assert!(out.join("summary.txt").exists());
}

#[test]
fn negative_eps_is_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(
        dir.path(),
        "bad",
        "experiment = \"sweep\"\n[geometry]\nkind = \"interval\"\nlength = 1.0\n[sweep]\neps = [0.1, -0.05, 0.025]\n",
    );
    assert_eq!(code, 2);
    assert!(!out.exists());
}

#[test]
fn unreadable_or_malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(thinlayer(&["run", missing.to_str().unwrap()]), 2);
    let (code, _) = run(dir.path(), "typo", "experiment = \"limit-solve\"\n[geometry]\nkind = \"interval\"\nlenght = 1.0\n");
    assert_eq!(code, 2);
    let (code, _) = run(dir.path(), "shape", "experiment = \"oracle-compare\"\n[geometry]\nkind = \"ellipse\"\na = 2.0\nb = 1.0\n");
    assert_eq!(code, 2);
}

const SWEEP: &str = r#"
experiment = "sweep"
[geometry]
kind = "interval"
length = 1.0
resolution = 0.001
layers = 16
[profile]
value = 0.3
[sweep]
eigenvalues = 2
"#;

#[test]
fn interval_sweep_quotients_converge() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), "sweep", SWEEP);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("epsilon,j,lambda_eps,lambda_limit,quotient,Q_min,Q_max\n"));
    let j = column(&csv, "j");
    let q = column(&csv, "quotient");
    let q_min = column(&csv, "Q_min");
    for target in [1.0, 2.0] {
        let errs: Vec<f64> = (0..j.len()).filter(|&i| j[i] == target).map(|i| (q[i] - q_min[i]).abs()).collect();
        assert_eq!(errs.len(), 5);
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "j={target}: {errs:?}");
    }
    let m = manifest(&out);
    assert_eq!(m["parameters"]["eps"].as_array().unwrap().len(), 5);
    assert_eq!(m["resolved"]["discretization"]["layers"], 16);
}

#[test]
fn identical_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, out_a) = run(dir.path(), "a", SWEEP);
    let (b, out_b) = run(dir.path(), "b", SWEEP);
    assert_eq!((a, b), (0, 0));
    assert_eq!(fs::read(out_a.join("sweep.csv")).unwrap(), fs::read(out_b.join("sweep.csv")).unwrap());
}

#[test]
fn optimized_profile_reloads_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
experiment = "optimize"
[geometry]
kind = "interval"
length = 1.0
resolution = 0.01
[profile]
value = 0.2
[optimizer]
arcs = 2
j = 2
budget = 400
"#;
    let (code, out) = run(dir.path(), "opt", config);
    assert!(code == 0 || code == 3);
    let m = manifest(&out);
    assert_eq!(m["status"], if code == 0 { "complete" } else { "NOT_CONVERGED" });
    let log = fs::read_to_string(out.join("optimize.csv")).unwrap();
    assert!(log.starts_with("iter,value,mass,h_1,h_2\n"));
    let best = fs::read_to_string(out.join("best_profile.toml")).unwrap();
    let again = format!("experiment = \"limit-solve\"\n[geometry]\nkind = \"interval\"\nlength = 1.0\nresolution = 0.01\n{best}");
    let (code, out2) = run(dir.path(), "reload", &again);
    assert_eq!(code, 0);
    let lambda = column(&fs::read_to_string(out2.join("spectrum.csv")).unwrap(), "lambda");
    let best_value = m["results"]["best_value"].as_f64().unwrap();
    assert!((lambda[1] - best_value).abs() <= 1e-9 * best_value.abs());
}

#[test]
fn oracle_compare_subcommand_overrides_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "experiment = \"limit-solve\"\n[geometry]\nkind = \"interval\"\nlength = 1.0\nresolution = 0.0001\nlayers = 64\n[profile]\nvalue = 0.3\n[solver]\neigenvalues = 5\n[oracle]\neps = [0.025]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = thinlayer(&["oracle-compare", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let m = manifest(&out);
    assert_eq!(m["experiment"], "oracle-compare");
    assert_eq!(m["results"]["pass"], true, "{}", m["results"]);
    let csv = fs::read_to_string(out.join("oracle.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
}
