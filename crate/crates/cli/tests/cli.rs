use std::path::Path;
use std::process::{Command, Output};

use diracwkb_cli::RunConfig;
use serde_json::Value;

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diracwkb")).args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn stderr_error(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().find(|l| l.starts_with("{\"error\"")).expect("machine-readable error");
    serde_json::from_str(line).unwrap()
}

#[test]
fn rates_example_fits_minus_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(
        &["rates", "--potential", "bounded-electric", "--n", "1", "--lambdas", "100:1600:x2", "--no-oracle", "--report", "r.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "abscissa,ratio,kappa,remainder,oracle,bound");
    assert_eq!(lines.len(), 6);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let slope = report["sweep"]["fit"]["slope"].as_f64().unwrap();
    assert!((slope + 2.0).abs() < 0.3, "{slope}");
    assert_eq!(report["sweep"]["predicted_slope"].as_f64(), Some(-2.0));
}

#[test]
fn rates_with_oracle_agree() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["rates", "--potential", "bounded-electric", "--n", "0", "--lambdas", "100,200"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for row in String::from_utf8(o.stdout).unwrap().lines().skip(1) {
        let f: Vec<f64> = row.split(',').take(5).map(|s| s.parse().unwrap()).collect();
        assert!((f[4] / f[1] - 1.0).abs() < 1e-3, "{row}");
    }
}

#[test]
fn normality_zero_is_normal() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["normality", "--potential", "zero"], dir.path());
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["normality"]["verdict"], "normal");
    assert_eq!(v["normality"]["matched_branch"], "first");
}

#[test]
fn normality_random_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["normality", "--draws", "200", "--seed", "11"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["random_suite"]["disagreements"], 0);
}

#[test]
fn region_example_matches_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["region", "--family", "polynomial", "--gamma", "2", "--N", "10"], dir.path());
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (b, a) = l.split_once(',').unwrap();
            (b.parse().unwrap(), a.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 256);
    assert_eq!(rows[0].0, 10.0);
    assert!((rows[255].0 - 100.0).abs() < 1e-12);
    for (b, a) in rows {
        assert!((a / b.powf(2.0 / 3.0 - 0.25) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "command = \"complex-rates\"\npotential = \"polynomial-complex\"\nN = 2\nbetas = \"20:80:x2\"\noracle = false\n",
    )
    .unwrap();
    let a = bin(&["--config", "run.toml", "--output", "a.csv"], dir.path());
    let b = bin(&["--config", "run.toml", "--output", "b.csv"], dir.path());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(code(&b), 0);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 4);
}

#[test]
fn config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "potential = \"bounded-electric\"\n[params]\nm = 0.5\n").unwrap();
    let o = bin(&["validate", "--config", "run.toml", "--grid-nodes", "201"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["validation"]["passed"], true);
    let echo: RunConfig = serde_json::from_value(v["config"].clone()).unwrap();
    assert_eq!(echo.grid_nodes, Some(201));
    assert_eq!(echo.params["m"], 0.5);
    // the echo is itself a usable config file
    std::fs::write(dir.path().join("echo.toml"), toml::to_string(&echo).unwrap()).unwrap();
    let again = bin(&["--config", "echo.toml"], dir.path());
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["rates", "--potential", "no-such", "--n", "1", "--lambdas", "100"], dir.path());
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_error(&o)["error"]["kind"], "config");
    let o = bin(&["rates", "--potential", "bounded-electric", "--n", "1", "--lambdas", "100:50:x2"], dir.path());
    assert_eq!(code(&o), 2);
    let o = bin(&["rates", "--potential", "bounded-electric", "--lambdas", "100"], dir.path());
    assert_eq!(code(&o), 2);
    // zero has no sign change of the diagonal imaginary parts
    let o = bin(&["rates", "--potential", "zero", "--n", "1", "--lambdas", "100"], dir.path());
    assert_eq!(code(&o), 4);
    assert_eq!(stderr_error(&o)["error"]["kind"], "assumption");
    // a grid far too coarse for the phase makes the oracle disagree
    let o = bin(
        &["oracle-check", "--potential", "bounded-electric", "--n", "1", "--lambda", "100", "--oracle-step", "0.1"],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["agrees"], false);
}

#[test]
fn mirrored_negative_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let run = |pot: &str, lams: &str| {
        let o = bin(&["rates", "--potential", pot, "--n", "1", "--lambdas", lams, "--no-oracle"], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
            .collect::<Vec<_>>()
    };
    let pos = run("bounded-electric", "100:400:x2");
    let mut neg = run("bounded-electric-mirror", "-100:-400:x2");
    neg.reverse();
    for (p, q) in pos.iter().zip(&neg) {
        assert!((p / q - 1.0).abs() < 1e-6, "{p} {q}");
    }
}
