use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GRID: &str = "[xgrid]\nlo = -2.0\nhi = 2.0\nn = 161\n";

fn bipo(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bipo"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, format!("{GRID}{body}\n[output]\ndir = \"out\"\n")).unwrap();
    path
}

fn run(cmd: &str, config: &Path) -> Output {
    bipo(&[cmd, "--config", config.to_str().unwrap()], &[])
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Value of the `x\y` matrix CSV at coordinates `(x, y)`.
fn matrix_entry(path: &Path, x: f64, y: f64) -> f64 {
    let rows = read_csv(path);
    let col = rows[0].iter().position(|h| h.parse::<f64>().ok() == Some(y)).unwrap();
    let row = rows[1..].iter().find(|r| r[0].parse::<f64>().unwrap() == x).unwrap();
    row[col].parse().unwrap()
}

#[test]
fn conjugate_of_quadratic_and_indicator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[function]\nkind = \"quadratic\"\ncoeff = 1.0\n");
    let out = run("conjugate", &cfg);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("out/conjugate.csv"));
    assert_eq!(rows[0], ["y", "conjugate", "argmax_x"]);
    for r in &rows[1..] {
        let (y, v): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!((v - y * y / 2.0).abs() <= 1e-4);
    }
    assert!(dir.path().join("out/biconjugate.csv").exists());

    let cfg = write_config(dir.path(), "[function]\nkind = \"indicator_point\"\nat = 0.0\n");
    assert_eq!(code(&run("conjugate", &cfg)), 0);
    let rows = read_csv(&dir.path().join("out/conjugate.csv"));
    assert!(rows[1..].iter().all(|r| r[1].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn synth_fan_and_singleton() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[cover]\nkind = \"quadratic_fan\"\nlambda_min = 0.25\nlambda_max = 4.0\nk = 65\n",
    );
    let out = run("synth", &cfg);
    assert_eq!(code(&out), 0);
    let o = dir.path().join("out");
    for f in ["b_table.csv", "argmin_lambda.csv", "graph_b.csv", "graph_union.csv", "summary.txt", "summary.json"] {
        assert!(o.join(f).exists(), "{f}");
    }
    assert!((matrix_entry(&o.join("b_table.csv"), 1.0, 1.0) - 1.0).abs() <= 1e-12);

    let cfg = write_config(
        dir.path(),
        "[cover]\nkind = \"singleton\"\nfunction = { kind = \"quadratic\", coeff = 1.0 }\n",
    );
    assert_eq!(code(&run("synth", &cfg)), 0);
    for (x, y) in [(1.0, 1.0), (-2.0, 0.5), (0.0, 0.0)] {
        let b = matrix_entry(&o.join("b_table.csv"), x, y);
        assert!((b - (x * x + y * y) / 2.0).abs() <= 1e-12);
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&bipo(&["verify", "--config", "/nonexistent/run.toml"], &[])), 2);

    let cfg = write_config(dir.path(), "[cover]\nkind = \"cubic_fan\"\n");
    assert_eq!(code(&run("verify", &cfg)), 2);

    let cfg = write_config(
        dir.path(),
        "[cover]\nkind = \"quadratic_fan\"\nlambda_min = 4.0\nlambda_max = 0.25\nk = 9\n",
    );
    assert_eq!(code(&run("synth", &cfg)), 2);

    let cfg = write_config(dir.path(), "[function]\nkind = \"table\"\npath = \"missing.csv\"\n");
    assert_eq!(code(&run("conjugate", &cfg)), 2);

    let cfg = write_config(dir.path(), "[cover]\nkind = \"tabulated\"\npath = \"missing.csv\"\n");
    assert_eq!(code(&run("synth", &cfg)), 2);

    let cfg = write_config(dir.path(), "[cover]\nkind = \"singleton\"\nfunction = { kind = \"abs\" }\n");
    assert_eq!(code(&bipo(&["synth", "--config", cfg.to_str().unwrap()], &[("BIPO_THREADS", "zero")])), 2);
    assert_eq!(code(&bipo(&["synth", "--config", cfg.to_str().unwrap(), "--tol-graph", "-1"], &[])), 2);
    assert_eq!(code(&bipo(&["synth"], &[])), 2);
}

#[test]
fn two_point_cover_fails_fan_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[cover]\nkind = \"quadratic_fan\"\nlambda_min = 0.25\nlambda_max = 4.0\nk = 2\nlambda_set = \"finite\"\n",
    );
    let out = bipo(&["verify", "--config", cfg.to_str().unwrap(), "--exhaustive"], &[("BIPO_THREADS", "2")]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("fan_bic"));
    let summary = std::fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("fan_bic: fail\n"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(json["overall"], false);
    let rows = read_csv(&dir.path().join("out/fan_failures.csv"));
    assert!(rows[1..].iter().any(|r| r[4] == "0.5"));
}

#[test]
fn fan_verify_passes_and_manifest_matches_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[cover]\nkind = \"quadratic_fan\"\nlambda_min = 0.25\nlambda_max = 4.0\nk = 65\n\n[sampling]\nfan_thin = 4\nexhaustive = true\n",
    );
    let out = run("verify", &cfg);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let o = dir.path().join("out");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(o.join("summary.json")).unwrap()).unwrap();
    let manifest: Vec<&str> = json["manifest"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let mut on_disk: Vec<String> = std::fs::read_dir(&o)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| !n.starts_with("summary."))
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = manifest.iter().map(|s| s.to_string()).collect();
    listed.sort();
    assert_eq!(listed, on_disk);
    for c in json["checks"].as_array().unwrap() {
        let src = c["source"].as_str().unwrap();
        assert!(manifest.contains(&src), "{src}");
    }
}

#[test]
fn other_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[cover]\nkind = \"quadratic_fan\"\nlambda_min = 0.25\nlambda_max = 4.0\nk = 17\n",
    );
    for cmd in ["graph", "minimax", "fan-check"] {
        let out = run(cmd, &cfg);
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let rows = read_csv(&dir.path().join("out/fan_summary.csv"));
    assert_eq!(rows.len(), 1 + 2 * 161);
}
