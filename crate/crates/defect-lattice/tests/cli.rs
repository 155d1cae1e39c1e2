//! End-to-end runs of the command line binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defect-lattice")).args(args).output().expect("binary runs")
}

fn small_vacancy(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = configs().join("vacancy.toml");
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--set", "model.r_dom=12", "--set", "analysis.radii=[8.0, 10.0, 12.0]"];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn relax_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_vacancy("relax", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["manifest.toml", "trace.tsv", "u.tsv", "decay.tsv"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let manifest: toml::Table = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap().parse().unwrap();
    let result = manifest["result"].as_table().unwrap();
    assert_eq!(result["termination"].as_str(), Some("converged"));
    assert!(result["energy"].as_float().unwrap() < 0.0);
    let u = std::fs::read_to_string(dir.path().join("u.tsv")).unwrap();
    assert!(u.starts_with("n1\tn2\tn3\tx1"));
}

#[test]
fn relax_tables_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(small_vacancy("relax", a.path(), &["--seed", "9"]).status.success());
    assert!(small_vacancy("relax", b.path(), &["--seed", "9"]).status.success());
    for f in ["trace.tsv", "u.tsv", "decay.tsv"] {
        let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn decay_fit_reads_relax_output() {
    let dir = tempfile::tempdir().unwrap();
    let wide = ["--set", "model.r_dom=16", "--set", "analysis.fit_rmin=1.5"];
    assert!(small_vacancy("relax", dir.path(), &wide).status.success());
    let input = dir.path().join("u.tsv");
    let fit_dir = dir.path().join("fit");
    let out = small_vacancy("decay-fit", &fit_dir, &[&wide[..], &["--set", &format!("analysis.input=\"{}\"", input.display())]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fit_dir.join("fit.tsv").exists());
}

#[test]
fn invalid_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_vacancy("relax", dir.path(), &["--set", "model.r_dom=-5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.r_dom"));

    let out = small_vacancy("relax", dir.path(), &["--set", "model.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["relax", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_iteration_limit_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_vacancy("relax", dir.path(), &["--set", "solver.max_iter=2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("manifest.toml").exists());
}

#[test]
fn stability_of_the_laplacian() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("laplacian.toml");
    let out = run(&["stability", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: toml::Table = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap().parse().unwrap();
    let c = manifest["result"]["c_min"].as_float().unwrap();
    assert!((c - 4.0 / std::f64::consts::PI.powi(2)).abs() < 1e-3, "{c}");
    assert!(dir.path().join("stability.tsv").exists());
}
