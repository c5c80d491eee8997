use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergochain"))
}

fn here(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(config)
        .arg("--output")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn list_is_stable() {
    let a = bin().arg("list").output().unwrap();
    let b = bin().arg("list").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for name in [
        "DYADIC",
        "DECAY2D",
        "POINT",
        "COUNTEREXAMPLE",
        "tightness_probe",
        "z_return_probe",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn verdicts_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let pass = run(
        &here("configs/dyadic_condition_e.toml"),
        &tmp.path().join("e"),
        &[],
    );
    assert_eq!(
        pass.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&pass.stderr)
    );
    let fail = run(
        &here("configs/flip_liminf.toml"),
        &tmp.path().join("f"),
        &[],
    );
    assert_eq!(fail.status.code(), Some(1));
    let tight = run(
        &here("configs/counterexample_tightness.toml"),
        &tmp.path().join("t"),
        &[],
    );
    assert_eq!(tight.status.code(), Some(1));
    let report = read(&tmp.path().join("t/report.json"));
    assert!(report.contains("\"verdict\": \"FAIL\""));
    assert!(report.contains("\"mode\": \"patched\""));
}

#[test]
fn artifacts_are_written_with_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    run(&here("configs/counterexample_escape.toml"), &out, &[]);
    let csv = read(&out.join("series.csv"));
    assert!(csv.starts_with("n,estimate,ci_low,ci_high\n"));
    assert_eq!(csv.lines().count(), 1001);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["schema"], "ergochain-manifest/1");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn reruns_are_byte_identical_and_manifest_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = here("configs/dyadic_condition_e.toml");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(&cfg, &a, &["--threads", "1"]);
    run(&cfg, &b, &["--threads", "8"]);
    for f in ["report.json", "series.csv", "manifest.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&a.join("manifest.json"))).unwrap();
    let echo = tmp.path().join("echo.toml");
    fs::write(&echo, manifest["config"].as_str().unwrap()).unwrap();
    let c = tmp.path().join("c");
    run(&echo, &c, &[]);
    assert_eq!(read(&a.join("report.json")), read(&c.join("report.json")));
    assert_eq!(read(&a.join("series.csv")), read(&c.join("series.csv")));
}

#[test]
fn golden_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    let o = run(&here("tests/golden/dyadic_small.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        read(&out.join("report.json")),
        read(&here("tests/golden/dyadic_small.report.json"))
    );
    assert_eq!(
        read(&out.join("series.csv")),
        read(&here("tests/golden/dyadic_small.series.csv"))
    );
}

#[test]
fn seed_override_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = here("tests/golden/dyadic_small.toml");
    run(&cfg, &tmp.path().join("a"), &[]);
    run(&cfg, &tmp.path().join("b"), &["--seed", "1"]);
    assert_ne!(
        read(&tmp.path().join("a/series.csv")),
        read(&tmp.path().join("b/series.csv"))
    );
    assert!(read(&tmp.path().join("b/manifest.json")).contains("\"seed\": 1,"));
}

#[test]
fn literal_mode_is_an_invariant_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &here("configs/counterexample_escape.toml"),
        &tmp.path().join("l"),
        &["--mode", "literal"],
    );
    assert_eq!(o.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parameters invalid at (1,1)"));
}

#[test]
fn config_errors_exit_64_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "seed = 1\n[kernel]\nbuiltin = \"DYADIC\"\n[diagnostic]\nname = \"tightness_probe\"\n[diagnostic.params]\nepz = 0.1\n").unwrap();
    let o = run(&bad, &tmp.path().join("x"), &[]);
    assert_eq!(o.status.code(), Some(64));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("epz") && err.contains("line 7"), "{err}");

    fs::write(&bad, "seed = \"x\"\n").unwrap();
    assert_eq!(
        run(&bad, &tmp.path().join("x"), &[]).status.code(),
        Some(64)
    );
    let missing = tmp.path().join("missing.toml");
    assert_eq!(
        run(&missing, &tmp.path().join("x"), &[]).status.code(),
        Some(64)
    );
}

#[test]
fn space_mismatch_exits_65() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("m.toml");
    fs::write(
        &cfg,
        "seed = 1\n[kernel]\nbuiltin = \"DECAY2D\"\n[diagnostic]\nname = \"tightness_probe\"\n[diagnostic.params]\nz = 0.0\neps = 0.1\nn = 10\nm = 10\n",
    )
    .unwrap();
    assert_eq!(
        run(&cfg, &tmp.path().join("x"), &[]).status.code(),
        Some(65)
    );
}
