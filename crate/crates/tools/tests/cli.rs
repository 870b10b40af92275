use std::path::Path;
use std::process::Command;

fn run(args: &[&str], out: &Path) -> String {
    let conf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/small.conf");
    let output = Command::new(env!("CARGO_BIN_EXE_gatemon"))
        .arg("--config")
        .arg(&conf)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "gatemon {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

#[test]
fn full_command_surface_produces_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    run(&["parse"], out);
    assert!(out.join("canonical.net").exists());
    assert!(out.join("design.json").exists());

    run(&["coverage"], out);
    assert!(out.join("coverage_structural.json").exists());
    assert!(out.join("coverage_exact.json").exists());

    run(&["place"], out);
    assert!(out.join("placement.lay").exists());
    assert!(out.join("timing.json").exists());

    run(&["harden"], out);
    assert!(out.join("hardened.net").exists());
    assert!(out.join("harden_summary.json").exists());
    assert!(out.join("final.lay").exists());

    run(&["attack"], out);
    assert!(out.join("attack_report.json").exists());

    let stdout = run(&["report"], out);
    assert!(out.join("report.txt").exists());
    assert!(stdout.contains("report.txt"));
}

#[test]
fn missing_config_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_gatemon"))
        .arg("--config")
        .arg(dir.path().join("nope.conf"))
        .arg("--out")
        .arg(dir.path())
        .arg("parse")
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("error:"));
}
