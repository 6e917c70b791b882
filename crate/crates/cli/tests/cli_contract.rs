//! Exit-code and output contract of the binary, exercised end to end.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mather-zero"))
}

#[test]
fn missing_potential_file_exits_2_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let status = bin()
        .args([
            "weakkam",
            "--potential",
            "/nonexistent/potential.json",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(!out.exists(), "no partial outputs on config errors");
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let status = bin().args(["flat", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn failed_assertion_exits_1_with_outputs_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // an unattainable tolerance forces the in-run assertion to fail
    std::fs::write(
        &cfg,
        r#"{ "tolerances": { "laplace_rel_err": 1e-15 } }"#,
    )
    .unwrap();
    let out = dir.path().join("results");
    let status = bin()
        .args(["laplace", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(out.join("laplace.csv").exists(), "outputs exist despite the failure");
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("assertions-failed"));
}

#[test]
fn weakkam_scenario_exits_0_and_writes_declared_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let status = bin()
        .args(["weakkam", "--m", "64", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{status:?}");
    for f in ["ukam.csv", "critical.json", "mather.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    // header schema of the solution table
    let text = std::fs::read_to_string(out.join("ukam.csv")).unwrap();
    assert!(text.starts_with("x,u_minus,u_plus,gap\r\n"));
}

#[test]
fn plot_data_reports_schema_problems_by_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("detconv.csv"), "a,b\r\n1,2\r\n").unwrap();
    let status = bin().arg("plot-data").arg(dir.path()).output().unwrap();
    assert_eq!(status.status.code(), Some(3));
    let err = String::from_utf8_lossy(&status.stderr);
    assert!(err.contains("detconv.csv"), "error names the file: {err}");
}

#[test]
fn all_scenario_produces_the_full_output_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // lighter parameters keep this end-to-end run quick
    std::fs::write(
        &cfg,
        r#"{ "m": 128, "beta_list": [25.0, 100.0, 400.0], "hbar_list": [0.05, 0.02], "trials": 40, "n": 2000, "seed": 1 }"#,
    )
    .unwrap();
    let out = dir.path().join("results");
    let status = bin()
        .args(["all", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    for f in [
        "flat.json",
        "spectrum.json",
        "marginal.csv",
        "viscous.csv",
        "concentration_vs_beta.csv",
        "ukam.csv",
        "critical.json",
        "mather.csv",
        "identity.csv",
        "thouless.csv",
        "laplace.csv",
        "detconv.csv",
        "detconv.json",
        "ground.json",
        "wells.csv",
        "detconv_plot.csv",
        "thouless_plot.csv",
        "ubeta_vs_ukam.csv",
        "PLOTS.md",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}
