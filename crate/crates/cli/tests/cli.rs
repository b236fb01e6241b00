//! End-to-end tests of the binary: preset runs, configured checks, the
//! divergence refusal, error JSON on stderr, and byte-stable reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsmear"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

/// Data rows of a CSV written by the binary: comment headers and the schema
/// line stripped.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr not JSON ({e}): {text}"))
}

#[test]
fn example1_even_masses_vanish_and_slices_are_unit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["example1", "--out", "ex"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for row in csv_rows(&tmp.path().join("ex/lambda.csv")) {
        let n: i64 = row[0].parse().unwrap();
        let abs: f64 = row[3].parse().unwrap();
        if n % 2 == 0 {
            assert!(abs <= 1e-12, "lambda({n}) = {abs}");
        }
    }
    let slices = csv_rows(&tmp.path().join("ex/slices.csv"));
    assert!(!slices.is_empty());
    for row in &slices {
        let s: f64 = row[1].parse().unwrap();
        assert!((s - 1.0).abs() <= 1e-9, "slice {}: {s}", row[0]);
    }
}

#[test]
fn convolve_gaussian_pair_adds_variances() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["convolve", "--preset", "gaussian-pair", "--out", "conv"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let rows = csv_rows(&tmp.path().join("conv/moments_k2.csv"));
    let last = rows.last().unwrap();
    let m2: f64 = last[1].parse().unwrap();
    assert!((m2 - 1.5).abs() <= 2e-3, "second moment {m2}");
    assert_eq!(last[4], "converged");
}

#[test]
fn moments_heavy_tail_reports_divergence_without_failing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["moments", "--preset", "heavy-tail", "--out", "mom"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let k1 = csv_rows(&tmp.path().join("mom/moments_k1.csv"));
    assert_eq!(k1.last().unwrap()[4], "converged");
    let k2 = csv_rows(&tmp.path().join("mom/moments_k2.csv"));
    assert_eq!(k2.last().unwrap()[4], "diverging");
}

#[test]
fn smear_with_point_mass_noise_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("cfg.json"),
        r#"{
          "operator": { "position_dim": 8 },
          "mu": { "atoms": [[0.0, 1.0, 0.0]] },
          "kmax": 4,
          "max_distance": 1e-10
        }"#,
    )
    .unwrap();
    let out = run(&["smear", "--config", "cfg.json", "--out", "sm"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for row in csv_rows(&tmp.path().join("sm/distances.csv")) {
        let d: f64 = row[1].parse().unwrap();
        assert!(d <= 1e-10, "k = {}: distance {d}", row[0]);
    }
}

#[test]
fn smear_refuses_divergent_noise_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("cfg.json"),
        r#"{
          "operator": { "position_dim": 8 },
          "mu": { "half_width": 10000.0, "step": 0.5 },
          "edges": [-4.0, -2.0, 0.0, 2.0, 4.0],
          "kmax": 2,
          "probe_radii": [100.0, 1000.0, 10000.0],
          "gate": { "converge_rel": 0.005 }
        }"#,
    )
    .unwrap();
    let out = run(&["smear", "--config", "cfg.json", "--out", "sm"], tmp.path());
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "non_converged_moment");

    let report = fs::read_to_string(tmp.path().join("sm/refusal_k2.csv")).unwrap();
    assert!(report.contains("diverging"), "{report}");
}

#[test]
fn phasespace_emits_povm_directory_and_checks() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("cfg.json"),
        r#"{
          "build": { "dim": 12, "half_width": 4.0, "points_per_axis": 12 },
          "kmax": 1,
          "leading_block": 6
        }"#,
    )
    .unwrap();
    let out = run(
        &["phasespace", "--config", "cfg.json", "--out", "ps"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    assert!(tmp.path().join("ps/povm/grid.json").exists());
    assert!(tmp.path().join("ps/povm/row_000.json").exists());
    assert!(tmp.path().join("ps/povm/marginals.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("ps/summary.json")).unwrap())
            .unwrap();
    let captured = summary["captured_mass_in_state"].as_f64().unwrap();
    assert!(captured > 0.99, "captured mass in seed state: {captured}");

    // One row per bin, two unbounded end bins included.
    let checks = csv_rows(&tmp.path().join("ps/marginal_check_x.csv"));
    assert_eq!(checks.len(), 14);
    let moments = csv_rows(&tmp.path().join("ps/moment_check.csv"));
    assert_eq!(moments.len(), 4);
}

#[test]
fn sampling_eigenstate_is_constant_and_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    // Diagonal observable; basis state 2 is an eigenstate with outcome 2.
    fs::write(
        tmp.path().join("smear.json"),
        r#"{
          "operator": { "dim": 4, "entries": [
            [0.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0],
            [0.0,0.0],[1.0,0.0],[0.0,0.0],[0.0,0.0],
            [0.0,0.0],[0.0,0.0],[2.0,0.0],[0.0,0.0],
            [0.0,0.0],[0.0,0.0],[0.0,0.0],[3.0,0.0]
          ]},
          "mu": { "atoms": [[0.0, 1.0, 0.0]] },
          "kmax": 2
        }"#,
    )
    .unwrap();
    let out = run(
        &["smear", "--config", "smear.json", "--out", "sm"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    fs::write(
        tmp.path().join("sample.json"),
        r#"{
          "povm": { "file": "sm/povm.json" },
          "state": { "basis_index": 2 },
          "n": 500,
          "seed": 3,
          "kmax": 2,
          "zmax": 1.0
        }"#,
    )
    .unwrap();
    for dir in ["s1", "s2"] {
        let out = run(
            &["sample", "--config", "sample.json", "--out", dir],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for row in csv_rows(&tmp.path().join("s1/sample.csv")) {
        let x: f64 = row[1].parse().unwrap();
        assert_eq!(x, 2.0, "eigenstate outcome {x}");
    }
    for name in ["sample.csv", "sample.meta.json", "moment_comparison.csv", "run.json"] {
        let a = fs::read(tmp.path().join("s1").join(name)).unwrap();
        let b = fs::read(tmp.path().join("s2").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn bad_usage_yields_error_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["convolve", "--out", "x"], tmp.path());
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "config");

    let out = run(
        &["convolve", "--preset", "no-such-preset", "--out", "x"],
        tmp.path(),
    );
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "config");
    assert!(
        err["message"].as_str().unwrap().contains("gaussian-pair"),
        "message should list presets: {err}"
    );
}
