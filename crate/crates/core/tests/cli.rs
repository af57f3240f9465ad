use std::path::Path;
use std::process::{Command, Output};

use resgap::design::TargetGaps;
use resgap::geometry::CellGeometry2D;
use resgap::limit::GapReport;

fn resgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resgap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_report(path: &Path) -> GapReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SINGLE: &str = r#"{"n":2,"resonators":[{"h":1.0,"eta":1.0,"d_profile_measure":1.0,"b_volume":1.0}],"b0_volume":1.0}"#;

#[test]
fn forward_writes_the_gap_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "model.json", SINGLE);
    let out = dir.path().join("out");
    let run = resgap(&["forward", "--input", &input, "--out", out.to_str().unwrap(), "--maxwell"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = read_report(&out.join("gap_report.json"));
    assert!((report.alphas[0] - 1.0).abs() < 1e-12);
    assert!((report.betas[0] - 2.0).abs() < 1e-10);
    assert!(out.join("maxwell_gaps.json").exists());
    assert!(String::from_utf8_lossy(&run.stdout).contains("frequency gap"));
}

#[test]
fn forward_two_resonators() {
    let dir = tempfile::tempdir().unwrap();
    let model = r#"{"n":2,"resonators":[
        {"h":1.0,"eta":1.0,"d_profile_measure":1.5,"b_volume":1.5},
        {"h":1.0,"eta":1.0,"d_profile_measure":0.5,"b_volume":0.16666666666666666}],"b0_volume":1.0}"#;
    let input = write(dir.path(), "model.json", model);
    let out = dir.path().join("out");
    let run = resgap(&["forward", "--input", &input, "--out", out.to_str().unwrap()]);
    assert!(run.status.success());
    let report = read_report(&out.join("gap_report.json"));
    assert!((report.betas[0] - 2.0).abs() < 1e-9 && (report.betas[1] - 4.0).abs() < 1e-9);
}

#[test]
fn malformed_input_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "model.json", "{\"n\": 2, \"resonators\": [");
    let run = resgap(&["forward", "--input", &input, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn verify_matrix_passes_on_a_valid_model() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "model.json", SINGLE);
    let run = resgap(&["verify-matrix", "--input", &input]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains("matrix check: pass"));
}

#[test]
fn design_roundtrips_one_and_two_gaps() {
    for (text, alphas, betas) in [
        (r#"{"alphas":[1.0],"betas":[2.0]}"#, vec![1.0], vec![2.0]),
        (r#"{"alphas":[1.0,3.0],"betas":[2.0,4.0]}"#, vec![1.0, 3.0], vec![2.0, 4.0]),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let input = write(dir.path(), "targets.json", text);
        let out = dir.path().join("out");
        let run = resgap(&["design", "--input", &input, "--out", out.to_str().unwrap()]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        let geometry: CellGeometry2D =
            serde_json::from_str(&std::fs::read_to_string(out.join("geometry.json")).unwrap()).unwrap();
        assert_eq!(geometry.m(), alphas.len());
        let report = read_report(&out.join("gap_report.json"));
        for (got, want) in report.alphas.iter().zip(&alphas).chain(report.betas.iter().zip(&betas)) {
            assert!((got - want).abs() <= 1e-9 * want);
        }
        assert!(out.join("design.json").exists());
    }
}

#[test]
fn design_rejects_overlapping_targets() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "targets.json", r#"{"alphas":[1.0,1.5],"betas":[2.0,4.0]}"#);
    let run = resgap(&["design", "--input", &input, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn design_rejects_gamma_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "targets.json", r#"{"alphas":[1.0],"betas":[2.0]}"#);
    let run = resgap(&["design", "--input", &input, "--out", dir.path().to_str().unwrap(), "--gamma", "1.5"]);
    assert_ne!(run.status.code(), Some(0));
}

#[test]
fn empty_geometry_has_no_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let geometry = serde_json::to_string(&CellGeometry2D::empty()).unwrap();
    let input = write(dir.path(), "geometry.json", &geometry);
    let out = dir.path().join("out");
    let run = resgap(&[
        "bands", "--input", &input, "--out", out.to_str().unwrap(),
        "--epsilon", "1", "--grid-n", "24", "--theta-grid", "3",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let gaps = std::fs::read_to_string(out.join("gaps.csv")).unwrap();
    assert_eq!(gaps.lines().count(), 1);
    let bands = std::fs::read_to_string(out.join("bands.csv")).unwrap();
    assert_eq!(bands.lines().count(), 1 + 9 * 2);
    assert!(std::fs::read(out.join("mask.pgm")).unwrap().starts_with(b"P5"));
}

#[test]
fn unresolved_passage_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let targets = TargetGaps::new(vec![1.0], vec![2.0]).unwrap();
    let geometry = resgap::design::synthesize_geometry(&targets, 0.5, resgap::design::DEFAULT_LAYOUT_MARGIN).unwrap();
    let input = write(dir.path(), "geometry.json", &serde_json::to_string(&geometry).unwrap());
    let run = resgap(&[
        "bands", "--input", &input, "--out", dir.path().to_str().unwrap(),
        "--epsilon", "0.5", "--grid-n", "32",
    ]);
    assert_eq!(run.status.code(), Some(2));
}
