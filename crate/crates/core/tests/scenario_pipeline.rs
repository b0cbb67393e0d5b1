use std::fs;
use std::path::Path;

use tlsm::inversion::IndicatorKind;
use tlsm::model::CrackScene;
use tlsm::scenario::{compare, read_map_csv, run, verify_manifest, Scenario};

const SMALL: &str = r#"
seed = 11
indicator = "both"

[medium]
mode = "antiplane-scalar"

[pulse]
kind = "tone-burst"
frequency = 4.0

[[scene.arcs]]
start = [-0.1, 0.0]
end = [0.1, 0.0]
stiffness = 0.0

[layout]
kind = "ring"
radius = 1.0
n_sources = 4
n_receivers = 12

[plan]
n_t = 128
duration = 3.0

[noise]
snr_db = 30.0

[grid]
region = [-0.4, 0.4, -0.4, 0.4]
nx = 9
ny = 9
n_normals = 4

[study]
kind = "one-sided"
direction = [0.0, 1.0]
"#;

fn small() -> Scenario {
    Scenario::from_toml(SMALL).unwrap()
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for cell in ["full", "one-sided"] {
        for kind in ["tlsm", "flsm"] {
            let p = dir.join(cell).join(format!("{kind}.csv"));
            out.push((format!("{cell}/{kind}"), fs::read(p).unwrap()));
        }
    }
    out
}

#[test]
fn pipeline_writes_every_artifact_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run(&small(), a.path(), 1).unwrap();
    let rb = run(&small(), b.path(), 2).unwrap();
    assert!(rb.complete());
    assert!(ra.complete(), "{:?}", ra.manifest.failures);
    assert_eq!(csvs(a.path()), csvs(b.path()));

    let listed: Vec<&str> = ra.manifest.artifacts.iter().map(|x| x.path.as_str()).collect();
    for p in [
        "dataset.bin",
        "dataset.toml",
        "scenario.toml",
        "full/tlsm.csv",
        "full/tlsm.pgm",
        "one-sided/flsm.csv",
        "metrics.toml",
    ] {
        assert!(listed.contains(&p), "{p} missing from manifest");
    }
    let full = ra.map("full", IndicatorKind::Tlsm).unwrap();
    assert!(full.metrics.as_ref().unwrap().localization_cells <= 2.0);
    assert!(ra.map("one-sided", IndicatorKind::Tlsm).unwrap().degradation_cells.is_some());
}

#[test]
fn manifest_verification_detects_bit_flips() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = small();
    s.indicator = tlsm::scenario::IndicatorChoice::Tlsm;
    run(&s, dir.path(), 1).unwrap();
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
    let target = dir.path().join("full/tlsm.csv");
    let mut bytes = fs::read(&target).unwrap();
    let last = bytes.len() - 2;
    bytes[last] ^= 1;
    fs::write(&target, bytes).unwrap();
    assert_eq!(verify_manifest(dir.path()).unwrap(), vec!["full/tlsm.csv".to_string()]);
    fs::remove_file(dir.path().join("dataset.bin")).unwrap();
    assert_eq!(verify_manifest(dir.path()).unwrap().len(), 2);
}

#[test]
fn empty_scene_reports_invalid_map() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = small();
    s.scene = CrackScene::empty();
    s.indicator = tlsm::scenario::IndicatorChoice::Tlsm;
    let r = run(&s, dir.path(), 1).unwrap();
    assert!(!r.complete());
    assert!(r.manifest.failures.iter().all(|f| f.contains("invalid indicator map")));
    assert_eq!(r.manifest.failures.len(), 2);
    let rep = r.map("full", IndicatorKind::Tlsm).unwrap();
    assert!(rep.error.is_some() && rep.metrics.is_none());
    let text = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(text.contains("complete = false"));
}

#[test]
fn compare_map_with_itself_and_grid_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = small();
    s.indicator = tlsm::scenario::IndicatorChoice::Tlsm;
    s.study = tlsm::scenario::Study::Full;
    run(&s, dir.path(), 1).unwrap();
    let values = read_map_csv(&dir.path().join("full/tlsm.csv"), &s.grid).unwrap();
    let c = compare(&values, &values, &s.grid, &s.scene, s.tau).unwrap();
    assert_eq!(c.mask_overlap, 1.0);
    assert_eq!(c.a.hausdorff, c.b.hausdorff);
    assert_eq!(c.a.components, c.b.components);
    assert_eq!(c.a.spurious_components, c.b.spurious_components);

    let mut other = s.grid.clone();
    other.nx = 10;
    assert!(read_map_csv(&dir.path().join("full/tlsm.csv"), &other).is_err());
    assert!(compare(&values, &values[1..], &s.grid, &s.scene, s.tau).is_err());
}

#[test]
fn invert_existing_dataset() {
    let gen = tempfile::tempdir().unwrap();
    let mut s = small();
    s.indicator = tlsm::scenario::IndicatorChoice::Tlsm;
    s.study = tlsm::scenario::Study::Full;
    tlsm::scenario::generate_to(&s, gen.path(), 1).unwrap();
    let inv = tempfile::tempdir().unwrap();
    let mut from_file = s.clone();
    from_file.dataset = Some(gen.path().join("dataset"));
    let r = run(&from_file, inv.path(), 1).unwrap();
    assert!(r.complete());
    let direct = tempfile::tempdir().unwrap();
    run(&s, direct.path(), 1).unwrap();
    assert_eq!(
        fs::read(inv.path().join("full/tlsm.csv")).unwrap(),
        fs::read(direct.path().join("full/tlsm.csv")).unwrap()
    );
}
