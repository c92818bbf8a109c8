use std::fs;

use follmer_core::follmer::{
    construct_follmer, nonuniqueness_witness, pair_from_json, pair_to_json, verify_ky_all, Target,
};
use follmer_core::lattice::io::{parse_tree, tree_to_json};
use follmer_core::lattice::DEFAULT_ENUMERATION_CAP;
use follmer_core::mc::{run_manifest, Manifest};
use follmer_core::rational::rat;

const BINARY: &str = r#"{"horizon": 1, "nodes": [
  {"id": "r", "parent": null, "prob": "1", "state": null, "z": "1"},
  {"id": "u", "parent": "r", "prob": "1/2", "state": "u", "z": "3/2"},
  {"id": "d", "parent": "r", "prob": "1/2", "state": "d", "z": "1/4"}]}"#;

#[test]
fn tree_file_round_trip() {
    let tf = parse_tree(BINARY).unwrap();
    let z = tf.require_z().unwrap();
    let again = parse_tree(&tree_to_json(&tf.tree, Some(z))).unwrap();
    assert_eq!(again.tree.len(), 3);
    assert_eq!(again.require_z().unwrap().values(), z.values());
}

#[test]
fn pair_survives_serialization_and_verifies() {
    let tf = parse_tree(BINARY).unwrap();
    let z = tf.require_z().unwrap();
    let pair = construct_follmer(&tf.tree, z, Target::Cemetery).unwrap();
    assert_eq!(pair.killed_mass(), rat(1, 8));
    let back = pair_from_json(&tf.tree, &pair_to_json(&tf.tree, &pair)).unwrap();
    assert!(verify_ky_all(&back, &tf.tree, z, DEFAULT_ENUMERATION_CAP).unwrap().ok);
}

#[test]
fn witness_splits_lost_mass() {
    let tf = parse_tree(BINARY).unwrap();
    let w = nonuniqueness_witness(&tf.tree, tf.require_z().unwrap(), "u").unwrap();
    assert_eq!(w.total_variation, rat(1, 8));
}

#[test]
fn gallery_manifest_writes_artifacts() {
    let dir = std::env::temp_dir().join(format!("follmer-pipeline-{}", std::process::id()));
    let mut m = Manifest::gallery("exp_decay", 11).unwrap();
    m.n_paths = 20_000;
    let summary = run_manifest(&m, Some(&dir), Some(2)).unwrap();
    assert!(summary.all_pass, "{:?}", summary.checks);
    for f in ["manifest.json", "series_Q_tau_gt_t.csv", "plot_data.csv", "summary.json"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let replay = Manifest::from_json(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let again = run_manifest(&replay, None, Some(1)).unwrap();
    assert_eq!(again.values, summary.values);
    fs::remove_dir_all(&dir).ok();
}
