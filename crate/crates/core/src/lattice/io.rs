//! JSON tree files: `{horizon, alphabet?, nodes: [{id, parent, prob, state, z}]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::process::AdaptedProcess;
use crate::lattice::tree::{FilteredTree, NodeSpec};
use crate::rational::{serde_rational, serde_rational_opt, Rational};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeJson {
    horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphabet: Option<Vec<String>>,
    nodes: Vec<NodeJson>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeJson {
    id: String,
    parent: Option<String>,
    #[serde(with = "serde_rational")]
    prob: Rational,
    #[serde(default)]
    state: Option<String>,
    #[serde(default, with = "serde_rational_opt", skip_serializing_if = "Option::is_none")]
    z: Option<Rational>,
}

/// A tree plus the process carried in its `z` fields, if any.
#[derive(Clone, Debug)]
pub struct TreeFile {
    pub tree: FilteredTree,
    pub z: Option<AdaptedProcess>,
}

impl TreeFile {
    pub fn require_z(&self) -> Result<&AdaptedProcess> {
        self.z.as_ref().ok_or_else(|| Error::TreeFormat("nodes carry no \"z\" values".into()))
    }
}

pub fn parse_tree(text: &str) -> Result<TreeFile> {
    let raw: TreeJson = serde_json::from_str(text).map_err(|e| Error::TreeFormat(e.to_string()))?;
    let has_z = raw.nodes.iter().filter(|n| n.z.is_some()).count();
    if has_z != 0 && has_z != raw.nodes.len() {
        let n = raw.nodes.iter().find(|n| n.z.is_none()).unwrap();
        return Err(Error::InvalidNode { node: n.id.clone(), reason: "missing \"z\" while other nodes carry one".into() });
    }
    let specs = raw
        .nodes
        .iter()
        .map(|n| NodeSpec { id: n.id.clone(), parent: n.parent.clone(), prob: n.prob.clone(), state: n.state.clone() })
        .collect();
    let tree = FilteredTree::new(raw.horizon, specs, raw.alphabet)?;
    let z = if has_z == 0 {
        None
    } else {
        let mut values = vec![Rational::default(); tree.len()];
        for n in &raw.nodes {
            values[tree.lookup(&n.id).unwrap()] = n.z.clone().unwrap();
        }
        Some(AdaptedProcess::new(&tree, values)?)
    };
    Ok(TreeFile { tree, z })
}

pub fn load_tree(path: &Path) -> Result<TreeFile> {
    parse_tree(&std::fs::read_to_string(path)?)
}

/// Writes nodes in breadth-first order; the alphabet is emitted only when it
/// differs from the set of labels in use.
pub fn tree_to_json(tree: &FilteredTree, z: Option<&AdaptedProcess>) -> String {
    let used: std::collections::BTreeSet<&str> = tree.nodes().iter().filter_map(|n| n.state.as_deref()).collect();
    let alphabet_is_default =
        tree.alphabet().len() == used.len() && tree.alphabet().iter().all(|a| used.contains(a.as_str()));
    let raw = TreeJson {
        horizon: tree.horizon(),
        alphabet: (!alphabet_is_default).then(|| tree.alphabet().to_vec()),
        nodes: tree
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| NodeJson {
                id: n.id.clone(),
                parent: n.parent.map(|p| tree.id(p).to_string()),
                prob: n.prob.clone(),
                state: n.state.clone(),
                z: z.map(|z| z[i].clone()),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("tree serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::random::{random_supermartingale, random_tree, TreeShape};
    use proptest::prelude::*;
    use rand::SeedableRng;

    const BINARY: &str = r#"{
      "horizon": 1,
      "nodes": [
        {"id": "r", "parent": null, "prob": "1/1", "state": "u", "z": "1"},
        {"id": "u", "parent": "r", "prob": "1/2", "state": "u", "z": "3/2"},
        {"id": "d", "parent": "r", "prob": "1/2", "state": "d", "z": "1/4"}
      ]
    }"#;

    #[test]
    fn parses_binary_example() {
        let f = parse_tree(BINARY).unwrap();
        assert_eq!(f.tree.len(), 3);
        assert_eq!(f.tree.alphabet(), ["d", "u"]);
        assert_eq!(f.z.unwrap()[2], crate::rational::rat(1, 4));
    }

    #[test]
    fn decimal_probability_is_rejected() {
        let err = parse_tree(&BINARY.replace("\"1/2\", \"state\": \"u\"", "\"0.5\", \"state\": \"u\"")).unwrap_err();
        assert!(err.to_string().contains("0.5"), "{err}");
    }

    #[test]
    fn partial_z_names_node() {
        let err = parse_tree(&BINARY.replace(", \"z\": \"1/4\"", "")).unwrap_err();
        assert!(err.to_string().contains("node d"), "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_is_exact(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tree = random_tree(&mut rng, &TreeShape::default());
            let z = random_supermartingale(&mut rng, &tree);
            let text = tree_to_json(&tree, Some(&z));
            let back = parse_tree(&text).unwrap();
            prop_assert_eq!(back.z.as_ref().unwrap(), &z);
            prop_assert_eq!(back.tree.nodes(), tree.nodes());
            prop_assert_eq!(back.tree.alphabet(), tree.alphabet());
            prop_assert_eq!(tree_to_json(&back.tree, back.z.as_ref()), text);
        }
    }
}
