//! Small hand-checkable trees used by tests, benches and the CLI self-test.

use crate::lattice::{AdaptedProcess, FilteredTree, NodeSpec};
use crate::rational::{int, rat, Rational};

/// One step, p = (1/2, 1/2), Z = (1; 3/2, 1/4). States `u`, `d` on the leaves.
pub fn binary() -> (FilteredTree, AdaptedProcess) {
    binary_with(rat(3, 2), rat(1, 4))
}

pub fn binary_with(up: Rational, down: Rational) -> (FilteredTree, AdaptedProcess) {
    let tree = FilteredTree::new(
        1,
        vec![
            NodeSpec::new("r", None, int(1)),
            NodeSpec::new("u", Some("r"), rat(1, 2)).with_state("u"),
            NodeSpec::new("d", Some("r"), rat(1, 2)).with_state("d"),
        ],
        None,
    )
    .expect("valid");
    let z = AdaptedProcess::new(&tree, vec![int(1), up, down]).expect("shape");
    (tree, z)
}

/// Unary chain carrying the given values, one per time.
pub fn chain(values: &[Rational]) -> (FilteredTree, AdaptedProcess) {
    let tree = FilteredTree::chain(values.len() - 1);
    let z = AdaptedProcess::new(&tree, values.to_vec()).expect("shape");
    (tree, z)
}

/// Two steps with a predictable zero on one branch and a surprise zero on
/// the other.
pub fn zero_hits() -> (FilteredTree, AdaptedProcess) {
    let tree = FilteredTree::new(
        2,
        vec![
            NodeSpec::new("r", None, int(1)),
            NodeSpec::new("a", Some("r"), rat(1, 2)).with_state("x"),
            NodeSpec::new("b", Some("r"), rat(1, 2)).with_state("y"),
            NodeSpec::new("aa", Some("a"), int(1)).with_state("x"),
            NodeSpec::new("ba", Some("b"), rat(1, 3)).with_state("x"),
            NodeSpec::new("bb", Some("b"), rat(2, 3)).with_state("y"),
        ],
        None,
    )
    .expect("valid");
    let z = AdaptedProcess::new(&tree, vec![int(1), rat(1, 2), rat(3, 2), int(0), int(0), rat(3, 2)]).expect("shape");
    (tree, z)
}
