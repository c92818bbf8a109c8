//! Random small trees and rational supermartingales for property tests and
//! the acceptance corpus.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;

use crate::lattice::process::AdaptedProcess;
use crate::lattice::stopping::count_stopping_times;
use crate::lattice::tree::{FilteredTree, NodeSpec};
use crate::rational::{int, rat, Rational};

#[derive(Clone, Debug)]
pub struct TreeShape {
    pub max_horizon: usize,
    pub max_branching: usize,
    /// Trees with more stopping times than this are resampled.
    pub max_stopping_times: u64,
}

impl Default for TreeShape {
    fn default() -> Self {
        TreeShape { max_horizon: 4, max_branching: 3, max_stopping_times: 5000 }
    }
}

/// Labels come from {a, b}; the declared alphabet also holds `c`, so `c` is
/// always a state no path visits.
pub fn random_tree<R: Rng>(rng: &mut R, shape: &TreeShape) -> FilteredTree {
    loop {
        let tree = sample_tree(rng, shape);
        if count_stopping_times(&tree) <= BigUint::from(shape.max_stopping_times) {
            return tree;
        }
    }
}

fn sample_tree<R: Rng>(rng: &mut R, shape: &TreeShape) -> FilteredTree {
    let horizon = rng.random_range(1..=shape.max_horizon.max(1));
    let label = |rng: &mut R| if rng.random_bool(0.5) { "a" } else { "b" };
    let mut specs = vec![NodeSpec::new("n0", None, int(1)).with_state(label(rng))];
    let mut frontier = vec![("n0".to_string(), 0usize)];
    while let Some((id, depth)) = frontier.pop() {
        if depth == horizon {
            continue;
        }
        // Favor narrow levels so deep trees stay enumerable.
        let k = if rng.random_bool(0.45) { 1 } else { rng.random_range(1..=shape.max_branching.max(1)) };
        let weights: Vec<i64> = (0..k).map(|_| rng.random_range(1..=4)).collect();
        let total: i64 = weights.iter().sum();
        for (j, w) in weights.iter().enumerate() {
            let cid = format!("{id}.{j}");
            specs.push(NodeSpec::new(&cid, Some(&id), rat(*w, total)).with_state(label(rng)));
            frontier.push((cid, depth + 1));
        }
    }
    let alphabet = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    FilteredTree::new(horizon, specs, Some(alphabet)).expect("sampled tree is valid")
}

/// Nonnegative rational supermartingale with Z_0 = 1. About a fifth of the
/// draws are martingales; the rest mix martingale steps, strict decreases,
/// predictable zeros (all children 0) and surprise zeros (some children 0).
pub fn random_supermartingale<R: Rng>(rng: &mut R, tree: &FilteredTree) -> AdaptedProcess {
    let martingale_only = rng.random_bool(0.2);
    let mut z = AdaptedProcess::constant(tree, int(0));
    z.values_mut()[0] = int(1);
    for n in 0..tree.len() {
        if tree.is_leaf(n) {
            continue;
        }
        let zn = z[n].clone();
        let children = tree.children(n).to_vec();
        if zn.is_zero() {
            continue;
        }
        let e: Rational = if martingale_only {
            zn.clone()
        } else {
            match rng.random_range(0..20) {
                0 => int(0),
                1..=9 => zn.clone(),
                k => &zn * rat((k % 4) as i64 + 1, 5),
            }
        };
        if e.is_zero() {
            continue;
        }
        let mut weights: Vec<i64> = children.iter().map(|_| rng.random_range(0..=4)).collect();
        if weights.iter().all(|&w| w == 0) {
            weights[0] = 1;
        }
        let denom: Rational = children.iter().zip(&weights).map(|(&c, &w)| &tree.node(c).prob * int(w)).sum();
        for (&c, &w) in children.iter().zip(&weights) {
            z.values_mut()[c] = &e * int(w) / &denom;
        }
    }
    z
}
