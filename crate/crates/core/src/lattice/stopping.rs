use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::process::AdaptedProcess;
use crate::lattice::tree::{FilteredTree, NodeId};
use crate::rational::Rational;

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// A stopping time given extensionally by the nodes where it stops. Paths
/// that avoid every stop node never stop.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StoppingTime {
    pub stop_nodes: BTreeSet<NodeId>,
    pub allows_never: bool,
}

impl StoppingTime {
    pub fn new(tree: &FilteredTree, nodes: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let stop_nodes: BTreeSet<NodeId> = nodes.into_iter().collect();
        for &a in &stop_nodes {
            for &b in &stop_nodes {
                if a != b && tree.is_ancestor_or_self(a, b) {
                    return Err(Error::NotAntichain { ancestor: tree.id(a).into(), descendant: tree.id(b).into() });
                }
            }
        }
        Ok(Self::from_antichain(tree, stop_nodes))
    }

    fn from_antichain(tree: &FilteredTree, stop_nodes: BTreeSet<NodeId>) -> Self {
        let mass: Rational = stop_nodes.iter().map(|&n| tree.path_prob(n).clone()).sum();
        let allows_never = !mass.is_one();
        StoppingTime { stop_nodes, allows_never }
    }

    pub fn constant(tree: &FilteredTree, t: usize) -> Result<Self> {
        tree.check_time(t)?;
        Ok(Self::from_antichain(tree, tree.at_depth(t).collect()))
    }

    pub fn never() -> Self {
        StoppingTime { stop_nodes: BTreeSet::new(), allows_never: true }
    }

    pub fn is_never(&self) -> bool {
        self.stop_nodes.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        !self.allows_never
    }

    /// For every node, the stop node at or above it, if any.
    pub fn covering(&self, tree: &FilteredTree) -> Vec<Option<NodeId>> {
        let mut cover: Vec<Option<NodeId>> = vec![None; tree.len()];
        for n in 0..tree.len() {
            cover[n] = if self.stop_nodes.contains(&n) { Some(n) } else { tree.parent(n).and_then(|p| cover[p]) };
        }
        cover
    }

    pub fn describe(&self, tree: &FilteredTree) -> String {
        if self.is_never() {
            return "never".into();
        }
        let ids: Vec<&str> = self.stop_nodes.iter().map(|&n| tree.id(n)).collect();
        format!("{{{}}}", ids.join(","))
    }
}

/// Number of stopping times: 2 at a leaf (stop or not), 1 + Π over children
/// at an internal node.
pub fn count_stopping_times(tree: &FilteredTree) -> BigUint {
    let mut count = vec![BigUint::zero(); tree.len()];
    for n in (0..tree.len()).rev() {
        count[n] = if tree.is_leaf(n) {
            BigUint::from(2u32)
        } else {
            BigUint::one() + tree.children(n).iter().map(|&c| &count[c]).product::<BigUint>()
        };
    }
    count.swap_remove(0)
}

pub fn enumerate_stopping_times(tree: &FilteredTree, cap: u64) -> Result<Vec<StoppingTime>> {
    let count = count_stopping_times(tree);
    if count > BigUint::from(cap) {
        return Err(Error::EnumerationCap { count: count.to_string(), cap });
    }
    let mut options: Vec<Vec<Vec<NodeId>>> = vec![Vec::new(); tree.len()];
    for n in (0..tree.len()).rev() {
        let mut here = vec![vec![n]];
        if tree.is_leaf(n) {
            here.push(Vec::new());
        } else {
            let mut combos: Vec<Vec<NodeId>> = vec![Vec::new()];
            for &c in tree.children(n) {
                let mut next = Vec::with_capacity(combos.len() * options[c].len());
                for base in &combos {
                    for opt in &options[c] {
                        let mut v = base.clone();
                        v.extend_from_slice(opt);
                        next.push(v);
                    }
                }
                combos = next;
                options[c] = Vec::new();
            }
            here.extend(combos);
        }
        options[n] = here;
    }
    let all = std::mem::take(&mut options[0]);
    debug_assert_eq!(Some(all.len()), count.to_usize());
    Ok(all.into_iter().map(|v| StoppingTime::from_antichain(tree, v.into_iter().collect())).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StopValue {
    /// X at the stop node covering each node; `None` where the path has not
    /// stopped by that node and never stops above it.
    pub per_node: Vec<Option<Rational>>,
    /// E_P[X_ρ 1_{ρ<∞}].
    pub expectation: Rational,
}

pub fn stop_value(tree: &FilteredTree, x: &AdaptedProcess, rho: &StoppingTime) -> StopValue {
    let per_node = rho.covering(tree).into_iter().map(|c| c.map(|s| x[s].clone())).collect();
    let expectation = rho.stop_nodes.iter().map(|&s| tree.path_prob(s) * &x[s]).sum();
    StopValue { per_node, expectation }
}
