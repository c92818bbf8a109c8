use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::tree::{FilteredTree, NodeId};
use crate::rational::Rational;

/// One exact value per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptedProcess {
    values: Vec<Rational>,
}

impl AdaptedProcess {
    pub fn new(tree: &FilteredTree, values: Vec<Rational>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::ProcessShape { expected: tree.len(), got: values.len() });
        }
        Ok(AdaptedProcess { values })
    }

    pub fn constant(tree: &FilteredTree, c: Rational) -> Self {
        AdaptedProcess { values: vec![c; tree.len()] }
    }

    pub fn from_fn(tree: &FilteredTree, f: impl FnMut(NodeId) -> Rational) -> Self {
        AdaptedProcess { values: (0..tree.len()).map(f).collect() }
    }

    pub fn get(&self, n: NodeId) -> &Rational {
        &self.values[n]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Rational] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl std::ops::Index<NodeId> for AdaptedProcess {
    type Output = Rational;
    fn index(&self, n: NodeId) -> &Rational {
        &self.values[n]
    }
}

/// Value at time t is fixed at time t − 1: `next[n]` is the value shared by
/// all children of the internal node `n`; `initial` is the time-0 value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictableProcess {
    pub initial: Rational,
    pub next: Vec<Option<Rational>>,
}

impl PredictableProcess {
    /// Builds from a per-child rule evaluated once per internal node.
    pub fn from_parent_fn(tree: &FilteredTree, initial: Rational, mut f: impl FnMut(NodeId) -> Rational) -> Self {
        let next = (0..tree.len()).map(|n| (!tree.is_leaf(n)).then(|| f(n))).collect();
        PredictableProcess { initial, next }
    }

    /// Value at time depth(n), seen on node n.
    pub fn at(&self, tree: &FilteredTree, n: NodeId) -> &Rational {
        match tree.parent(n) {
            None => &self.initial,
            Some(p) => self.next[p].as_ref().expect("internal node carries a next value"),
        }
    }

    pub fn to_adapted(&self, tree: &FilteredTree) -> AdaptedProcess {
        AdaptedProcess::from_fn(tree, |n| self.at(tree, n).clone())
    }

    /// Nonincreasing along every path.
    pub fn is_nonincreasing(&self, tree: &FilteredTree) -> bool {
        (1..tree.len()).all(|n| self.at(tree, n) <= self.at(tree, tree.parent(n).unwrap()))
    }
}

/// Σ_c p_c X(c) over the children of an internal node.
pub fn child_mean(tree: &FilteredTree, x: &AdaptedProcess, n: NodeId) -> Rational {
    tree.children(n).iter().map(|&c| &tree.node(c).prob * &x[c]).sum()
}

/// E[X_T | F_t] on nodes of depth ≥ t; nodes above time t keep X.
pub fn conditional_expectation(tree: &FilteredTree, x: &AdaptedProcess, t: usize) -> Result<AdaptedProcess> {
    tree.check_time(t)?;
    let mut avg = x.values.clone();
    for n in (0..tree.len()).rev() {
        if !tree.is_leaf(n) {
            avg[n] = tree.children(n).iter().map(|&c| &tree.node(c).prob * &avg[c]).sum();
        }
    }
    Ok(AdaptedProcess::from_fn(tree, |n| {
        if tree.depth(n) >= t {
            avg[tree.ancestor_at(n, t)].clone()
        } else {
            x[n].clone()
        }
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SupermartingaleReport {
    pub ok: bool,
    pub is_martingale: bool,
    pub first_violation_node: Option<String>,
    pub reason: Option<String>,
}

/// Nonnegativity, E[Z_0] = 1, and the one-step supermartingale inequality,
/// checked exactly in breadth-first order.
pub fn is_supermartingale(tree: &FilteredTree, z: &AdaptedProcess) -> SupermartingaleReport {
    let mut is_martingale = true;
    let fail = |n: NodeId, reason: String| SupermartingaleReport {
        ok: false,
        is_martingale: false,
        first_violation_node: Some(tree.id(n).to_string()),
        reason: Some(reason),
    };
    if !z[0].is_one() {
        return fail(0, format!("Z_0 = {}, expected 1", crate::rational::format_rational(&z[0])));
    }
    for n in 0..tree.len() {
        if z[n].is_negative() {
            return fail(n, "negative value".into());
        }
        if !tree.is_leaf(n) {
            let e = child_mean(tree, z, n);
            if e > z[n] {
                return fail(n, "conditional mean of the next value exceeds the current value".into());
            }
            if e != z[n] {
                is_martingale = false;
            }
        }
    }
    SupermartingaleReport { ok: true, is_martingale, first_violation_node: None, reason: None }
}

pub fn require_supermartingale(tree: &FilteredTree, z: &AdaptedProcess) -> Result<SupermartingaleReport> {
    if z.len() != tree.len() {
        return Err(Error::ProcessShape { expected: tree.len(), got: z.len() });
    }
    let r = is_supermartingale(tree, z);
    if !r.ok {
        return Err(Error::NotSupermartingale {
            node: r.first_violation_node.clone().unwrap_or_default(),
            reason: r.reason.clone().unwrap_or_default(),
        });
    }
    Ok(r)
}

/// E_P[X_T].
pub fn terminal_mean(tree: &FilteredTree, x: &AdaptedProcess) -> Rational {
    tree.leaves().map(|l| tree.path_prob(l) * &x[l]).fold(Rational::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::random::{random_supermartingale, random_tree, TreeShape};
    use crate::lattice::tree::NodeSpec;
    use crate::rational::{int, rat};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn binary() -> FilteredTree {
        FilteredTree::new(
            1,
            vec![
                NodeSpec::new("r", None, rat(1, 1)),
                NodeSpec::new("u", Some("r"), rat(1, 2)),
                NodeSpec::new("d", Some("r"), rat(1, 2)),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn conditional_expectation_of_two_leaves() {
        let t = binary();
        let x = AdaptedProcess::new(&t, vec![int(1), rat(3, 2), rat(1, 4)]).unwrap();
        let ce = conditional_expectation(&t, &x, 0).unwrap();
        assert_eq!(ce[0], rat(7, 8));
        assert_eq!(ce[1], rat(7, 8));
        assert_eq!(conditional_expectation(&t, &x, 1).unwrap(), x);
    }

    #[test]
    fn constants_are_fixed() {
        let t = binary();
        let c = AdaptedProcess::constant(&t, rat(5, 3));
        for s in 0..=1 {
            assert_eq!(conditional_expectation(&t, &c, s).unwrap(), c);
        }
    }

    #[test]
    fn time_out_of_range() {
        let t = binary();
        let c = AdaptedProcess::constant(&t, int(1));
        assert!(matches!(conditional_expectation(&t, &c, 2), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn supermartingale_examples() {
        let t = binary();
        let one = AdaptedProcess::constant(&t, int(1));
        let r = is_supermartingale(&t, &one);
        assert!(r.ok && r.is_martingale);

        let z = AdaptedProcess::new(&t, vec![int(1), rat(3, 2), rat(1, 4)]).unwrap();
        let r = is_supermartingale(&t, &z);
        assert!(r.ok && !r.is_martingale);

        let z = AdaptedProcess::new(&t, vec![int(1), rat(3, 2), rat(3, 4)]).unwrap();
        let r = is_supermartingale(&t, &z);
        assert!(!r.ok);
        assert_eq!(r.first_violation_node.as_deref(), Some("r"));
    }

    #[test]
    fn predictable_reads_parent_slot() {
        let t = binary();
        let d = PredictableProcess::from_parent_fn(&t, int(1), |_| rat(7, 8));
        assert_eq!(d.at(&t, 0), &int(1));
        assert_eq!(d.at(&t, 2), &rat(7, 8));
        assert!(d.is_nonincreasing(&t));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn tower_property(seed in any::<u64>(), s in 0usize..=4, t in 0usize..=4) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tree = random_tree(&mut rng, &TreeShape::default());
            let z = random_supermartingale(&mut rng, &tree);
            let (s, t) = (s.min(t).min(tree.horizon()), t.min(tree.horizon()));
            let inner = conditional_expectation(&tree, &z, t).unwrap();
            let lhs = conditional_expectation(&tree, &inner, s).unwrap();
            prop_assert_eq!(lhs, conditional_expectation(&tree, &z, s).unwrap());
        }

        #[test]
        fn cylinders_sum_to_one(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tree = random_tree(&mut rng, &TreeShape::default());
            for t in 0..=tree.horizon() {
                let total: Rational = tree.at_depth(t).map(|n| tree.path_prob(n).clone()).sum();
                prop_assert!(total.is_one());
            }
        }
    }
}
