use std::collections::{BTreeSet, HashMap, VecDeque};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub depth: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Transition probability of the edge from the parent (1 at the root).
    pub prob: Rational,
    pub state: Option<String>,
}

/// Unvalidated node description, as read from a file or built by hand.
#[derive(Clone, Debug)]
pub struct NodeSpec {
    pub id: String,
    pub parent: Option<String>,
    pub prob: Rational,
    pub state: Option<String>,
}

impl NodeSpec {
    pub fn new(id: &str, parent: Option<&str>, prob: Rational) -> Self {
        NodeSpec { id: id.into(), parent: parent.map(Into::into), prob, state: None }
    }

    pub fn with_state(mut self, state: &str) -> Self {
        self.state = Some(state.into());
        self
    }
}

/// Finite-horizon filtered probability space. Nodes are stored in
/// breadth-first order, so index 0 is the root and parents precede children.
#[derive(Clone, Debug)]
pub struct FilteredTree {
    nodes: Vec<Node>,
    horizon: usize,
    alphabet: Vec<String>,
    path_prob: Vec<Rational>,
    by_id: HashMap<String, NodeId>,
}

impl FilteredTree {
    pub fn new(horizon: usize, specs: Vec<NodeSpec>, alphabet: Option<Vec<String>>) -> Result<Self> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, s) in specs.iter().enumerate() {
            if index.insert(s.id.as_str(), i).is_some() {
                return Err(invalid(&s.id, "duplicate node id"));
            }
        }
        let mut roots = specs.iter().enumerate().filter(|(_, s)| s.parent.is_none());
        let root = match (roots.next(), roots.next()) {
            (Some((i, _)), None) => i,
            (None, _) => return Err(Error::TreeFormat("no root node (parent = null)".into())),
            (Some(_), Some((_, s))) => return Err(invalid(&s.id, "second root node")),
        };
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); specs.len()];
        for (i, s) in specs.iter().enumerate() {
            if let Some(p) = &s.parent {
                let &pi = index.get(p.as_str()).ok_or_else(|| invalid(&s.id, &format!("unknown parent {p:?}")))?;
                kids[pi].push(i);
            }
        }

        let mut order = Vec::with_capacity(specs.len());
        let mut new_index = vec![usize::MAX; specs.len()];
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            new_index[i] = order.len();
            order.push(i);
            queue.extend(kids[i].iter().copied());
        }
        if let Some(i) = new_index.iter().position(|&k| k == usize::MAX) {
            return Err(invalid(&specs[i].id, "not reachable from the root"));
        }

        let mut nodes: Vec<Node> = Vec::with_capacity(order.len());
        for &i in &order {
            let s = &specs[i];
            let parent = s.parent.as_ref().map(|p| new_index[index[p.as_str()]]);
            let depth = parent.map_or(0, |p| nodes[p].depth + 1);
            nodes.push(Node {
                id: s.id.clone(),
                depth,
                parent,
                children: kids[i].iter().map(|&c| new_index[c]).collect(),
                prob: s.prob.clone(),
                state: s.state.clone(),
            });
        }

        if !nodes[0].prob.is_one() {
            return Err(invalid(&nodes[0].id, "root probability must be 1"));
        }
        for n in &nodes {
            if n.depth > horizon {
                return Err(invalid(&n.id, &format!("depth {} exceeds horizon {horizon}", n.depth)));
            }
            if n.children.is_empty() && n.depth != horizon {
                return Err(invalid(&n.id, &format!("leaf at depth {} but horizon is {horizon}", n.depth)));
            }
            if n.parent.is_some() && n.prob <= Rational::zero() {
                return Err(invalid(&n.id, &format!("transition probability {} is not positive", format_rational(&n.prob))));
            }
            if !n.children.is_empty() {
                let total: Rational = n.children.iter().map(|&c| &nodes[c].prob).sum();
                if !total.is_one() {
                    return Err(invalid(&n.id, &format!("child probabilities sum to {}, not 1", format_rational(&total))));
                }
            }
        }

        let mut path_prob: Vec<Rational> = Vec::with_capacity(nodes.len());
        for n in &nodes {
            let p = match n.parent {
                Some(p) => &path_prob[p] * &n.prob,
                None => Rational::one(),
            };
            path_prob.push(p);
        }

        let used: BTreeSet<String> = nodes.iter().filter_map(|n| n.state.clone()).collect();
        let alphabet = match alphabet {
            Some(a) => {
                if let Some(n) = nodes.iter().find(|n| n.state.as_ref().is_some_and(|s| !a.contains(s))) {
                    return Err(invalid(&n.id, "state label is not in the declared alphabet"));
                }
                a
            }
            None => used.into_iter().collect(),
        };

        let by_id = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        Ok(FilteredTree { nodes, horizon, alphabet, path_prob, by_id })
    }

    /// Unary chain `n0 -> n1 -> ... -> nT`.
    pub fn chain(horizon: usize) -> Self {
        let specs = (0..=horizon)
            .map(|t| NodeSpec {
                id: format!("n{t}"),
                parent: t.checked_sub(1).map(|p| format!("n{p}")),
                prob: Rational::one(),
                state: None,
            })
            .collect();
        Self::new(horizon, specs, None).expect("chain is well formed")
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn id(&self, n: NodeId) -> &str {
        &self.nodes[n].id
    }

    pub fn lookup(&self, id: &str) -> Option<NodeId> {
        self.by_id.get(id).copied()
    }

    pub fn depth(&self, n: NodeId) -> usize {
        self.nodes[n].depth
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.nodes[n].parent
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[n].children
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.nodes[n].children.is_empty()
    }

    pub fn state(&self, n: NodeId) -> Option<&str> {
        self.nodes[n].state.as_deref()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    /// P of the cylinder through `n`.
    pub fn path_prob(&self, n: NodeId) -> &Rational {
        &self.path_prob[n]
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&n| self.is_leaf(n))
    }

    pub fn at_depth(&self, t: usize) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(move |&n| self.nodes[n].depth == t)
    }

    /// Ancestor of `n` at depth `t`; `n` itself when `t` equals its depth.
    pub fn ancestor_at(&self, mut n: NodeId, t: usize) -> NodeId {
        assert!(t <= self.depth(n));
        while self.depth(n) > t {
            n = self.nodes[n].parent.expect("non-root has a parent");
        }
        n
    }

    /// True if `a` is `n` or lies on the path from the root to `n`.
    pub fn is_ancestor_or_self(&self, a: NodeId, n: NodeId) -> bool {
        self.depth(a) <= self.depth(n) && self.ancestor_at(n, self.depth(a)) == a
    }

    /// Path from the root to `n`, inclusive.
    pub fn path_to(&self, n: NodeId) -> Vec<NodeId> {
        let mut path = vec![n];
        let mut cur = n;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Nodes of the subtree rooted at `n`, in breadth-first order.
    pub fn subtree(&self, n: NodeId) -> Vec<NodeId> {
        let mut out = vec![n];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.nodes[out[i]].children.iter().copied());
            i += 1;
        }
        out
    }

    pub fn check_time(&self, t: usize) -> Result<()> {
        if t > self.horizon {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        Ok(())
    }
}

fn invalid(node: &str, reason: &str) -> Error {
    Error::InvalidNode { node: node.into(), reason: reason.into() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

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
    fn builds_in_breadth_first_order() {
        let t = FilteredTree::new(
            2,
            vec![
                NodeSpec::new("uu", Some("u"), rat(1, 1)),
                NodeSpec::new("r", None, rat(1, 1)),
                NodeSpec::new("u", Some("r"), rat(1, 1)),
            ],
            None,
        )
        .unwrap();
        assert_eq!(t.id(0), "r");
        assert_eq!(t.id(2), "uu");
        assert_eq!(t.depth(2), 2);
    }

    #[test]
    fn rejects_bad_probabilities_naming_the_node() {
        let err = FilteredTree::new(
            1,
            vec![
                NodeSpec::new("r", None, rat(1, 1)),
                NodeSpec::new("u", Some("r"), rat(1, 2)),
                NodeSpec::new("d", Some("r"), rat(1, 3)),
            ],
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("node r"), "{err}");
    }

    #[test]
    fn rejects_short_leaf() {
        let err = FilteredTree::new(2, vec![NodeSpec::new("r", None, rat(1, 1)), NodeSpec::new("u", Some("r"), rat(1, 1))], None)
            .unwrap_err();
        assert!(err.to_string().contains("node u"));
    }

    #[test]
    fn rejects_zero_probability_edge() {
        let err = FilteredTree::new(
            1,
            vec![
                NodeSpec::new("r", None, rat(1, 1)),
                NodeSpec::new("u", Some("r"), rat(1, 1)),
                NodeSpec::new("d", Some("r"), rat(0, 1)),
            ],
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("node d"));
    }

    #[test]
    fn cylinder_probabilities_sum_to_one() {
        let t = binary();
        let total: Rational = t.at_depth(1).map(|n| t.path_prob(n).clone()).sum();
        assert!(total.is_one());
    }

    #[test]
    fn degenerate_horizon_zero() {
        let t = FilteredTree::chain(0);
        assert_eq!(t.len(), 1);
        assert!(t.is_leaf(0));
    }

    #[test]
    fn ancestry() {
        let t = FilteredTree::chain(3);
        assert_eq!(t.ancestor_at(3, 1), 1);
        assert!(t.is_ancestor_or_self(1, 3));
        assert!(!t.is_ancestor_or_self(3, 1));
        assert_eq!(t.path_to(2), vec![0, 1, 2]);
    }
}
