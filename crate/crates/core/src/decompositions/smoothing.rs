//! Smoothing of large predictable jumps of the compensator: before each jump
//! of size at least 1/i, the supermartingale is replaced by the conditional
//! expectation of its value at the jump, starting from an announcing time.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::decompositions::additive::{doob_meyer_unchecked, AdditiveDecomposition};
use crate::error::{Error, Result};
use crate::lattice::{child_mean, require_supermartingale, AdaptedProcess, FilteredTree, NodeId};
use crate::rational::Rational;

#[derive(Clone, Debug)]
pub struct Smoothing {
    pub m: AdaptedProcess,
    /// Adapted and nonincreasing; it jumps at the announcing times.
    pub d: AdaptedProcess,
    pub lag: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LagRow {
    pub lag: usize,
    pub mismatches: usize,
    pub martingale: bool,
    pub nonincreasing: bool,
    pub nonnegative: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitCheck {
    pub threshold_index: u64,
    pub jumps: usize,
    pub rows: Vec<LagRow>,
    pub exact_at_lag_one: bool,
    pub ok: bool,
}

struct Jumps {
    add: AdditiveDecomposition,
    /// Per node: times s ≤ depth(node) on its root path where the
    /// compensator moves by at most −1/i.
    times: Vec<Vec<usize>>,
    /// Full jump lists at leaves, empty elsewhere.
    leaf_times: Vec<Vec<usize>>,
    big: Vec<bool>,
}

fn jumps(tree: &FilteredTree, z: &AdaptedProcess, i: u64) -> Jumps {
    let add = doob_meyer_unchecked(tree, z);
    let threshold = -Rational::new(1.into(), i.into());
    let mut big = vec![false; tree.len()];
    let mut times: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
    for n in 1..tree.len() {
        let p = tree.parent(n).unwrap();
        big[n] = add.d.at(tree, n) - add.d.at(tree, p) <= threshold;
        times[n] = times[p].clone();
        if big[n] {
            times[n].push(tree.depth(n));
        }
    }
    let leaf_times = (0..tree.len()).map(|n| if tree.is_leaf(n) { times[n].clone() } else { Vec::new() }).collect();
    Jumps { add, times, leaf_times, big }
}

pub fn left_limit_smoothing(tree: &FilteredTree, z: &AdaptedProcess, i: u64, lag: usize) -> Result<(Smoothing, LimitCheck)> {
    if i == 0 {
        return Err(Error::InvalidThreshold);
    }
    require_supermartingale(tree, z)?;
    let j = jumps(tree, z, i);
    let lag = lag.max(1);
    let s = smooth(tree, z, &j, lag);
    let check = limit_check_with(tree, z, i, &j);
    Ok((s, check))
}

fn smooth(tree: &FilteredTree, z: &AdaptedProcess, j: &Jumps, lag: usize) -> Smoothing {
    let (m, d) = (&j.add.m, &j.add.d);
    let max_jumps = j.leaf_times.iter().map(Vec::len).max().unwrap_or(0);
    let leaves_below: Vec<Vec<NodeId>> =
        (0..tree.len()).map(|n| tree.subtree(n).into_iter().filter(|&x| tree.is_leaf(x)).collect()).collect();

    let mut m_ij = m.clone();
    let mut d_ij = d.to_adapted(tree);
    for k in 1..=max_jumps {
        // Z at the k-th jump, or Z_T when there is none; the conditional
        // expectation is only read where the k-th jump is certain.
        let mut y = AdaptedProcess::from_fn(tree, |n| {
            if tree.is_leaf(n) {
                match j.leaf_times[n].get(k - 1) {
                    Some(&t) => z[tree.ancestor_at(n, t)].clone(),
                    None => z[n].clone(),
                }
            } else {
                Rational::zero()
            }
        });
        for n in (0..tree.len()).rev() {
            if !tree.is_leaf(n) {
                y.values_mut()[n] = child_mean(tree, &y, n);
            }
        }

        // Announcing time: first node at or after the previous jump below
        // which the k-th jump surely happens within `lag` steps.
        let mut announce: Vec<Option<NodeId>> = vec![None; tree.len()];
        for n in 0..tree.len() {
            announce[n] = tree.parent(n).and_then(|p| announce[p]);
            if announce[n].is_some() {
                continue;
            }
            let t = tree.depth(n);
            let prev_done = k == 1 || j.times[n].len() >= k - 1;
            let certain = leaves_below[n].iter().all(|&l| j.leaf_times[l].get(k - 1).is_some_and(|&s| s <= t + lag));
            if prev_done && certain {
                announce[n] = Some(n);
            }
        }

        for n in 0..tree.len() {
            let Some(a) = announce[n] else { continue };
            let t = tree.depth(n);
            let stop = j.times[n].get(k - 1).map_or(t, |&s| s.min(t));
            let b = tree.ancestor_at(n, stop);
            m_ij.values_mut()[n] += &y[n] - &y[a] - &m[b] + &m[a];
            d_ij.values_mut()[n] += &y[a] - &m[a] - d.at(tree, b);
        }
    }
    Smoothing { m: m_ij, d: d_ij, lag }
}

/// Left limit of an adapted process at node `n`: its value one step
/// earlier, 0 at the root.
fn left(tree: &FilteredTree, x: &AdaptedProcess, n: NodeId) -> Rational {
    tree.parent(n).map_or_else(Rational::zero, |p| x[p].clone())
}

/// Compares M_ij(ρ) + D_ij(ρ−) with M_ρ + (D_ρ on a large jump at ρ, D_{ρ−}
/// otherwise). The value at a stop node depends only on that node, so
/// checking every node covers every finite stopping time.
fn limit_check_with(tree: &FilteredTree, z: &AdaptedProcess, i: u64, j: &Jumps) -> LimitCheck {
    let (m, d) = (&j.add.m, &j.add.d);
    let d_adapted = d.to_adapted(tree);
    let target: Vec<Rational> = (0..tree.len())
        .map(|n| if j.big[n] { &m[n] + &d_adapted[n] } else { &m[n] + left(tree, &d_adapted, n) })
        .collect();
    let mut rows = Vec::new();
    for lag in (1..=tree.horizon().max(1)).rev() {
        let s = smooth(tree, z, j, lag);
        let mismatches = (0..tree.len()).filter(|&n| s.m[n].clone() + left(tree, &s.d, n) != target[n]).count();
        let martingale =
            s.m[0].is_one() && (0..tree.len()).all(|n| tree.is_leaf(n) || child_mean(tree, &s.m, n) == s.m[n]);
        let nonincreasing = !s.d[0].is_positive()
            && (1..tree.len()).all(|n| s.d[n] <= s.d[tree.parent(n).unwrap()]);
        let nonnegative = (0..tree.len()).all(|n| !(&s.m[n] + &s.d[n]).is_negative());
        rows.push(LagRow { lag, mismatches, martingale, nonincreasing, nonnegative });
    }
    let exact_at_lag_one = rows.last().is_some_and(|r| r.mismatches == 0);
    let ok = exact_at_lag_one && rows.iter().all(|r| r.martingale && r.nonincreasing && r.nonnegative);
    LimitCheck { threshold_index: i, jumps: j.leaf_times.iter().map(Vec::len).max().unwrap_or(0), rows, exact_at_lag_one, ok }
}

pub fn limit_check(tree: &FilteredTree, z: &AdaptedProcess, i: u64) -> Result<LimitCheck> {
    if i == 0 {
        return Err(Error::InvalidThreshold);
    }
    require_supermartingale(tree, z)?;
    Ok(limit_check_with(tree, z, i, &jumps(tree, z, i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lattice::random::{random_supermartingale, random_tree, TreeShape};
    use crate::rational::{int, rat};
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn no_large_jumps_leaves_decomposition_unchanged() {
        let (t, z) = fixtures::binary();
        for lag in 1..=2 {
            let (s, check) = left_limit_smoothing(&t, &z, 1, lag).unwrap();
            let add = doob_meyer_unchecked(&t, &z);
            assert_eq!(s.m, add.m);
            assert_eq!(s.d, add.d.to_adapted(&t));
            assert!(check.ok);
            assert_eq!(check.jumps, 0);
        }
    }

    #[test]
    fn chain_with_one_jump() {
        let (t, z) = fixtures::chain(&[int(1), int(1), rat(1, 2)]);
        let (s, check) = left_limit_smoothing(&t, &z, 2, 1).unwrap();
        assert_eq!(s.m.values(), [int(1), int(1), int(1)]);
        assert_eq!(s.d.values(), [int(0), rat(-1, 2), rat(-1, 2)]);
        assert_eq!(&s.m[2] + &s.d[1], rat(1, 2));
        assert_eq!(&s.m[1] + &s.d[0], int(1));
        assert!(check.ok, "{check:?}");
    }

    #[test]
    fn threshold_index_must_be_positive() {
        let (t, z) = fixtures::binary();
        assert!(matches!(left_limit_smoothing(&t, &z, 0, 1), Err(Error::InvalidThreshold)));
    }

    #[test]
    fn consecutive_jumps_reach_the_limit() {
        let (t, z) = fixtures::chain(&[int(1), rat(1, 2), rat(1, 4), rat(1, 8)]);
        let check = limit_check(&t, &z, 8).unwrap();
        assert_eq!(check.jumps, 3);
        assert!(check.ok, "{check:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn limit_reached_on_random_trees(seed in any::<u64>(), i in 1u64..6) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tree = random_tree(&mut rng, &TreeShape::default());
            let z = random_supermartingale(&mut rng, &tree);
            let check = limit_check(&tree, &z, i).unwrap();
            prop_assert!(check.ok, "{:?}", check);
        }
    }
}
