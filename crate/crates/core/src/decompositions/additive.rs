use num_traits::Zero;

use crate::error::Result;
use crate::lattice::{child_mean, require_supermartingale, AdaptedProcess, FilteredTree, PredictableProcess};
use crate::rational::Rational;

/// Z = M + D with M a martingale and D predictable, nonincreasing, D_0 = 0.
#[derive(Clone, Debug)]
pub struct AdditiveDecomposition {
    pub m: AdaptedProcess,
    pub d: PredictableProcess,
}

pub fn doob_meyer(tree: &FilteredTree, z: &AdaptedProcess) -> Result<AdditiveDecomposition> {
    require_supermartingale(tree, z)?;
    Ok(doob_meyer_unchecked(tree, z))
}

pub(crate) fn doob_meyer_unchecked(tree: &FilteredTree, z: &AdaptedProcess) -> AdditiveDecomposition {
    let mut at = vec![Rational::zero(); tree.len()];
    let mut next = vec![None; tree.len()];
    for n in 0..tree.len() {
        if let Some(p) = tree.parent(n) {
            at[n] = next[p].clone().expect("parent precedes child");
        }
        if !tree.is_leaf(n) {
            next[n] = Some(&at[n] + child_mean(tree, z, n) - &z[n]);
        }
    }
    let d = PredictableProcess { initial: Rational::zero(), next };
    let m = AdaptedProcess::from_fn(tree, |n| &z[n] - &at[n]);
    AdditiveDecomposition { m, d }
}
