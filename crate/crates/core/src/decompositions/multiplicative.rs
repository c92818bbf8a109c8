use num_traits::{One, Zero};

use crate::error::Result;
use crate::lattice::{
    child_mean, require_supermartingale, AdaptedProcess, FilteredTree, NodeId, PredictableProcess, StoppingTime,
};
use crate::rational::Rational;

/// Z = M·D with D predictable, nonincreasing, D_0 = 1; M a martingale up to
/// the first zero ρ_0 of Z and both frozen afterwards. ρ_0 splits into the
/// predictable part (the zero was certain one step ahead) and the surprise
/// part.
#[derive(Clone, Debug)]
pub struct MultiplicativeDecomposition {
    pub m: AdaptedProcess,
    pub d: PredictableProcess,
    pub rho0: StoppingTime,
    pub rho0_p: StoppingTime,
    pub rho0_s: StoppingTime,
}

pub fn multiplicative(tree: &FilteredTree, z: &AdaptedProcess) -> Result<MultiplicativeDecomposition> {
    require_supermartingale(tree, z)?;
    Ok(multiplicative_unchecked(tree, z))
}

pub(crate) fn multiplicative_unchecked(tree: &FilteredTree, z: &AdaptedProcess) -> MultiplicativeDecomposition {
    let len = tree.len();
    let mut m = vec![Rational::zero(); len];
    let mut d_at = vec![Rational::zero(); len];
    let mut next: Vec<Option<Rational>> = vec![None; len];
    m[0] = z[0].clone();
    d_at[0] = Rational::one();
    for n in 0..len {
        if let Some(p) = tree.parent(n) {
            d_at[n] = next[p].clone().expect("parent precedes child");
        }
        if tree.is_leaf(n) {
            continue;
        }
        let e = child_mean(tree, z, n);
        let kids = tree.children(n);
        if z[n].is_zero() {
            next[n] = Some(d_at[n].clone());
            for &c in kids {
                m[c] = m[n].clone();
            }
        } else if e.is_zero() {
            next[n] = Some(Rational::zero());
            for &c in kids {
                m[c] = m[n].clone();
            }
        } else {
            next[n] = Some(&d_at[n] * &e / &z[n]);
            for &c in kids {
                m[c] = &m[n] * &z[c] / &e;
            }
        }
    }

    let first_zeros: Vec<NodeId> =
        (1..len).filter(|&n| z[n].is_zero() && !z[tree.parent(n).unwrap()].is_zero()).collect();
    let (pred, surprise): (Vec<NodeId>, Vec<NodeId>) =
        first_zeros.iter().partition(|&&n| child_mean(tree, z, tree.parent(n).unwrap()).is_zero());
    let st = |v: Vec<NodeId>| StoppingTime::new(tree, v).expect("first zeros form an antichain");
    MultiplicativeDecomposition {
        m: AdaptedProcess::new(tree, m).expect("shape"),
        d: PredictableProcess { initial: Rational::one(), next },
        rho0: st(first_zeros),
        rho0_p: st(pred),
        rho0_s: st(surprise),
    }
}

/// The characterizing properties of the multiplicative decomposition, each
/// checked exactly. Returns the names of the properties that fail.
pub fn check_multiplicative_properties(
    tree: &FilteredTree,
    z: &AdaptedProcess,
    m: &AdaptedProcess,
    d: &PredictableProcess,
) -> Vec<&'static str> {
    let mut failed = Vec::new();
    if (0..tree.len()).any(|n| &m[n] * d.at(tree, n) != z[n]) {
        failed.push("product");
    }
    let d_shape = d.initial.is_one()
        && d.next.iter().enumerate().all(|(n, v)| v.is_some() != tree.is_leaf(n))
        && d.is_nonincreasing(tree);
    if !d_shape {
        failed.push("predictable_nonincreasing_from_one");
    }
    let mut martingale = true;
    let mut frozen = true;
    let mut predictable_zero = true;
    for n in (0..tree.len()).filter(|&n| !tree.is_leaf(n)) {
        let kids = tree.children(n);
        let d_next = d.next[n].as_ref();
        if z[n].is_zero() {
            frozen &= d_next == Some(d.at(tree, n)) && kids.iter().all(|&c| m[c] == m[n]);
        } else if child_mean(tree, z, n).is_zero() {
            predictable_zero &= d_next.is_some_and(|v| v.is_zero()) && kids.iter().all(|&c| m[c] == m[n]);
        } else {
            martingale &= child_mean(tree, m, n) == m[n];
        }
    }
    if !martingale {
        failed.push("martingale_before_first_zero");
    }
    if !frozen {
        failed.push("frozen_after_first_zero");
    }
    if !predictable_zero {
        failed.push("continuous_at_predictable_zero");
    }
    failed
}
