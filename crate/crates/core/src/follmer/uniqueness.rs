use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::follmer::pair::{check_freeze_state, construct_follmer, ExtendedOutcome, FollmerPair, KillTime, Target};
use crate::follmer::verify::verify_ky_all;
use crate::lattice::{is_supermartingale, terminal_mean, AdaptedProcess, FilteredTree, StoppingTime};
use crate::rational::{format_rational, int, Rational};

#[derive(Clone, Debug)]
pub struct TauHat {
    /// inf{t: Z_t ≥ n} ∧ n, truncated at the horizon.
    pub truncated: StoppingTime,
    /// lim_n τ̂_n: Z is bounded on a finite tree, so this never stops.
    pub limit: StoppingTime,
}

pub fn tau_hat(tree: &FilteredTree, z: &AdaptedProcess, n: u64) -> Result<TauHat> {
    if n == 0 {
        return Err(Error::InvalidParameter("tau_hat level must be at least 1".into()));
    }
    let level = int(n as i64);
    let cap = (n as usize).min(tree.horizon());
    let mut stops = Vec::new();
    let mut frontier = vec![tree.root()];
    while let Some(x) = frontier.pop() {
        if z[x] >= level || tree.depth(x) == cap {
            stops.push(x);
        } else {
            frontier.extend_from_slice(tree.children(x));
        }
    }
    Ok(TauHat { truncated: StoppingTime::new(tree, stops)?, limit: StoppingTime::never() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PairVerdict {
    /// Martingale: no mass is lost, τ̂ never fires under Q̂.
    Unique,
    /// Single-state alphabet: kill times are forced.
    UniqueSingleState,
    /// A second pair exists by freezing at `witness_state` instead of killing.
    NonUnique { witness_state: String },
    /// No admissible freeze state in the declared alphabet.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub target: String,
    pub is_martingale: bool,
    pub mass_lost: String,
    pub killed_mass: String,
    pub tau_lt_zeta_mass: String,
    pub tau_lt_zeta_negligible: bool,
    /// Uniqueness of the measure once τ is fixed; equivalent to the
    /// negligibility of {τ < ζ}.
    pub unique_measure_for_z_tau: bool,
    /// Q̂[τ̂ = ∞]: the mass of outcomes that are never killed.
    pub q_tau_hat_infinite: String,
    pub pair: PairVerdict,
}

pub fn admissible_freeze_state(tree: &FilteredTree) -> Option<String> {
    tree.alphabet().iter().find(|x| check_freeze_state(tree, x).is_ok()).cloned()
}

pub fn uniqueness_report(tree: &FilteredTree, z: &AdaptedProcess, pair: &FollmerPair) -> Result<UniquenessReport> {
    let sm = is_supermartingale(tree, z);
    if !sm.ok {
        return Err(Error::NotSupermartingale {
            node: sm.first_violation_node.unwrap_or_default(),
            reason: sm.reason.unwrap_or_default(),
        });
    }
    let mass_lost = Rational::one() - terminal_mean(tree, z);
    let tlz = pair.tau_before_zeta_mass();
    let pair_verdict = if sm.is_martingale {
        PairVerdict::Unique
    } else if tree.alphabet().len() <= 1 {
        PairVerdict::UniqueSingleState
    } else if let Some(x) = admissible_freeze_state(tree) {
        PairVerdict::NonUnique { witness_state: x }
    } else {
        PairVerdict::Inconclusive
    };
    Ok(UniquenessReport {
        target: pair.target.label(),
        is_martingale: sm.is_martingale,
        mass_lost: format_rational(&mass_lost),
        killed_mass: format_rational(&pair.killed_mass()),
        tau_lt_zeta_mass: format_rational(&tlz),
        tau_lt_zeta_negligible: tlz.is_zero(),
        unique_measure_for_z_tau: tlz.is_zero(),
        q_tau_hat_infinite: format_rational(&pair.alive_mass()),
        pair: pair_verdict,
    })
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub cemetery: FollmerPair,
    pub frozen: FollmerPair,
    pub total_variation: Rational,
}

/// Half the L1 distance between two outcome measures on the extended
/// space, where a killed outcome is identified by its target as well.
pub fn total_variation(a: &FollmerPair, b: &FollmerPair) -> Rational {
    use std::collections::BTreeMap;
    let key = |p: &FollmerPair, o: &ExtendedOutcome| {
        let t = if o.kill_time == KillTime::Never { String::new() } else { p.target.label() };
        (o.clone(), t)
    };
    let mut diff: BTreeMap<(ExtendedOutcome, String), Rational> = BTreeMap::new();
    for (o, m) in &a.outcomes {
        *diff.entry(key(a, o)).or_insert_with(Rational::zero) += m;
    }
    for (o, m) in &b.outcomes {
        *diff.entry(key(b, o)).or_insert_with(Rational::zero) -= m;
    }
    let l1: Rational = diff.values().map(|v| if v < &Rational::zero() { -v.clone() } else { v.clone() }).sum();
    l1 / int(2)
}

pub fn nonuniqueness_witness(tree: &FilteredTree, z: &AdaptedProcess, x: &str) -> Result<Witness> {
    let cemetery = construct_follmer(tree, z, Target::Cemetery)?;
    if cemetery.killed_mass().is_zero() {
        return Err(Error::WitnessRequiresLoss);
    }
    let frozen = construct_follmer(tree, z, Target::Freeze(x.into()))?;
    let total_variation = total_variation(&cemetery, &frozen);
    Ok(Witness { cemetery, frozen, total_variation })
}

/// On a unary chain, every outcome measure supported on the surviving path
/// and its killed truncations with masses in (1/denom)ℕ that satisfies the
/// KY identity at every stopping time.
pub fn single_state_pairs(tree: &FilteredTree, z: &AdaptedProcess, denom: u32, cap: u64) -> Result<Vec<FollmerPair>> {
    if tree.len() != tree.horizon() + 1 {
        return Err(Error::InvalidParameter("exhaustive pair search needs a unary chain".into()));
    }
    let t_max = tree.horizon();
    let support: Vec<ExtendedOutcome> = (1..=t_max)
        .map(|t| ExtendedOutcome { base_node: t - 1, kill_time: KillTime::At(t) })
        .chain(std::iter::once(ExtendedOutcome { base_node: t_max, kill_time: KillTime::Never }))
        .collect();
    let mut found = Vec::new();
    let mut parts = vec![0u32; support.len()];
    compositions(denom, 0, &mut parts, &mut |parts| -> Result<()> {
        let outcomes = support
            .iter()
            .zip(parts)
            .filter(|(_, &k)| k > 0)
            .map(|(o, &k)| (o.clone(), Rational::new(k.into(), denom.into())))
            .collect();
        let pair = FollmerPair { target: Target::Cemetery, outcomes };
        if verify_ky_all(&pair, tree, z, cap)?.ok {
            found.push(pair);
        }
        Ok(())
    })?;
    Ok(found)
}

fn compositions(left: u32, i: usize, parts: &mut [u32], f: &mut impl FnMut(&[u32]) -> Result<()>) -> Result<()> {
    if i + 1 == parts.len() {
        parts[i] = left;
        return f(parts);
    }
    for k in 0..=left {
        parts[i] = k;
        compositions(left - k, i + 1, parts, f)?;
    }
    Ok(())
}
