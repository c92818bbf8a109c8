use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::decompositions::multiplicative::multiplicative_unchecked;
use crate::error::{Error, Result};
use crate::lattice::{require_supermartingale, AdaptedProcess, FilteredTree, NodeId};
use crate::rational::{serde_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Cemetery,
    Freeze(String),
}

impl Target {
    pub fn parse(s: &str) -> Self {
        match s {
            "cemetery" | "delta" | "Δ" => Target::Cemetery,
            x => Target::Freeze(x.strip_prefix("freeze:").unwrap_or(x).to_string()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Target::Cemetery => "cemetery".into(),
            Target::Freeze(x) => format!("freeze:{x}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KillTime {
    At(usize),
    Never,
}

/// A path of the extended space: the original path through `base_node`,
/// either surviving to the horizon or sent to the target at `kill_time`
/// (one step after `base_node`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtendedOutcome {
    pub base_node: NodeId,
    pub kill_time: KillTime,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FollmerPair {
    pub target: Target,
    pub outcomes: Vec<(ExtendedOutcome, Rational)>,
}

impl FollmerPair {
    pub fn total_mass(&self) -> Rational {
        self.outcomes.iter().map(|(_, m)| m.clone()).sum()
    }

    pub fn killed_mass(&self) -> Rational {
        self.outcomes.iter().filter(|(o, _)| o.kill_time != KillTime::Never).map(|(_, m)| m.clone()).sum()
    }

    pub fn alive_mass(&self) -> Rational {
        self.total_mass() - self.killed_mass()
    }

    /// Q[τ = t] for t = 1..=T.
    pub fn kill_time_law(&self, horizon: usize) -> Vec<Rational> {
        let mut law = vec![Rational::zero(); horizon + 1];
        for (o, m) in &self.outcomes {
            if let KillTime::At(t) = o.kill_time {
                law[t] += m;
            }
        }
        law
    }

    /// Q-mass of outcomes with τ < ζ: frozen outcomes are killed at τ but
    /// never reach the cemetery.
    pub fn tau_before_zeta_mass(&self) -> Rational {
        match self.target {
            Target::Cemetery => Rational::zero(),
            Target::Freeze(_) => self.killed_mass(),
        }
    }

    pub fn check_outcomes(&self, tree: &FilteredTree) -> Result<()> {
        for (o, m) in &self.outcomes {
            if o.base_node >= tree.len() {
                return Err(Error::UnknownNode(o.base_node.to_string()));
            }
            if m.is_negative() {
                return Err(Error::InvalidOutcome(format!("negative mass at {}", tree.id(o.base_node))));
            }
            let ok = match o.kill_time {
                KillTime::Never => tree.is_leaf(o.base_node),
                KillTime::At(t) => t >= 1 && tree.depth(o.base_node) == t - 1 && !tree.is_leaf(o.base_node),
            };
            if !ok {
                return Err(Error::InvalidOutcome(format!("kill time inconsistent with node {}", tree.id(o.base_node))));
            }
        }
        Ok(())
    }
}

/// x* may not be held across a step by any P-charged path: frozen outcomes
/// hold x* from their kill time on, so such a path would be
/// indistinguishable from a frozen one.
pub fn check_freeze_state(tree: &FilteredTree, x: &str) -> Result<()> {
    for n in 1..tree.len() {
        let p = tree.parent(n).unwrap();
        if tree.state(n) == Some(x) && tree.state(p) == Some(x) {
            let leaf = tree.subtree(n).into_iter().find(|&l| tree.is_leaf(l)).unwrap();
            return Err(Error::FreezeStateCharged { state: x.into(), path_leaf: tree.id(leaf).into() });
        }
    }
    Ok(())
}

/// Quantile killing: with Z = M·D, a path is killed at the first time D
/// falls below 1 − u for an independent uniform u. The uniform is
/// integrated out: the kill at time t after node n has mass
/// P[n]·M(n)·(D(n) − D_next(n)); surviving leaves carry P·Z_T.
pub fn construct_follmer(tree: &FilteredTree, z: &AdaptedProcess, target: Target) -> Result<FollmerPair> {
    require_supermartingale(tree, z)?;
    if let Target::Freeze(x) = &target {
        check_freeze_state(tree, x)?;
    }
    let md = multiplicative_unchecked(tree, z);
    let mut outcomes = Vec::new();
    for n in 0..tree.len() {
        if tree.is_leaf(n) {
            let mass = tree.path_prob(n) * &z[n];
            if !mass.is_zero() {
                outcomes.push((ExtendedOutcome { base_node: n, kill_time: KillTime::Never }, mass));
            }
        } else {
            let d_now = md.d.at(tree, n);
            let d_next = md.d.next[n].as_ref().unwrap();
            let mass = tree.path_prob(n) * &md.m[n] * (d_now - d_next);
            if !mass.is_zero() {
                let o = ExtendedOutcome { base_node: n, kill_time: KillTime::At(tree.depth(n) + 1) };
                outcomes.push((o, mass));
            }
        }
    }
    let pair = FollmerPair { target, outcomes };
    debug_assert!(pair.total_mass().is_one());
    Ok(pair)
}

#[derive(Serialize, Deserialize)]
struct OutcomeJson {
    history_node: String,
    kill_time: serde_json::Value,
    target: Option<String>,
    #[serde(with = "serde_rational")]
    mass: Rational,
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    target: String,
    outcomes: Vec<OutcomeJson>,
}

pub fn pair_to_json(tree: &FilteredTree, pair: &FollmerPair) -> String {
    let raw = PairJson {
        target: pair.target.label(),
        outcomes: pair
            .outcomes
            .iter()
            .map(|(o, m)| OutcomeJson {
                history_node: tree.id(o.base_node).into(),
                kill_time: match o.kill_time {
                    KillTime::At(t) => t.into(),
                    KillTime::Never => "never".into(),
                },
                target: match o.kill_time {
                    KillTime::At(_) => Some(pair.target.label()),
                    KillTime::Never => None,
                },
                mass: m.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("pair serializes")
}

pub fn pair_from_json(tree: &FilteredTree, text: &str) -> Result<FollmerPair> {
    let raw: PairJson = serde_json::from_str(text)?;
    let target = Target::parse(&raw.target);
    let mut outcomes = Vec::new();
    for o in raw.outcomes {
        let base_node = tree.lookup(&o.history_node).ok_or_else(|| Error::UnknownNode(o.history_node.clone()))?;
        let kill_time = match &o.kill_time {
            serde_json::Value::String(s) if s == "never" => KillTime::Never,
            serde_json::Value::Number(n) => KillTime::At(
                n.as_u64().ok_or_else(|| Error::InvalidOutcome(format!("kill_time {n}")))? as usize,
            ),
            v => return Err(Error::InvalidOutcome(format!("kill_time {v}"))),
        };
        outcomes.push((ExtendedOutcome { base_node, kill_time }, o.mass));
    }
    let pair = FollmerPair { target, outcomes };
    pair.check_outcomes(tree)?;
    Ok(pair)
}
