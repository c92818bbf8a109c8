use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{rat, serde_rational_vec, Rational};

pub type AtomSet = BTreeSet<usize>;

/// Atoms `0..n_atoms`, a partition of them into blocks generating the
/// algebra, and a probability on the blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    pub n_atoms: usize,
    pub blocks: Vec<Vec<usize>>,
    #[serde(with = "serde_rational_vec")]
    pub mu: Vec<Rational>,
}

impl FiniteSpace {
    pub fn new(n_atoms: usize, blocks: Vec<Vec<usize>>, mu: Vec<Rational>) -> Result<Self> {
        if blocks.len() != mu.len() {
            return Err(Error::InvalidSpace(format!("{} blocks but {} masses", blocks.len(), mu.len())));
        }
        let mut seen = vec![false; n_atoms];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidSpace("empty block".into()));
            }
            for &a in b {
                if a >= n_atoms || std::mem::replace(&mut seen[a], true) {
                    return Err(Error::InvalidSpace(format!("atom {a} is out of range or in two blocks")));
                }
            }
        }
        if let Some(a) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidSpace(format!("atom {a} is in no block")));
        }
        if mu.iter().any(|m| m.is_negative()) || !mu.iter().cloned().sum::<Rational>().is_one() {
            return Err(Error::InvalidSpace("block masses must be nonnegative and sum to 1".into()));
        }
        Ok(FiniteSpace { n_atoms, blocks, mu })
    }

    pub fn check_subset(&self, a: &AtomSet) -> Result<()> {
        match a.iter().find(|&&x| x >= self.n_atoms) {
            Some(x) => Err(Error::InvalidSpace(format!("atom {x} is not in the space"))),
            None => Ok(()),
        }
    }

    pub fn block_meets(&self, b: usize, a: &AtomSet) -> bool {
        self.blocks[b].iter().any(|x| a.contains(x))
    }

    pub fn block_inside(&self, b: usize, a: &AtomSet) -> bool {
        self.blocks[b].iter().all(|x| a.contains(x))
    }

    /// μ* [A]: mass of the smallest block union covering A.
    pub fn outer_content(&self, a: &AtomSet) -> Rational {
        (0..self.blocks.len()).filter(|&b| self.block_meets(b, a)).map(|b| self.mu[b].clone()).sum()
    }

    /// μ_* [A]: mass of the largest block union inside A.
    pub fn inner_content(&self, a: &AtomSet) -> Rational {
        (0..self.blocks.len()).filter(|&b| self.block_inside(b, a)).map(|b| self.mu[b].clone()).sum()
    }

    /// Up to `max_atoms` atoms in random blocks with random masses (some
    /// of them zero).
    pub fn random<R: Rng>(rng: &mut R, max_atoms: usize) -> Self {
        let n = rng.random_range(1..=max_atoms.max(1));
        let k = rng.random_range(1..=n);
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); k];
        for a in 0..n {
            let b = if a < k { a } else { rng.random_range(0..k) };
            blocks[b].push(a);
        }
        let w: Vec<i64> = (0..k).map(|_| rng.random_range(0..=5)).collect();
        let total: i64 = w.iter().sum();
        let mu = if total == 0 {
            (0..k).map(|b| if b == 0 { Rational::one() } else { Rational::zero() }).collect()
        } else {
            w.iter().map(|&x| rat(x, total)).collect()
        };
        FiniteSpace::new(n, blocks, mu).expect("valid")
    }
}
