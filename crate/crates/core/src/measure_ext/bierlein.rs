use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure_ext::space::{AtomSet, FiniteSpace};
use crate::rational::Rational;

/// A cell of the algebra generated by the blocks and A: B ∩ A or B ∩ Aᶜ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub block: usize,
    pub in_a: bool,
    pub atoms: Vec<usize>,
    #[serde(serialize_with = "crate::rational::serde_rational::serialize")]
    pub mass: Rational,
}

/// ν on σ(blocks, A) with ν = μ on blocks and ν[A] = μ*[A].
#[derive(Clone, Debug)]
pub struct Extension {
    pub space: FiniteSpace,
    pub a: AtomSet,
    /// Â: the union of blocks meeting A.
    pub a_hat: AtomSet,
    pub cells: Vec<Cell>,
}

pub fn bierlein_extend(space: &FiniteSpace, a: &AtomSet) -> Result<Extension> {
    space.check_subset(a)?;
    let meets: Vec<bool> = (0..space.blocks.len()).map(|b| space.block_meets(b, a)).collect();
    let a_hat: AtomSet = (0..space.blocks.len()).filter(|&b| meets[b]).flat_map(|b| space.blocks[b].clone()).collect();
    let mut cells = Vec::new();
    for (b, atoms) in space.blocks.iter().enumerate() {
        for in_a in [true, false] {
            let part: Vec<usize> = atoms.iter().copied().filter(|x| a.contains(x) == in_a).collect();
            if part.is_empty() {
                continue;
            }
            let mass = if meets[b] == in_a { space.mu[b].clone() } else { Rational::zero() };
            cells.push(Cell { block: b, in_a, atoms: part, mass });
        }
    }
    Ok(Extension { space: space.clone(), a: a.clone(), a_hat, cells })
}

impl Extension {
    /// ν of a union of cells; sets outside the generated algebra are refused.
    pub fn measure(&self, set: &AtomSet) -> Result<Rational> {
        let mut total = Rational::zero();
        let mut covered = 0;
        for c in &self.cells {
            let inside = c.atoms.iter().filter(|x| set.contains(x)).count();
            if inside == c.atoms.len() {
                total += &c.mass;
                covered += inside;
            } else if inside != 0 {
                return Err(Error::NotInAlgebra);
            }
        }
        if covered != set.len() {
            return Err(Error::NotInAlgebra);
        }
        Ok(total)
    }

    /// Direct formula: writing S = (A ∩ B₁) ∪ (Aᶜ ∩ B₂) with block unions
    /// B₁, B₂, ν[S] = μ[Â ∩ B₁] + μ[Âᶜ ∩ B₂].
    pub fn measure_by_formula(&self, set: &AtomSet) -> Result<Rational> {
        self.measure(set)?;
        let s = &self.space;
        let mut total = Rational::zero();
        for (b, atoms) in s.blocks.iter().enumerate() {
            let a_part: Vec<&usize> = atoms.iter().filter(|x| self.a.contains(x)).collect();
            let c_part: Vec<&usize> = atoms.iter().filter(|x| !self.a.contains(x)).collect();
            let in_b1 = a_part.iter().all(|x| set.contains(x));
            let in_b2 = c_part.iter().all(|x| set.contains(x));
            let hat = atoms.iter().all(|x| self.a_hat.contains(x));
            if (in_b1 && hat) || (in_b2 && !hat) {
                total += &s.mu[b];
            }
        }
        Ok(total)
    }

    pub fn atom_masses(&self) -> Vec<Option<Rational>> {
        let mut out = vec![None; self.space.n_atoms];
        for c in &self.cells {
            if c.atoms.len() == 1 {
                out[c.atoms[0]] = Some(c.mass.clone());
            }
        }
        out
    }
}
