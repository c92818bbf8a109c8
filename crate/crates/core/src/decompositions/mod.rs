//! Additive and multiplicative decompositions of tree supermartingales,
//! predictable projection, and left-limit smoothing of large jumps.

pub mod additive;
pub mod multiplicative;
pub mod projection;
pub mod smoothing;

use serde::Serialize;

pub use additive::{doob_meyer, AdditiveDecomposition};
pub use multiplicative::{check_multiplicative_properties, multiplicative, MultiplicativeDecomposition};
pub use projection::predictable_projection;
pub use smoothing::{left_limit_smoothing, limit_check, LagRow, LimitCheck, Smoothing};

use crate::error::Result;
use crate::lattice::{require_supermartingale, AdaptedProcess, FilteredTree, StoppingTime};
use crate::rational::format_rational;

#[derive(Clone, Debug, Serialize)]
pub struct NodeRow {
    pub id: String,
    pub depth: usize,
    pub z: String,
    pub m_add: String,
    pub d_add: String,
    pub m_mult: String,
    pub d_mult: String,
    pub predictable_projection: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub is_martingale: bool,
    pub nodes: Vec<NodeRow>,
    pub rho0: Vec<String>,
    pub rho0_predictable: Vec<String>,
    pub rho0_surprise: Vec<String>,
}

pub fn decomposition_report(tree: &FilteredTree, z: &AdaptedProcess) -> Result<DecompositionReport> {
    let sm = require_supermartingale(tree, z)?;
    let add = additive::doob_meyer_unchecked(tree, z);
    let mult = multiplicative::multiplicative_unchecked(tree, z);
    let proj = predictable_projection(tree, z);
    let f = format_rational;
    let nodes = (0..tree.len())
        .map(|n| NodeRow {
            id: tree.id(n).into(),
            depth: tree.depth(n),
            z: f(&z[n]),
            m_add: f(&add.m[n]),
            d_add: f(add.d.at(tree, n)),
            m_mult: f(&mult.m[n]),
            d_mult: f(mult.d.at(tree, n)),
            predictable_projection: f(proj.at(tree, n)),
        })
        .collect();
    let ids = |s: &StoppingTime| s.stop_nodes.iter().map(|&n| tree.id(n).to_string()).collect();
    Ok(DecompositionReport {
        is_martingale: sm.is_martingale,
        nodes,
        rho0: ids(&mult.rho0),
        rho0_predictable: ids(&mult.rho0_p),
        rho0_surprise: ids(&mult.rho0_s),
    })
}
