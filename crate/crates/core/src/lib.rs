//! Exact and Monte-Carlo constructions of the measures attached to
//! nonnegative supermartingales: Föllmer pairs on finite filtered trees,
//! additive and multiplicative decompositions, measure-extension primitives,
//! and simulated martingale approximation families.

pub mod decompositions;
pub mod error;
pub mod fixtures;
pub mod follmer;
pub mod lattice;
pub mod mc;
pub mod measure_ext;
pub mod rational;

pub use error::{Error, Result};
pub use lattice::{AdaptedProcess, FilteredTree, NodeId, PredictableProcess, StoppingTime};
pub use rational::Rational;
