//! Measure-extension primitives on finite spaces and the dyadic
//! finitely additive family.

pub mod bierlein;
pub mod dyadic;
pub mod space;

pub use bierlein::{bierlein_extend, Cell, Extension};
pub use dyadic::{canonical_rationals, dyadic_demo, uniform_weights, AtomicMeasure, DyadicDemo, DyadicReport, Picks};
pub use space::{AtomSet, FiniteSpace};
