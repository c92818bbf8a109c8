//! Finite filtered probability spaces with exact rational arithmetic.

pub mod io;
pub mod process;
pub mod random;
pub mod stopping;
pub mod tree;

pub use process::{
    child_mean, conditional_expectation, is_supermartingale, require_supermartingale, terminal_mean, AdaptedProcess,
    PredictableProcess, SupermartingaleReport,
};
pub use stopping::{
    count_stopping_times, enumerate_stopping_times, stop_value, StopValue, StoppingTime, DEFAULT_ENUMERATION_CAP,
};
pub use tree::{FilteredTree, Node, NodeId, NodeSpec};
