//! Monte-Carlo engine: Brownian paths on refined grids, exponential
//! bridges, and the martingale approximation families built from them.
//! Every path draws from its own counter-based stream and aggregates are
//! summed in path order, so output does not depend on the thread count.

pub mod bm;
pub mod bridge;
pub mod experiment;
pub mod extended;
pub mod fatou;
pub mod gallery;
pub mod grid;
pub mod redirect;
pub mod rng;
pub mod simple;
pub mod split;
pub mod stats;

pub use bm::{simulate_bm, PathBatch};
pub use bridge::{bridge_exponential, single_jump_approx};
pub use experiment::{run_manifest, Manifest, RunSummary};
pub use extended::{extended_approx, ExtendedParams, MarkovSupermartingale};
pub use fatou::{fatou_approx, in_s};
pub use grid::{Grid, GridSpec, Window};
pub use redirect::{mass_redirect, RedirectInput};
pub use simple::{simple_approx, suicide_martingale, SimpleProcess};
pub use split::split_limit_demo;
pub use stats::Estimate;
