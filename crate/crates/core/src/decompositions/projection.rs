use crate::lattice::{child_mean, AdaptedProcess, FilteredTree, PredictableProcess};

/// E[Z_t | F_{t−1}], with the time-0 value Z_0.
pub fn predictable_projection(tree: &FilteredTree, z: &AdaptedProcess) -> PredictableProcess {
    PredictableProcess::from_parent_fn(tree, z[0].clone(), |n| child_mean(tree, z, n))
}
