use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::grid::Grid;
use super::rng::{stream, CH_BM};
use crate::error::{Error, Result};

/// `n_paths` sampled paths on a shared grid, stored path-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBatch {
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub values: Vec<f64>,
}

impl PathBatch {
    pub fn from_paths(times: Vec<f64>, paths: Vec<Vec<f64>>) -> Self {
        let n_paths = paths.len();
        PathBatch { times, n_paths, values: paths.into_iter().flatten().collect() }
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.times.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Values of every path at grid index k.
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.path(i)[k]).collect()
    }
}

pub(crate) fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
    }
    Ok(())
}

/// Maps `f` over path indices in parallel; the output order is the index
/// order whatever the thread count.
pub fn par_paths<T: Send>(n_paths: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n_paths as u64).into_par_iter().map(f).collect()
}

/// Brownian motion on the grid from exact Gaussian increments.
pub fn bm_path(grid: &Grid, seed: u64, channel: u64, path: u64) -> Vec<f64> {
    let mut rng = stream(seed, channel, path);
    let mut out = Vec::with_capacity(grid.len());
    let mut w = 0.0;
    out.push(w);
    for pair in grid.times.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        w += (pair[1] - pair[0]).sqrt() * z;
        out.push(w);
    }
    out
}

pub fn simulate_bm(grid: &Grid, n_paths: usize, seed: u64) -> Result<PathBatch> {
    check_paths(n_paths)?;
    let paths = par_paths(n_paths, |i| bm_path(grid, seed, CH_BM, i));
    Ok(PathBatch::from_paths(grid.times.clone(), paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::grid::GridSpec;
    use crate::mc::stats::{estimate, variance_interval};

    #[test]
    fn marginals_match_brownian_motion() {
        let grid = GridSpec::new(1.0, 0.125).build(&[], &[]).unwrap();
        let batch = simulate_bm(&grid, 20_000, 11).unwrap();
        let k = grid.index_of(1.0).unwrap();
        let col = batch.column(k);
        assert!(estimate(&col).within(0.0, 4.0));
        let (_, lo, hi) = variance_interval(&col, 0.9999);
        assert!(lo <= 1.0 && 1.0 <= hi, "{lo} {hi}");
        assert!(batch.column(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn paths_do_not_depend_on_batch_size() {
        let grid = GridSpec::new(1.0, 0.25).build(&[], &[]).unwrap();
        let a = simulate_bm(&grid, 3, 5).unwrap();
        let b = simulate_bm(&grid, 10, 5).unwrap();
        assert_eq!(a.path(2), b.path(2));
        assert!(simulate_bm(&grid, 0, 5).is_err());
    }
}
