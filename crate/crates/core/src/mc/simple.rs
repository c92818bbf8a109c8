use serde::Serialize;

use super::bm::{check_paths, par_paths, PathBatch};
use super::bridge::walk_window;
use super::grid::{Grid, Window};
use super::rng::{bridge_channel, stream};
use crate::error::{Error, Result};

/// Left-continuous nonincreasing step process: `levels[0]` on [0, ρ_1],
/// `levels[n]` on (ρ_n, ρ_{n+1}].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimpleProcess {
    pub jump_times: Vec<f64>,
    pub levels: Vec<f64>,
}

impl SimpleProcess {
    pub fn new(jump_times: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != jump_times.len() + 1 {
            return Err(Error::InvalidParameter("need one more level than jump times".into()));
        }
        if jump_times.iter().any(|t| !(*t >= 0.0)) || jump_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("jump times must be increasing and nonnegative".into()));
        }
        if let Some(i) = levels.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::IncreasingPath(i + 1));
        }
        Ok(SimpleProcess { jump_times, levels })
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.levels[self.jump_times.partition_point(|&r| r < t)]
    }

    /// Number of jumps at or before t.
    fn started(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&r| r <= t)
    }

    pub fn burn_windows(&self, m: u32) -> Vec<Window> {
        let len = (-(m as f64)).exp2();
        self.jump_times.iter().map(|&r| Window { anchor: r + len, length: len }).collect()
    }
}

/// Samples D at the dyadic times n·2^-k up to max(k, t_max) and holds each
/// value on the following dyadic interval, which gives a simple process
/// lying above D.
pub fn simple_approx(times: &[f64], d: &[f64], k: u32) -> Result<SimpleProcess> {
    if times.is_empty() || times.len() != d.len() {
        return Err(Error::InvalidParameter("path and grid lengths differ".into()));
    }
    if let Some(i) = d.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::IncreasingPath(i + 1));
    }
    let scale = (k as f64).exp2();
    let cutoff = (k as f64).max(*times.last().unwrap());
    let last = (cutoff * scale).ceil() as u64;
    let sample = |s: f64| d[times.partition_point(|&x| x <= s).saturating_sub(1)];
    let mut jump_times = Vec::new();
    let mut levels = vec![sample(0.0)];
    for n in 1..=last {
        let s = n as f64 / scale;
        let v = sample(s);
        if v < *levels.last().unwrap() {
            jump_times.push(s);
            levels.push(v);
        }
    }
    Ok(SimpleProcess { jump_times, levels })
}

/// Local martingale that leaves H_{n−1} towards H_n along an exponential
/// bridge on [ρ_n, ρ_n + 2^-m), one independent driver per jump. Once a
/// window has closed it equals G exactly.
pub fn suicide_path(grid: &Grid, g: &SimpleProcess, m: u32, seed: u64, path: u64) -> Vec<f64> {
    let mut out: Vec<f64> = grid.times.iter().map(|&t| g.levels[g.started(t)]).collect();
    for (n, w) in g.burn_windows(m).iter().enumerate() {
        let (hi, lo) = (g.levels[n], g.levels[n + 1]);
        let mut rng = stream(seed, bridge_channel(n as u64), path);
        walk_window(grid, w, &mut rng, |k, e| out[k] = out[k] + (hi - lo) * e);
    }
    out
}

pub fn check_burn_windows(grid: &Grid, g: &SimpleProcess, m: u32) -> Result<()> {
    g.burn_windows(m).iter().try_for_each(|w| grid.check_window(w))
}

pub fn suicide_martingale(g: &SimpleProcess, m: u32, grid: &Grid, n_paths: usize, seed: u64) -> Result<PathBatch> {
    check_paths(n_paths)?;
    check_burn_windows(grid, g, m)?;
    let paths = par_paths(n_paths, |i| suicide_path(grid, g, m, seed, i));
    Ok(PathBatch::from_paths(grid.times.clone(), paths))
}
