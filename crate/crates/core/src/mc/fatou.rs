//! Fatou approximation of a supermartingale Z = M + D by local
//! martingales: N^(m) holds D at the dyadic times k·2^-m and moves from one
//! held value to the next along a bridge during the short phase
//! (k·2^-m, k·2^-m + 2^-3m).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::bm::{check_paths, par_paths, PathBatch};
use super::bridge::walk_window;
use super::grid::{Grid, GridSpec, Window};
use super::rng::{bridge_channel, stream};
use crate::error::{Error, Result};

fn pow2(e: i32) -> f64 {
    (e as f64).exp2()
}

/// Phase windows of level m that end by `t_max`, with their index k.
pub fn phase_windows(m: u32, t_max: f64) -> Vec<(u64, Window)> {
    let (step, len) = (pow2(-(m as i32)), pow2(-3 * m as i32));
    let last = (m as u64) << m;
    (1..=last)
        .map(|k| (k, Window { anchor: k as f64 * step + len, length: len }))
        .take_while(|(_, w)| w.anchor <= t_max)
        .collect()
}

/// One grid that resolves every phase of levels 1..=m_max.
pub fn fatou_grid(spec: &GridSpec, m_max: u32, extra: &[f64]) -> Result<Grid> {
    let windows: Vec<Window> = (1..=m_max).flat_map(|m| phase_windows(m, spec.t_max)).map(|(_, w)| w).collect();
    spec.build(&windows, extra)
}

/// Whether t lies in some phase interval of a level m ≤ n_max, decided in
/// exact arithmetic.
pub fn in_s(t: f64, n_max: u32) -> bool {
    let Some(tr) = BigRational::from_float(t) else { return false };
    if tr <= BigRational::zero() {
        return false;
    }
    (1..=n_max).any(|m| {
        let scale = BigRational::from_integer(BigInt::one() << m);
        let k = (&tr * &scale).ceil() - BigRational::one();
        if k > BigRational::from_integer(BigInt::from(m) << m) {
            return false;
        }
        let left = &k / &scale;
        let len = BigRational::new(BigInt::one(), BigInt::one() << (3 * m));
        tr < left + len
    })
}

fn held(grid: &Grid, d: &[f64], s: f64) -> f64 {
    d[grid.last_at_or_before(s)]
}

pub fn fatou_n_path(grid: &Grid, d: &[f64], m: u32, seed: u64, path: u64) -> Vec<f64> {
    let scale = pow2(m as i32);
    let last = ((m as u64) << m) as f64;
    let mut out: Vec<f64> = grid
        .times
        .iter()
        .map(|&t| {
            let k = ((t * scale).ceil() - 1.0).clamp(0.0, last);
            held(grid, d, k / scale)
        })
        .collect();
    for (k, w) in phase_windows(m, grid.t_max()) {
        let (from, to) = (held(grid, d, (k - 1) as f64 / scale), held(grid, d, k as f64 / scale));
        if from == to {
            continue;
        }
        let mut rng = stream(seed, bridge_channel(k), path);
        walk_window(grid, &w, &mut rng, |i, e| {
            if e != 1.0 {
                out[i] = to + (from - to) * e;
            }
        });
    }
    out
}

pub fn check_phases(grid: &Grid, m: u32) -> Result<()> {
    phase_windows(m, grid.t_max()).iter().try_for_each(|(_, w)| grid.check_window(w))
}

/// Z^(m) = M + N^(m) for one path.
pub fn fatou_path(grid: &Grid, m_path: &[f64], d_path: &[f64], m: u32, seed: u64, path: u64) -> Vec<f64> {
    let n = fatou_n_path(grid, d_path, m, seed, path);
    m_path.iter().zip(n).map(|(a, b)| a + b).collect()
}

pub fn fatou_approx(
    m_paths: &PathBatch,
    d_paths: &PathBatch,
    m: u32,
    grid: &Grid,
    seed: u64,
) -> Result<PathBatch> {
    check_paths(m_paths.n_paths)?;
    if m_paths.n_paths != d_paths.n_paths || m_paths.times != grid.times || d_paths.times != grid.times {
        return Err(Error::InvalidParameter("martingale and drift batches must share the grid".into()));
    }
    if let Some(i) = (0..d_paths.n_paths).find(|&i| d_paths.path(i).windows(2).any(|w| w[1] > w[0])) {
        return Err(Error::IncreasingPath(i));
    }
    check_phases(grid, m)?;
    let paths = par_paths(m_paths.n_paths, |i| fatou_path(grid, m_paths.path(i as usize), d_paths.path(i as usize), m, seed, i));
    Ok(PathBatch::from_paths(grid.times.clone(), paths))
}

/// |Z^(m)_t − (M_t + D_{t−})| at grid index k, with D's jumps on the grid.
pub fn fatou_error(z_m: &[f64], m_path: &[f64], d_path: &[f64], k: usize) -> f64 {
    let d_left = d_path[k.saturating_sub(1)];
    (z_m[k] - (m_path[k] + d_left)).abs()
}
