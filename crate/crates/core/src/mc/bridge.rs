use rand::Rng;
use rand_distr::StandardNormal;

use super::bm::{check_paths, par_paths, PathBatch};
use super::grid::{Grid, Window};
use super::rng::{bridge_channel, stream};
use crate::error::{Error, Result};

/// Walks the exponential bridge through the grid points of `w`, calling
/// `f(index, value)` for each. On the clock σ = log(length / (anchor − t))
/// the bridge is exp(B_σ − σ/2) for a Brownian motion B; past `sigma_max`
/// it is 0.
pub fn walk_window(grid: &Grid, w: &Window, rng: &mut impl Rng, mut f: impl FnMut(usize, f64)) {
    let mut b = 0.0;
    let mut prev = 0.0;
    let mut dead = false;
    for k in grid.window_range(w) {
        if dead {
            f(k, 0.0);
            continue;
        }
        let sigma = (w.length / (w.anchor - grid.times[k])).ln().max(0.0);
        if sigma > grid.sigma_max {
            dead = true;
            f(k, 0.0);
            continue;
        }
        let z: f64 = rng.sample(StandardNormal);
        b += (sigma - prev).sqrt() * z;
        prev = sigma;
        f(k, (b - 0.5 * sigma).exp());
    }
}

/// Full bridge path: 1 before the window, 0 from the anchor on.
pub fn bridge_path(grid: &Grid, w: &Window, seed: u64, channel: u64, path: u64) -> Vec<f64> {
    let range = grid.window_range(w);
    let mut out: Vec<f64> = (0..grid.len()).map(|k| if k < range.start { 1.0 } else { 0.0 }).collect();
    let mut rng = stream(seed, channel, path);
    walk_window(grid, w, &mut rng, |k, e| out[k] = e);
    out
}

pub fn dyadic_window(m: u32, anchor: f64) -> Window {
    Window { anchor, length: (-(m as f64)).exp2() }
}

pub fn bridge_exponential(m: u32, anchor: f64, seed: u64, grid: &Grid, n_paths: usize) -> Result<PathBatch> {
    check_paths(n_paths)?;
    let w = dyadic_window(m, anchor);
    grid.check_window(&w)?;
    let paths = par_paths(n_paths, |i| bridge_path(grid, &w, seed, bridge_channel(0), i));
    Ok(PathBatch::from_paths(grid.times.clone(), paths))
}

/// a + (1 − a)·E: exactly 1 before the window and exactly a after it.
pub fn single_jump_path(grid: &Grid, a: f64, w: &Window, seed: u64, path: u64) -> Vec<f64> {
    let range = grid.window_range(w);
    let mut out: Vec<f64> = (0..grid.len()).map(|k| if k < range.start { 1.0 } else { a }).collect();
    let mut rng = stream(seed, bridge_channel(0), path);
    walk_window(grid, w, &mut rng, |k, e| out[k] = a + (1.0 - a) * e);
    out
}

pub fn single_jump_approx(a: f64, m: u32, anchor: f64, seed: u64, grid: &Grid, n_paths: usize) -> Result<PathBatch> {
    check_paths(n_paths)?;
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("jump target a = {a} must lie in [0, 1]")));
    }
    let w = dyadic_window(m, anchor);
    grid.check_window(&w)?;
    let paths = par_paths(n_paths, |i| single_jump_path(grid, a, &w, seed, i));
    Ok(PathBatch::from_paths(grid.times.clone(), paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::grid::GridSpec;
    use crate::mc::stats::estimate;

    fn grid_for(m: u32, anchor: f64, mid: f64) -> Grid {
        GridSpec::new(2.0, 0.125).build(&[dyadic_window(m, anchor)], &[mid]).unwrap()
    }

    #[test]
    fn bridge_is_one_then_zero() {
        let grid = grid_for(4, 1.0, 1.0 - 1.0 / 32.0);
        let p = bridge_path(&grid, &dyadic_window(4, 1.0), 3, bridge_channel(0), 0);
        let start = grid.index_of(1.0 - 1.0 / 16.0).unwrap();
        assert!(p[..=start].iter().all(|&e| e == 1.0));
        assert!(p[grid.index_of(1.0).unwrap()..].iter().all(|&e| e == 0.0));
        assert!(p.iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn mid_window_mean_and_second_moment() {
        // Mid-window σ = log 2, so E[E] = 1 and E[E²] = e^σ = 2.
        let mid = 1.0 - 1.0 / 32.0;
        let grid = grid_for(4, 1.0, mid);
        let batch = bridge_exponential(4, 1.0, 9, &grid, 40_000).unwrap();
        let col = batch.column(grid.index_of(mid).unwrap());
        assert!(estimate(&col).within(1.0, 4.0));
        let sq: Vec<f64> = col.iter().map(|x| x * x).collect();
        assert!(estimate(&sq).within(2.0, 4.0));
    }

    #[test]
    fn time_change_agrees_with_euler_scheme() {
        // Independent oracle: log-Euler on a fine uniform grid of
        // dE = E dW / sqrt(anchor − t) from the window start to the midpoint.
        let (anchor, len) = (1.0, 1.0 / 16.0);
        let mid = anchor - len / 2.0;
        let n = 20_000u64;
        let steps = 400;
        let h = (mid - (anchor - len)) / steps as f64;
        let euler: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = stream(77, 0, i);
                let mut x = 0.0;
                for s in 0..steps {
                    let t = anchor - len + (s as f64 + 0.5) * h;
                    let vol = 1.0 / (anchor - t).sqrt();
                    let z: f64 = rng.sample(StandardNormal);
                    x += vol * h.sqrt() * z - 0.5 * vol * vol * h;
                }
                x
            })
            .collect();
        let grid = grid_for(4, anchor, mid);
        let k = grid.index_of(mid).unwrap();
        let tc: Vec<f64> = bridge_exponential(4, anchor, 78, &grid, n as usize).unwrap().column(k).iter().map(|e| e.ln()).collect();
        let (a, b) = (estimate(&euler), estimate(&tc));
        let se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() < 4.0 * se, "{a:?} {b:?}");
        assert!(b.within(-0.5 * 2f64.ln(), 4.0));
    }

    #[test]
    fn single_jump_levels_are_exact() {
        let grid = grid_for(6, 1.0, 1.0 - 1.0 / 128.0);
        let batch = single_jump_approx(0.5, 6, 1.0, 1, &grid, 50).unwrap();
        let before = grid.index_of(0.5).unwrap();
        let after = grid.index_of(2.0).unwrap();
        for i in 0..50 {
            assert_eq!(batch.path(i)[before], 1.0);
            assert_eq!(batch.path(i)[after], 0.5);
            assert!(batch.path(i).iter().all(|&x| x >= 0.5));
        }
    }

    #[test]
    fn refusals() {
        let coarse = GridSpec::new(2.0, 0.25).build(&[], &[]).unwrap();
        assert!(matches!(bridge_exponential(6, 1.1, 0, &coarse, 1), Err(Error::WindowUnresolved { .. })));
        assert!(single_jump_approx(1.5, 1, 1.0, 0, &coarse, 1).is_err());
    }
}
