//! Reference processes with known answers.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use libm::erf;

use super::bm::{check_paths, par_paths};
use super::bridge::walk_window;
use super::grid::{Grid, GridSpec, Window};
use super::rng::{bridge_channel, stream, CH_AUX, CH_BM3, CH_UNIFORM};
use super::stats::{estimate, Estimate};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::follmer::{construct_follmer, Target};
use crate::rational::{rat, Rational};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub estimate: Estimate,
    pub exact: f64,
}

/// Z_t = e^-t: the kill time has the quantile law τ = −log(1 − U), so
/// Q[τ > t] = e^-t.
pub fn exp_decay_tail(ts: &[f64], n_samples: usize, seed: u64) -> Result<Vec<TailRow>> {
    check_paths(n_samples)?;
    let taus = par_paths(n_samples, |i| {
        let u: f64 = stream(seed, CH_UNIFORM, i).random();
        -(-u).ln_1p()
    });
    Ok(ts
        .iter()
        .map(|&t| {
            let ind: Vec<f64> = taus.iter().map(|&tau| if tau > t { 1.0 } else { 0.0 }).collect();
            TailRow { t, estimate: estimate(&ind), exact: (-t).exp() }
        })
        .collect())
}

/// Discrete analogue on a unary chain Z_t = 2^-t: returns Q[τ > t] for
/// t = 0..=T from the exact Föllmer pair.
pub fn halving_chain_tail(horizon: usize) -> Result<Vec<Rational>> {
    let values: Vec<Rational> = (0..=horizon).map(|t| rat(1, 1 << t)).collect();
    let (tree, z) = fixtures::chain(&values);
    let pair = construct_follmer(&tree, &z, Target::Cemetery)?;
    let law = pair.kill_time_law(horizon);
    let mut tail = Vec::with_capacity(horizon + 1);
    let mut left = pair.total_mass();
    for t in 0..=horizon {
        left -= &law[t];
        tail.push(left.clone());
    }
    Ok(tail)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BesselRow {
    pub t: f64,
    /// E[1 / |B_t|] for a 3-dimensional Brownian motion from (1, 0, 0).
    pub mean: Estimate,
    /// P[a Brownian motion from 1 has not hit 0 by t] = erf(1 / sqrt(2t)).
    pub exact: f64,
    /// The same survival probability from a crossing-corrected 1-D walk.
    pub crossing: Estimate,
}

/// Reciprocal of a 3-dimensional Bessel process: a strict local martingale
/// whose mean decays like a survival probability.
pub fn reciprocal_bessel(grid: &Grid, ts: &[f64], n_paths: usize, seed: u64) -> Result<Vec<BesselRow>> {
    check_paths(n_paths)?;
    let idx: Vec<usize> = ts
        .iter()
        .map(|&t| grid.index_of(t).ok_or_else(|| Error::InvalidParameter(format!("t = {t} is not a grid point"))))
        .collect::<Result<_>>()?;
    let rows = par_paths(n_paths, |i| {
        let mut rng = stream(seed, CH_BM3, i);
        let mut x = [1.0f64, 0.0, 0.0];
        let mut z = vec![1.0];
        for w in grid.times.windows(2) {
            let s = (w[1] - w[0]).sqrt();
            for c in &mut x {
                *c += s * rng.sample::<f64, _>(StandardNormal);
            }
            z.push(1.0 / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
        }
        let mut rng = stream(seed, CH_AUX, i);
        let mut alive = vec![1.0];
        let (mut y, mut live) = (1.0f64, true);
        for w in grid.times.windows(2) {
            let dt = w[1] - w[0];
            let next = y + dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let u: f64 = rng.random();
            if live && (next <= 0.0 || u < (-2.0 * y * next / dt).exp()) {
                live = false;
            }
            y = next;
            alive.push(if live { 1.0 } else { 0.0 });
        }
        idx.iter().map(|&k| (z[k], alive[k])).collect::<Vec<_>>()
    });
    Ok(ts
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let zs: Vec<f64> = rows.iter().map(|r| r[j].0).collect();
            let live: Vec<f64> = rows.iter().map(|r| r[j].1).collect();
            BesselRow { t, mean: estimate(&zs), exact: erf(1.0 / (2.0 * t).sqrt()), crossing: estimate(&live) }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformRhoRow {
    pub m: u32,
    /// M^(m) burns in on [ρ − 1/m, ρ], N^(m) on [ρ, ρ + 1/m].
    pub m_at_rho: Estimate,
    pub n_at_rho: Estimate,
    pub probe: f64,
    /// Fraction of paths where each family differs from 1_{probe < ρ}.
    pub m_off_at_probe: Estimate,
    pub n_off_at_probe: Estimate,
}

/// Two approximations of Z = 1_{t < ρ} with ρ uniform on [1, 2]: they agree
/// in the limit at every fixed time yet differ at ρ itself.
pub fn uniform_rho(ms: &[u32], probe: f64, n_paths: usize, seed: u64, points: usize) -> Result<Vec<UniformRhoRow>> {
    check_paths(n_paths)?;
    if ms.contains(&0) {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let spec = GridSpec::new(3.0, 1.0 / 16.0).with_points_per_window(points);
    ms.iter()
        .map(|&m| {
            let len = 1.0 / m as f64;
            let rows = par_paths(n_paths, |i| -> Result<[f64; 4]> {
                let rho = 1.0 + stream(seed, CH_UNIFORM, i).random::<f64>();
                let wm = Window { anchor: rho, length: len };
                let wn = Window { anchor: rho + len, length: len };
                let grid = spec.build(&[wm, wn], &[rho, probe])?;
                let value = |w: &Window, ch: u64, k_at: usize| {
                    let range = grid.window_range(w);
                    let mut v = if k_at < range.start { 1.0 } else { 0.0 };
                    let mut rng = stream(seed, bridge_channel(ch), i);
                    walk_window(&grid, w, &mut rng, |k, e| {
                        if k == k_at {
                            v = e
                        }
                    });
                    v
                };
                let (kr, kp) = (grid.index_of(rho).unwrap(), grid.index_of(probe).unwrap());
                let z = if probe < rho { 1.0 } else { 0.0 };
                let off = |x: f64| if x != z { 1.0 } else { 0.0 };
                Ok([value(&wm, 0, kr), value(&wn, 1, kr), off(value(&wm, 0, kp)), off(value(&wn, 1, kp))])
            });
            let rows: Vec<[f64; 4]> = rows.into_iter().collect::<Result<_>>()?;
            let col = |j: usize| estimate(&rows.iter().map(|r| r[j]).collect::<Vec<_>>());
            Ok(UniformRhoRow { m, m_at_rho: col(0), n_at_rho: col(1), probe, m_off_at_probe: col(2), n_off_at_probe: col(3) })
        })
        .collect()
}
