//! Approximation of an extended-valued supermartingale by uniformly
//! integrable martingales. The pipeline cuts Z at time h, normalizes it by
//! c = E[Z_0 − Z̄_∞], replaces its drift by a dyadic simple process (level
//! k), burns each step in along a bridge (level m) and localizes at level n.

use serde::Serialize;

use super::bm::{bm_path, check_paths, par_paths};
use super::grid::{Grid, GridSpec};
use super::rng::CH_BM;
use super::simple::{simple_approx, suicide_path};
use super::stats::{estimate, Estimate};
use crate::error::{Error, Result};

/// A function of (t, W_t).
pub type PathFn = fn(f64, f64) -> f64;

/// Z = M + D given through the current Brownian value, with an optional
/// oracle for the martingale E[Z̄_∞ | F_t] and the mean E[Z̄_∞].
#[derive(Clone, Copy, Debug)]
pub struct MarkovSupermartingale {
    pub name: &'static str,
    pub m: PathFn,
    pub d: PathFn,
    pub terminal_oracle: Option<PathFn>,
    pub terminal_mean: f64,
}

fn one(_: f64, _: f64) -> f64 {
    1.0
}

fn zero(_: f64, _: f64) -> f64 {
    0.0
}

fn exp_decay_drift(t: f64, _: f64) -> f64 {
    (-t).exp() - 1.0
}

fn exp_martingale(t: f64, w: f64) -> f64 {
    (w - 0.5 * t).exp()
}

impl MarkovSupermartingale {
    /// Z_t = e^-t, so Z̄_∞ = 0.
    pub fn exp_decay() -> Self {
        MarkovSupermartingale { name: "exp_decay", m: one, d: exp_decay_drift, terminal_oracle: Some(zero), terminal_mean: 0.0 }
    }

    /// Z = exp(W_t − t/2), uniformly integrable on the simulated horizon,
    /// so E[Z̄_∞ | F_t] = Z_t: the normalizer vanishes and the family is the
    /// oracle itself.
    pub fn exponential_martingale() -> Self {
        MarkovSupermartingale {
            name: "exponential_martingale",
            m: exp_martingale,
            d: zero,
            terminal_oracle: Some(exp_martingale),
            terminal_mean: 1.0,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "exp_decay" => Ok(Self::exp_decay()),
            "exponential_martingale" => Ok(Self::exponential_martingale()),
            _ => Err(Error::InvalidParameter(format!("unknown supermartingale {name:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtendedParams {
    pub h: f64,
    pub k: u32,
    pub m: u32,
    pub n_loc: f64,
}

pub struct ExtendedContext {
    pub grid: Grid,
    pub z: MarkovSupermartingale,
    pub params: ExtendedParams,
    pub c: f64,
    oracle: PathFn,
    h_index: usize,
}

/// Last dyadic time of level k at which the cut drift can still drop.
fn last_jump(params: &ExtendedParams) -> f64 {
    let scale = (params.k as f64).exp2();
    (params.h * scale).ceil() / scale
}

pub fn extended_context(z: MarkovSupermartingale, params: ExtendedParams, spec: &GridSpec, extra: &[f64]) -> Result<ExtendedContext> {
    let oracle = z.terminal_oracle.ok_or(Error::OracleMissing)?;
    if !(params.h > 0.0) || !(params.n_loc > 1.0) {
        return Err(Error::InvalidParameter("need h > 0 and a localization level above 1".into()));
    }
    let len = (-(params.m as f64)).exp2();
    if spec.t_max < last_jump(&params) + len {
        return Err(Error::InvalidParameter(format!(
            "t_max = {} ends before the last burn-in window closes at {}",
            spec.t_max,
            last_jump(&params) + len
        )));
    }
    let scale = (params.k as f64).exp2();
    let n_dyadic = (last_jump(&params) * scale) as u64;
    let windows: Vec<_> = (1..=n_dyadic).map(|n| super::grid::Window { anchor: n as f64 / scale + len, length: len }).collect();
    let mut points: Vec<f64> = (0..=n_dyadic).map(|n| n as f64 / scale).collect();
    points.push(params.h);
    points.extend_from_slice(extra);
    let grid = spec.build(&windows, &points)?;
    let z0 = (z.m)(0.0, 0.0) + (z.d)(0.0, 0.0);
    let c = z0 - z.terminal_mean;
    let h_index = grid.index_of(params.h).expect("h is a grid point");
    Ok(ExtendedContext { grid, z, params, c, oracle, h_index })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedPath {
    pub w: Vec<f64>,
    /// E[Z̄_∞ | F_t] + c·L̃_t.
    pub l_bar: Vec<f64>,
    pub localized_at: Option<usize>,
}

impl ExtendedContext {
    /// The cut and normalized drift D̃ on the grid.
    fn cut_drift(&self, w: &[f64]) -> Result<Vec<f64>> {
        let (m, d, o, c) = (self.z.m, self.z.d, self.oracle, self.c);
        let (th, wh) = (self.grid.times[self.h_index], w[self.h_index]);
        let after = (o(th, wh) - m(th, wh)) / c;
        let mut dt: Vec<f64> = self.grid.times.iter().zip(w).map(|(&t, &x)| if t < self.params.h { d(t, x) / c } else { after }).collect();
        for i in 1..dt.len() {
            if dt[i] > dt[i - 1] {
                if dt[i] - dt[i - 1] > 1e-12 * dt[i - 1].abs().max(1.0) {
                    return Err(Error::IncreasingPath(i));
                }
                dt[i] = dt[i - 1];
            }
        }
        Ok(dt)
    }

    pub fn path(&self, seed: u64, path: u64) -> Result<ExtendedPath> {
        let grid = &self.grid;
        let w = bm_path(grid, seed, CH_BM, path);
        let o: Vec<f64> = grid.times.iter().zip(&w).map(|(&t, &x)| (self.oracle)(t, x)).collect();
        if self.c == 0.0 {
            return Ok(ExtendedPath { w, l_bar: o, localized_at: None });
        }
        let (th, wh) = (grid.times[self.h_index], w[self.h_index]);
        let m_cut = ((self.z.m)(th, wh) - o[self.h_index]) / self.c;
        let m_tilde: Vec<f64> = grid
            .times
            .iter()
            .zip(&w)
            .zip(&o)
            .map(|((&t, &x), &ot)| if t < self.params.h { ((self.z.m)(t, x) - ot) / self.c } else { m_cut })
            .collect();
        let d_tilde = self.cut_drift(&w)?;
        let g = simple_approx(&grid.times, &d_tilde, self.params.k)?;
        let n = suicide_path(grid, &g, self.params.m, seed, path);
        let mut l: Vec<f64> = m_tilde.iter().zip(&n).map(|(a, b)| a + b).collect();
        let localized_at = l.iter().position(|&x| x >= self.params.n_loc);
        if let Some(i) = localized_at {
            let v = l[i];
            l[i..].iter_mut().for_each(|x| *x = v);
        }
        let l_bar = o.iter().zip(&l).map(|(a, b)| a + self.c * b).collect();
        Ok(ExtendedPath { w, l_bar, localized_at })
    }

    /// Z_t for the uncut process.
    pub fn z_at(&self, k: usize, w: &[f64]) -> f64 {
        let t = self.grid.times[k];
        (self.z.m)(t, w[k]) + (self.z.d)(t, w[k])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtendedReport {
    pub example: String,
    pub params: ExtendedParams,
    pub c: f64,
    pub start: Estimate,
    pub end: Estimate,
    pub end_unlocalized: Estimate,
    pub localized_fraction: Estimate,
    pub terminal_mean: f64,
    pub probe: f64,
    /// Mean |L̄_probe − Z_probe| over paths not yet localized at the probe.
    pub probe_error: Estimate,
}

pub fn extended_approx(
    z: MarkovSupermartingale,
    params: ExtendedParams,
    spec: &GridSpec,
    probe: f64,
    n_paths: usize,
    seed: u64,
) -> Result<ExtendedReport> {
    check_paths(n_paths)?;
    if !(0.0..params.h).contains(&probe) {
        return Err(Error::InvalidParameter("the probe must lie before the cut h".into()));
    }
    let ctx = extended_context(z, params, spec, &[probe])?;
    let kp = ctx.grid.index_of(probe).expect("probe is a grid point");
    let last = ctx.grid.len() - 1;
    let rows = par_paths(n_paths, |i| {
        ctx.path(seed, i).map(|p| {
            let early = p.localized_at.is_some_and(|j| j <= kp);
            let err = if early { None } else { Some((p.l_bar[kp] - ctx.z_at(kp, &p.w)).abs()) };
            (p.l_bar[0], p.l_bar[last], p.localized_at.is_some(), err)
        })
    });
    let rows: Vec<_> = rows.into_iter().collect::<Result<_>>()?;
    let col = |f: &dyn Fn(&(f64, f64, bool, Option<f64>)) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(f).collect() };
    Ok(ExtendedReport {
        example: z.name.to_string(),
        params,
        c: ctx.c,
        start: estimate(&col(&|r| Some(r.0))),
        end: estimate(&col(&|r| Some(r.1))),
        end_unlocalized: estimate(&col(&|r| (!r.2).then_some(r.1))),
        localized_fraction: estimate(&col(&|r| Some(if r.2 { 1.0 } else { 0.0 }))),
        terminal_mean: z.terminal_mean,
        probe,
        probe_error: estimate(&col(&|r| r.3)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: u32, m: u32) -> ExtendedParams {
        ExtendedParams { h: 2.0, k, m, n_loc: 20.0 }
    }

    #[test]
    fn exp_decay_starts_at_one_and_ends_near_zero() {
        let spec = GridSpec::new(3.0, 1.0 / 16.0).with_points_per_window(48);
        let r = extended_approx(MarkovSupermartingale::exp_decay(), params(3, 6), &spec, 0.6, 4000, 3).unwrap();
        assert_eq!(r.c, 1.0);
        assert_eq!(r.start.mean, 1.0);
        // Unlocalized paths finish every burn-in exactly at Z̄_∞ = 0.
        assert_eq!(r.end_unlocalized.mean, 0.0);
        // Localized mass keeps the martingale mean near 1.
        assert!(r.end.within(1.0, 5.0), "{:?}", r.end);
        assert!(r.localized_fraction.mean < 0.1);
    }

    #[test]
    fn probe_error_shrinks_with_k() {
        let spec = GridSpec::new(3.0, 1.0 / 16.0).with_points_per_window(24);
        let e1 = extended_approx(MarkovSupermartingale::exp_decay(), params(1, 8), &spec, 0.6, 500, 1).unwrap();
        let e4 = extended_approx(MarkovSupermartingale::exp_decay(), params(4, 8), &spec, 0.6, 500, 1).unwrap();
        assert!(e4.probe_error.mean < e1.probe_error.mean);
    }

    #[test]
    fn vanishing_normalizer_returns_the_oracle() {
        let spec = GridSpec::new(3.0, 0.25).with_points_per_window(8);
        let ctx = extended_context(MarkovSupermartingale::exponential_martingale(), params(2, 4), &spec, &[]).unwrap();
        assert_eq!(ctx.c, 0.0);
        let p = ctx.path(5, 0).unwrap();
        let k = ctx.grid.index_of(1.0).unwrap();
        assert_eq!(p.l_bar[k], ctx.z_at(k, &p.w));
    }

    #[test]
    fn missing_oracle_is_refused() {
        let mut z = MarkovSupermartingale::exp_decay();
        z.terminal_oracle = None;
        let spec = GridSpec::new(3.0, 0.25);
        assert!(matches!(extended_context(z, params(1, 2), &spec, &[]), Err(Error::OracleMissing)));
    }
}
