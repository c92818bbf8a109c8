//! Two martingale families with the same limit process whose terminal
//! masses concentrate on the disjoint events A± = {∫_0^∞ e^-s dW_s ≷ 0}.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::bm::{check_paths, par_paths};
use super::redirect::normal_cdf;
use super::rng::{stream, CH_AUX};
use super::stats::{estimate, median_of_means, Estimate};
use crate::error::{Error, Result};

/// Per-step law of the bridge driver B and of G = ∫ e^-s dW on the bridge
/// window [n − 1, n), both driven by the same W.
struct Steps {
    dsig: f64,
    var_g: Vec<f64>,
    cov: Vec<f64>,
    tail_var_g: f64,
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

impl Steps {
    fn new(n: u32, points: usize, sigma_max: f64) -> Self {
        let nf = n as f64;
        let dsig = sigma_max / points as f64;
        // u = n − t is kept exact: the window end is at u = 0.
        let u = |j: usize| (-(j as f64) * dsig).exp();
        let scale = (-2.0 * nf).exp();
        let mut var_g = Vec::with_capacity(points);
        let mut cov = Vec::with_capacity(points);
        for j in 0..points {
            let (hi, lo) = (u(j), u(j + 1));
            var_g.push(0.5 * scale * (2.0 * lo).exp() * (2.0 * (hi - lo)).exp_m1());
            // ∫ e^-s (n − s)^-1/2 ds with v = sqrt(n − s).
            cov.push(2.0 * simpson(|v| (v * v - nf).exp(), lo.sqrt(), hi.sqrt(), 16));
        }
        let tail_var_g = 0.5 * scale * (2.0 * u(points)).exp_m1();
        Steps { dsig, var_g, cov, tail_var_g }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitPath {
    /// Bridge stopped at its first passage of 2^n (0 if it dies first).
    pub e_stop: f64,
    pub hit: bool,
    pub g_n: f64,
    pub g_inf: f64,
}

fn split_path(n: u32, steps: &Steps, seed: u64, path: u64) -> SplitPath {
    let mut rng = stream(seed, CH_AUX, path);
    let mut uniforms = stream(seed, CH_AUX + 100, path);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let level = (n as f64).exp2();
    let nf = n as f64;
    let mut g = (0.5 * (1.0 - (-2.0 * (nf - 1.0)).exp())).sqrt() * normal();
    let (mut b, mut e_stop, mut hit) = (0.0, None, false);
    for j in 0..steps.var_g.len() {
        let db = steps.dsig.sqrt() * normal();
        let beta = steps.cov[j] / steps.dsig;
        let resid = (steps.var_g[j] - beta * steps.cov[j]).max(0.0).sqrt();
        g += beta * db + resid * normal();
        if e_stop.is_none() {
            b += db;
            let e = (b - 0.5 * (j + 1) as f64 * steps.dsig).exp();
            if e >= level {
                e_stop = Some(e);
                hit = true;
            }
        }
    }
    g += steps.tail_var_g.sqrt() * normal();
    let u: f64 = uniforms.random();
    // Past the clock cap the bridge hits the level with probability e/level
    // before dying, which keeps the stopped mean exact.
    let e_stop = match e_stop {
        Some(e) => e,
        None => {
            let e = (b - 0.5 * steps.var_g.len() as f64 * steps.dsig).exp();
            if u < e / level {
                hit = true;
                level
            } else {
                0.0
            }
        }
    };
    let s_r = (0.5 * (-2.0 * nf).exp()).sqrt();
    let g_inf = g + s_r * normal();
    SplitPath { e_stop, hit, g_n: g, g_inf }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitReport {
    pub n: u32,
    pub sign: i8,
    /// E[L 1_A] for the event the family targets, averaged through
    /// E[L 1_A | F_n] = E^(n)_{ρ_n ∧ n}.
    pub same_mass: Estimate,
    /// E[L 1_A'] for the opposite event, through E[L 1_A' | F_n] = 0.
    pub cross_mass: Estimate,
    /// Plain average of L 1_A. Half of its mean sits on paths where
    /// P[A | F_n] is astronomically small, so it undershoots at any
    /// feasible sample size.
    pub same_mass_raw: Estimate,
    pub same_mass_raw_mom: Estimate,
    pub hit_frequency: Estimate,
    pub doob_bound: f64,
    pub residual_variance: f64,
}

/// L^(±,n)_∞ = E^(n)_{ρ_n ∧ n} 1_{A±} / P[A± | F_n], where E^(n) is an
/// exponential bridge on [n − 1, n) and ρ_n its first passage of 2^n.
pub fn split_limit_demo(sign: i8, n: u32, n_paths: usize, seed: u64, points: usize, sigma_max: f64) -> Result<SplitReport> {
    check_paths(n_paths)?;
    if n == 0 || !(sign == 1 || sign == -1) || points == 0 {
        return Err(Error::InvalidParameter("need n ≥ 1, sign ±1 and at least one clock step".into()));
    }
    let steps = Steps::new(n, points, sigma_max);
    let s_r = (0.5 * (-2.0 * n as f64).exp()).sqrt();
    let paths = par_paths(n_paths, |i| split_path(n, &steps, seed, i));
    let mut same = Vec::with_capacity(n_paths);
    let mut raw = Vec::with_capacity(n_paths);
    for p in &paths {
        let s = sign as f64;
        let p_a = normal_cdf(s * p.g_n / s_r);
        let in_a = s * p.g_inf > 0.0;
        // P[A | F_n] > 0 always, though it may underflow in floating point.
        same.push(p.e_stop);
        raw.push(if in_a && p_a > 0.0 { p.e_stop / p_a } else { 0.0 });
    }
    let cross = vec![0.0; n_paths];
    let hits: Vec<f64> = paths.iter().map(|p| if p.hit { 1.0 } else { 0.0 }).collect();
    Ok(SplitReport {
        n,
        sign,
        same_mass: estimate(&same),
        cross_mass: estimate(&cross),
        same_mass_raw: estimate(&raw),
        same_mass_raw_mom: median_of_means(&raw, 20),
        hit_frequency: estimate(&hits),
        doob_bound: (-(n as f64)).exp2(),
        residual_variance: s_r * s_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_variances_add_up() {
        let s = Steps::new(3, 200, 30.0);
        let total: f64 = s.var_g.iter().sum::<f64>() + s.tail_var_g;
        let exact = 0.5 * ((-4.0f64).exp() - (-6.0f64).exp());
        assert!((total - exact).abs() < 1e-15 * exact.max(1e-3));
        // Cauchy-Schwarz on every step.
        assert!(s.cov.iter().zip(&s.var_g).all(|(c, v)| c * c <= v * s.dsig * (1.0 + 1e-6)));
    }

    #[test]
    fn covariance_quadrature_matches_closed_form_sum() {
        // Over the whole window ∫_{n−1}^{n} e^-s (n − s)^-1/2 ds
        // = 2 e^-n ∫_0^1 e^{v²} dv, and 2∫_0^1 e^{v²} dv = 2.925303491814363...
        let s = Steps::new(2, 400, 40.0);
        let sum: f64 = s.cov.iter().sum();
        let exact = (-2.0f64).exp() * 2.925_303_491_814_362;
        assert!((sum - exact).abs() < 1e-6, "{sum} {exact}");
    }

    #[test]
    fn masses_concentrate_on_the_target_event() {
        let r = split_limit_demo(1, 3, 40_000, 5, 200, 30.0).unwrap();
        assert!(r.same_mass.within(1.0, 4.0), "{:?}", r.same_mass);
        assert_eq!(r.cross_mass.mean, 0.0);
        assert!(r.hit_frequency.mean <= r.doob_bound + 4.0 * r.hit_frequency.std_err);
    }

    #[test]
    fn refusals() {
        assert!(split_limit_demo(0, 3, 10, 0, 10, 30.0).is_err());
        assert!(split_limit_demo(1, 0, 10, 0, 10, 30.0).is_err());
    }
}
