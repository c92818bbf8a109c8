//! Mass redirection: a martingale family whose terminal law puts a fixed
//! share of mass on the event B_l = {W_{ρ+1} ∈ (l, l+1)}.

use serde::Serialize;
use libm::erfc;

use super::stats::{estimate, Estimate};
use crate::error::{Error, Result};

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// P[a < X < b] for a standard normal X, accurate in both tails.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        0.5 * (erfc(a / std::f64::consts::SQRT_2) - erfc(b / std::f64::consts::SQRT_2))
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

/// P[B_l | F_ρ] = Φ(l + 1 − W_ρ) − Φ(l − W_ρ).
pub fn b_probability(w_rho: f64, l: i64) -> f64 {
    normal_interval(l as f64 - w_rho, l as f64 + 1.0 - w_rho)
}

pub fn in_b(w_rho_plus_1: f64, l: i64) -> bool {
    (l as f64) < w_rho_plus_1 && w_rho_plus_1 < (l + 1) as f64
}

/// Per-path terminal data of a uniformly integrable martingale L̂ at a
/// stopping time ρ (`rho_finite` false when ρ = ∞).
pub struct RedirectInput<'a> {
    pub l_rho: &'a [f64],
    pub l_inf: &'a [f64],
    pub w_rho: &'a [f64],
    pub w_rho_plus_1: &'a [f64],
    pub rho_finite: &'a [bool],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RedirectOutput {
    pub l: i64,
    pub c: f64,
    /// σ̂ = ρ on these paths, ∞ elsewhere.
    pub stopped: Vec<bool>,
    pub in_b: Vec<bool>,
    pub weights: Vec<f64>,
    pub mass_on_b: Estimate,
    pub total_mass: Estimate,
    pub bound: f64,
}

/// Stops at ρ where L̂_ρ > (1 + c)/2 and there redirects all remaining mass
/// onto B_l by the factor 1_{B_l} / P[B_l | F_ρ].
pub fn mass_redirect(input: &RedirectInput, c: f64, l: i64) -> Result<RedirectOutput> {
    let n = input.l_rho.len();
    if [input.l_inf.len(), input.w_rho.len(), input.w_rho_plus_1.len(), input.rho_finite.len()].iter().any(|&k| k != n) || n == 0 {
        return Err(Error::InvalidParameter("redirect inputs must be nonempty and of equal length".into()));
    }
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("c = {c} must lie in [0, 1)")));
    }
    let level = (1.0 + c) / 2.0;
    let stopped: Vec<bool> = (0..n).map(|i| input.rho_finite[i] && input.l_rho[i] > level).collect();
    let hits: Vec<bool> = input.w_rho_plus_1.iter().map(|&w| in_b(w, l)).collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            if !stopped[i] {
                input.l_inf[i]
            } else if hits[i] {
                input.l_rho[i] / b_probability(input.w_rho[i], l)
            } else {
                0.0
            }
        })
        .collect();
    let on_b: Vec<f64> = weights.iter().zip(&hits).map(|(w, &b)| if b { *w } else { 0.0 }).collect();
    Ok(RedirectOutput {
        l,
        c,
        stopped,
        in_b: hits,
        mass_on_b: estimate(&on_b),
        total_mass: estimate(&weights),
        weights,
        bound: (1.0 - c) / 2.0,
    })
}
