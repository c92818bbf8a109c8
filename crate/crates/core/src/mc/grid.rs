use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SIGMA_MAX: f64 = 30.0;
pub const DEFAULT_POINTS_PER_WINDOW: usize = 200;

fn default_sigma_max() -> f64 {
    DEFAULT_SIGMA_MAX
}

fn default_points() -> usize {
    DEFAULT_POINTS_PER_WINDOW
}

/// Base grid `0, h, 2h, ..., t_max`, refined near every burn-in window by
/// points that are evenly spaced on the bridge clock σ = log(w / (A − t)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub base_step: f64,
    #[serde(default = "default_points")]
    pub points_per_window: usize,
    #[serde(default = "default_sigma_max")]
    pub sigma_max: f64,
}

impl GridSpec {
    pub fn new(t_max: f64, base_step: f64) -> Self {
        GridSpec { t_max, base_step, points_per_window: DEFAULT_POINTS_PER_WINDOW, sigma_max: DEFAULT_SIGMA_MAX }
    }

    pub fn with_points_per_window(mut self, n: usize) -> Self {
        self.points_per_window = n;
        self
    }

    pub fn build(&self, windows: &[Window], extra: &[f64]) -> Result<Grid> {
        let bad = |msg: String| Err(Error::DegenerateGrid(msg));
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return bad(format!("t_max = {}", self.t_max));
        }
        if !(self.base_step.is_finite() && self.base_step > 0.0 && self.base_step <= self.t_max) {
            return bad(format!("base_step = {}", self.base_step));
        }
        if !(self.sigma_max.is_finite() && self.sigma_max > 0.0) || self.points_per_window == 0 {
            return bad("refinement needs sigma_max > 0 and at least one point per window".into());
        }
        let steps = (self.t_max / self.base_step).floor() as usize;
        let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * self.base_step).collect();
        times.push(self.t_max);
        let dsig = self.sigma_max / self.points_per_window as f64;
        for w in windows {
            if !(w.length > 0.0) || w.anchor > self.t_max || w.anchor - w.length < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "window [{}, {}) is not inside [0, {}]",
                    w.anchor - w.length,
                    w.anchor,
                    self.t_max
                )));
            }
            times.push(w.anchor);
            for j in 0..=self.points_per_window {
                times.push(w.anchor - w.length * (-(j as f64) * dsig).exp());
            }
        }
        times.extend(extra.iter().copied().filter(|t| (0.0..=self.t_max).contains(t)));
        times.retain(|t| (0.0..=self.t_max).contains(t));
        times.sort_by(f64::total_cmp);
        times.dedup();
        Ok(Grid { times, sigma_max: self.sigma_max })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    /// The bridge is 0 from here on.
    pub anchor: f64,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub times: Vec<f64>,
    pub sigma_max: f64,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.binary_search_by(|x| x.total_cmp(&t)).ok()
    }

    /// First index with time ≥ t (len if none).
    pub fn first_at_or_after(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x < t)
    }

    /// Last index with time ≤ t.
    pub fn last_at_or_before(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x <= t).saturating_sub(1)
    }

    /// Grid indices covering [anchor − length, anchor).
    pub fn window_range(&self, w: &Window) -> std::ops::Range<usize> {
        self.first_at_or_after(w.anchor - w.length)..self.first_at_or_after(w.anchor)
    }

    pub fn check_window(&self, w: &Window) -> Result<()> {
        if w.anchor > self.t_max() {
            return Err(Error::InvalidParameter(format!("anchor {} lies beyond the grid end {}", w.anchor, self.t_max())));
        }
        if self.window_range(w).is_empty() {
            return Err(Error::WindowUnresolved { start: w.anchor - w.length, anchor: w.anchor });
        }
        Ok(())
    }
}
