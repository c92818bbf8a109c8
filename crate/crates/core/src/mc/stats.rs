use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sum {
    sum: f64,
    c: f64,
}

impl Sum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = Sum::default();
    xs.into_iter().for_each(|x| s.add(x));
    s.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    sum(xs.iter().copied()) / xs.len() as f64
}

/// Sample mean with a normal 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_eff: usize,
}

pub const Z95: f64 = 1.959_963_984_540_054;

impl Estimate {
    fn from_mean_se(mean: f64, std_err: f64, n_eff: usize) -> Self {
        Estimate { mean, std_err, ci_low: mean - Z95 * std_err, ci_high: mean + Z95 * std_err, n_eff }
    }

    pub fn exact(value: f64) -> Self {
        Estimate::from_mean_se(value, 0.0, 0)
    }

    /// |mean − target| in units of the standard error (0 when both vanish).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_err
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z_score(target) <= sigmas
    }
}

pub fn estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate::from_mean_se(f64::NAN, f64::NAN, 0);
    }
    let m = mean(xs);
    let var = if n > 1 { sum(xs.iter().map(|x| (x - m) * (x - m))) / (n - 1) as f64 } else { 0.0 };
    Estimate::from_mean_se(m, (var / n as f64).sqrt(), n)
}

/// Median of `groups` block means. The spread of the block means gives the
/// standard error, inflated by sqrt(π/2) for the median.
pub fn median_of_means(xs: &[f64], groups: usize) -> Estimate {
    let g = groups.clamp(1, xs.len().max(1));
    let size = xs.len() / g;
    if size == 0 {
        return estimate(xs);
    }
    let mut means: Vec<f64> = (0..g).map(|i| mean(&xs[i * size..(i + 1) * size])).collect();
    let spread = estimate(&means).std_err;
    means.sort_by(f64::total_cmp);
    let med = if g % 2 == 1 { means[g / 2] } else { 0.5 * (means[g / 2 - 1] + means[g / 2]) };
    Estimate::from_mean_se(med, spread * (std::f64::consts::PI / 2.0).sqrt(), size * g)
}

/// Two-sided chi-square interval for the variance of normal data.
pub fn variance_interval(xs: &[f64], level: f64) -> (f64, f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    let s2 = sum(xs.iter().map(|x| (x - m) * (x - m))) / (n - 1) as f64;
    let chi = ChiSquared::new((n - 1) as f64).expect("n > 1");
    let a = (1.0 - level) / 2.0;
    let lo = (n - 1) as f64 * s2 / chi.inverse_cdf(1.0 - a);
    let hi = (n - 1) as f64 * s2 / chi.inverse_cdf(a);
    (s2, lo, hi)
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() - 1) as f64 * q).round() as usize;
    v[idx]
}
