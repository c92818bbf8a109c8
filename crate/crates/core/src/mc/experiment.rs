//! Manifest-driven experiments. A run writes `manifest.json`, one
//! `series_<name>.csv` per estimated curve, `plot_data.csv` and
//! `summary.json`; none of them carries a timestamp, so equal manifests
//! give byte-identical output.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::bm::{bm_path, check_paths, par_paths};
use super::bridge::{bridge_path, dyadic_window, single_jump_path};
use super::extended::{extended_approx, extended_context, ExtendedParams, MarkovSupermartingale};
use super::fatou::{fatou_error, fatou_grid, fatou_path, in_s};
use super::gallery::{exp_decay_tail, halving_chain_tail, reciprocal_bessel, uniform_rho};
use super::grid::{Grid, GridSpec};
use super::redirect::{mass_redirect, RedirectInput};
use super::rng::{bridge_channel, CH_BM};
use super::simple::{check_burn_windows, suicide_path, SimpleProcess};
use super::split::split_limit_demo;
use super::stats::{estimate, median_of_means, quantile, variance_interval, Estimate};
use crate::error::{Error, Result};
use crate::rational::rat;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub n_paths: usize,
    pub grid: GridSpec,
    #[serde(default)]
    pub params: Value,
}

pub const EXPERIMENTS: &[&str] = &[
    "bm",
    "bridge",
    "single_jump",
    "suicide",
    "fatou",
    "extended",
    "mass_redirect",
    "split_limit",
    "exp_decay",
    "reciprocal_bessel",
    "uniform_rho",
];

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Default manifest for a named experiment.
    pub fn gallery(name: &str, seed: u64) -> Result<Self> {
        let (n_paths, grid) = match name {
            "bm" => (10_000, GridSpec::new(1.0, 1.0 / 16.0)),
            "bridge" | "single_jump" => (100_000, GridSpec::new(2.0, 1.0 / 8.0)),
            "suicide" => (10_000, GridSpec::new(2.0, 1.0 / 16.0)),
            "fatou" => (200, GridSpec::new(1.0, 1.0 / 64.0).with_points_per_window(16)),
            "extended" => (20_000, GridSpec::new(3.0, 1.0 / 16.0).with_points_per_window(64)),
            "mass_redirect" => (100_000, GridSpec::new(3.25, 1.0 / 16.0).with_points_per_window(64)),
            "split_limit" => (100_000, GridSpec::new(4.0, 1.0)),
            "exp_decay" => (100_000, GridSpec::new(2.0, 1.0)),
            "reciprocal_bessel" => (20_000, GridSpec::new(2.0, 1.0 / 64.0)),
            "uniform_rho" => (10_000, GridSpec::new(3.0, 1.0 / 16.0).with_points_per_window(32)),
            _ => return Err(Error::UnknownExperiment(name.to_string())),
        };
        Ok(Manifest { experiment: name.to_string(), seed, n_paths, grid, params: json!({}) })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.to_string(), pass, detail: detail.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub seed: u64,
    pub n_paths: usize,
    pub all_pass: bool,
    pub checks: Vec<Check>,
    pub values: Value,
}

#[derive(Default)]
struct Output {
    series: Vec<(String, Vec<(f64, Estimate)>)>,
    plot: Vec<(String, f64, f64)>,
    checks: Vec<Check>,
    values: Value,
}

impl Output {
    fn add_series(&mut self, name: &str, rows: Vec<(f64, Estimate)>) {
        self.plot.extend(rows.iter().map(|(t, e)| (name.to_string(), *t, e.mean)));
        self.series.push((name.to_string(), rows));
    }
}

fn params<T: DeserializeOwned + Default>(v: &Value) -> Result<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| Error::InvalidParameter(format!("params: {e}")))
}

/// Grid indices of the base times k·base_step and of `extra`.
fn report_indices(grid: &Grid, spec: &GridSpec, extra: &[f64]) -> Vec<usize> {
    let steps = (spec.t_max / spec.base_step).floor() as usize;
    let mut idx: Vec<usize> = (0..=steps).map(|k| k as f64 * spec.base_step).chain(extra.iter().copied()).filter_map(|t| grid.index_of(t)).collect();
    idx.push(grid.len() - 1);
    idx.sort_unstable();
    idx.dedup();
    idx
}

/// Column estimates of per-path rows sampled at `idx`.
fn columns(grid: &Grid, idx: &[usize], rows: &[Vec<f64>]) -> Vec<(f64, Estimate)> {
    idx.iter()
        .enumerate()
        .map(|(j, &k)| (grid.times[k], estimate(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())))
        .collect()
}

fn pick(path: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&k| path[k]).collect()
}

fn fmt_est(e: &Estimate) -> String {
    format!("{} ± {}", e.mean, e.std_err)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NoParams {}

impl Default for NoParams {
    fn default() -> Self {
        NoParams {}
    }
}

fn run_bm(m: &Manifest) -> Result<Output> {
    let _: NoParams = params(&m.params)?;
    let grid = m.grid.build(&[], &[])?;
    let idx = report_indices(&grid, &m.grid, &[]);
    let rows = par_paths(m.n_paths, |i| pick(&bm_path(&grid, m.seed, CH_BM, i), &idx));
    let mut out = Output::default();
    let means = columns(&grid, &idx, &rows);
    let worst = means.iter().map(|(_, e)| e.z_score(0.0)).fold(0.0, f64::max);
    let last: Vec<f64> = rows.iter().map(|r| *r.last().unwrap()).collect();
    let (s2, lo, hi) = variance_interval(&last, 0.999);
    let t = grid.t_max();
    out.checks.push(check("mean_zero", worst <= 4.5, format!("largest |mean|/se = {worst}")));
    out.checks.push(check("variance_t", lo <= t && t <= hi, format!("sample variance {s2} with 99.9% interval [{lo}, {hi}] at t = {t}")));
    for (j, &k) in idx.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let var = if col.len() > 1 { variance_interval(&col, 0.95).0 } else { 0.0 };
        out.plot.push(("variance".into(), grid.times[k], var));
    }
    out.add_series("mean", means);
    out.values = json!({"variance_at_t_max": s2});
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct JumpParams {
    a: f64,
    m: u32,
    anchor: f64,
}

impl Default for JumpParams {
    fn default() -> Self {
        JumpParams { a: 0.5, m: 6, anchor: 1.0 }
    }
}

/// Plain bridge (a = 0 in the reporting) or a + (1 − a)·E.
fn run_jump(m: &Manifest, plain: bool) -> Result<Output> {
    let p: JumpParams = params(&m.params)?;
    let a = if plain { 0.0 } else { p.a };
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("jump target a = {a} must lie in [0, 1]")));
    }
    check_paths(m.n_paths)?;
    let w = dyadic_window(p.m, p.anchor);
    let mid = p.anchor - w.length / 2.0;
    let grid = m.grid.build(&[w], &[mid, p.anchor - w.length])?;
    grid.check_window(&w)?;
    let idx = report_indices(&grid, &m.grid, &[mid, p.anchor - w.length, p.anchor]);
    let rows = par_paths(m.n_paths, |i| {
        let path = if plain { bridge_path(&grid, &w, m.seed, bridge_channel(0), i) } else { single_jump_path(&grid, a, &w, m.seed, i) };
        pick(&path, &idx)
    });
    let mut out = Output::default();
    let start = p.anchor - w.length;
    let pre: Vec<usize> = (0..idx.len()).filter(|&j| grid.times[idx[j]] <= start).collect();
    let post: Vec<usize> = (0..idx.len()).filter(|&j| grid.times[idx[j]] >= p.anchor).collect();
    let jm = idx.iter().position(|&k| grid.times[k] == mid).unwrap();
    let mid_vals: Vec<f64> = rows.iter().map(|r| r[jm]).collect();
    let mom = median_of_means(&mid_vals, 20);
    let before_ok = rows.iter().all(|r| pre.iter().all(|&j| r[j] == 1.0));
    let after_ok = rows.iter().all(|r| post.iter().all(|&j| r[j] == a));
    out.checks.push(check("one_before_window", before_ok, format!("every path equals 1 up to t = {start}")));
    out.checks.push(check("exact_after_window", after_ok, format!("every path equals {a} from t = {}", p.anchor)));
    out.checks.push(check("mid_window_mean", mom.within(1.0, 5.0), format!("median of means {} at t = {mid}", fmt_est(&mom))));
    out.add_series("mean", columns(&grid, &idx, &rows));
    out.values = json!({"mid_window": mom, "mid_window_plain": estimate(&mid_vals), "window": [start, p.anchor]});
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SuicideParams {
    jump_times: Vec<f64>,
    levels: Vec<f64>,
    m: u32,
}

impl Default for SuicideParams {
    fn default() -> Self {
        SuicideParams { jump_times: vec![0.25, 0.5, 1.0], levels: vec![1.0, 0.75, 0.5, 0.25], m: 6 }
    }
}

fn run_suicide(m: &Manifest) -> Result<Output> {
    let p: SuicideParams = params(&m.params)?;
    check_paths(m.n_paths)?;
    let g = SimpleProcess::new(p.jump_times, p.levels)?;
    let windows = g.burn_windows(p.m);
    let mids: Vec<f64> = windows.iter().map(|w| w.anchor - w.length / 2.0).collect();
    let grid = m.grid.build(&windows, &mids)?;
    check_burn_windows(&grid, &g, p.m)?;
    let idx = report_indices(&grid, &m.grid, &mids);
    let inside = |t: f64| windows.iter().any(|w| w.anchor - w.length <= t && t < w.anchor);
    let plateau: Vec<usize> = (0..grid.len()).filter(|&k| !inside(grid.times[k])).collect();
    let rows = par_paths(m.n_paths, |i| {
        let path = suicide_path(&grid, &g, p.m, m.seed, i);
        let exact = plateau.iter().all(|&k| path[k] == g.value_at(grid.times[k]) || g.jump_times.contains(&grid.times[k]));
        (pick(&path, &idx), exact)
    });
    let mut out = Output::default();
    let exact = rows.iter().all(|r| r.1);
    out.checks.push(check("plateaus_equal_g", exact, "outside burn-in windows every path equals G exactly"));
    let mut mid_values = Vec::new();
    for (n, &mid) in mids.iter().enumerate() {
        let j = idx.iter().position(|&k| grid.times[k] == mid).unwrap();
        let col: Vec<f64> = rows.iter().map(|r| r.0[j]).collect();
        let mom = median_of_means(&col, 20);
        let target = g.levels[n];
        out.checks.push(check(&format!("window_{n}_mean"), mom.within(target, 5.0), format!("{} against {target} at t = {mid}", fmt_est(&mom))));
        mid_values.push(mom);
    }
    let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.0).collect();
    out.add_series("mean", columns(&grid, &idx, &rows));
    out.values = json!({"mid_window": mid_values});
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FatouParams {
    m_max: u32,
    probes: Vec<f64>,
    drift: String,
}

impl Default for FatouParams {
    fn default() -> Self {
        FatouParams { m_max: 6, probes: vec![0.3, 1.0 / 3.0, 0.45, 0.5, 0.8], drift: "steps".into() }
    }
}

fn run_fatou(m: &Manifest) -> Result<Output> {
    let p: FatouParams = params(&m.params)?;
    check_paths(m.n_paths)?;
    if p.m_max == 0 || p.m_max > 10 {
        return Err(Error::InvalidParameter("m_max must lie in 1..=10".into()));
    }
    let steps = p.drift == "steps";
    if !steps && p.drift != "smooth" {
        return Err(Error::InvalidParameter(format!("drift {:?} is neither \"steps\" nor \"smooth\"", p.drift)));
    }
    let mut extra = p.probes.clone();
    extra.extend([0.3, 0.7]);
    let grid = fatou_grid(&m.grid, p.m_max, &extra)?;
    let kp: Vec<usize> = p.probes.iter().map(|&t| grid.index_of(t).ok_or_else(|| Error::InvalidParameter(format!("probe {t} outside the grid")))).collect::<Result<_>>()?;
    // D is deterministic: two drops of 1/4, or a smooth decay.
    let d: Vec<f64> = grid
        .times
        .iter()
        .map(|&t| if steps { -0.25 * ((t >= 0.3) as u8 + (t >= 0.7) as u8) as f64 } else { 0.5 * ((-t).exp() - 1.0) })
        .collect();
    // errs[path][m − 1][probe]
    let errs = par_paths(m.n_paths, |i| {
        let w = bm_path(&grid, m.seed, CH_BM, i);
        let mp: Vec<f64> = grid.times.iter().zip(&w).map(|(&t, &x)| 0.5 + 0.5 * (x - 0.5 * t).exp()).collect();
        (1..=p.m_max).map(|lvl| {
            let z = fatou_path(&grid, &mp, &d, lvl, m.seed, i);
            kp.iter().map(|&k| fatou_error(&z, &mp, &d, k)).collect::<Vec<f64>>()
        }).collect::<Vec<_>>()
    });
    let mut out = Output::default();
    let mut m0s = Vec::new();
    for (j, &t) in p.probes.iter().enumerate() {
        let q95: Vec<f64> = (0..p.m_max as usize).map(|l| quantile(&errs.iter().map(|e| e[l][j]).collect::<Vec<_>>(), 0.95)).collect();
        out.add_series(&format!("error_t{t}"), q95.iter().enumerate().map(|(l, &q)| ((l + 1) as f64, Estimate::exact(q))).collect());
        let exact_from = (0..p.m_max as usize).rev().take_while(|&l| errs.iter().all(|e| e[l][j] == 0.0)).last();
        let m0 = exact_from.map(|l| l + 1);
        if steps {
            let off_s = !in_s(t, 20);
            out.checks.push(check(
                &format!("exact_after_m0_t{t}"),
                !off_s || m0.is_some(),
                format!("in_S = {}, error exactly 0 for m ≥ {m0:?}", !off_s),
            ));
        } else {
            let mono = q95.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
            out.checks.push(check(&format!("quantile_nonincreasing_t{t}"), mono, format!("95% error quantiles {q95:?}")));
        }
        m0s.push(json!({"probe": t, "in_s": in_s(t, 20), "m0": m0, "q95": q95}));
    }
    out.values = json!({"drift": p.drift, "probes": m0s});
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExtendedManifestParams {
    example: String,
    h: f64,
    i: Option<u32>,
    k: u32,
    m: u32,
    n_loc: f64,
    probe: f64,
}

impl Default for ExtendedManifestParams {
    fn default() -> Self {
        ExtendedManifestParams { example: "exp_decay".into(), h: 2.0, i: None, k: 3, m: 6, n_loc: 20.0, probe: 0.6 }
    }
}

fn run_extended(m: &Manifest) -> Result<Output> {
    let p: ExtendedManifestParams = params(&m.params)?;
    let z = MarkovSupermartingale::by_name(&p.example)?;
    let ep = ExtendedParams { h: p.h, k: p.k, m: p.m, n_loc: p.n_loc };
    let r = extended_approx(z, ep, &m.grid, p.probe, m.n_paths, m.seed)?;
    let ctx = extended_context(z, ep, &m.grid, &[p.probe])?;
    let idx = report_indices(&ctx.grid, &m.grid, &[p.probe]);
    let n_series = m.n_paths.min(2_000);
    let rows: Vec<Vec<f64>> = par_paths(n_series, |i| ctx.path(m.seed, i).map(|x| pick(&x.l_bar, &idx))).into_iter().collect::<Result<_>>()?;
    let mut out = Output::default();
    out.add_series("l_bar_mean", columns(&ctx.grid, &idx, &rows));
    out.checks.push(check("starts_at_one", r.start.mean == 1.0, format!("mean of L̄_0 = {}", r.start.mean)));
    out.checks.push(check("martingale_mean", r.end.within(1.0, 5.0) || r.c == 0.0, format!("mean of L̄ at t_max = {}", fmt_est(&r.end))));
    out.checks.push(check(
        "unlocalized_limit",
        (r.end_unlocalized.mean - r.terminal_mean).abs() <= 5.0 * r.end_unlocalized.std_err + 1e-12,
        format!("unlocalized paths end at {} against E[Z̄_∞] = {}", fmt_est(&r.end_unlocalized), r.terminal_mean),
    ));
    let j_stage = match p.i {
        Some(i) => format!("skipped: the cut drift has no predictable jump of size 1/{i} or more before h"),
        None => "skipped: no threshold index given".to_string(),
    };
    out.values = json!({"report": r, "j_stage": j_stage});
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RedirectParams {
    c: f64,
    l: Vec<i64>,
    h: f64,
    k: u32,
    m: u32,
    n_loc: f64,
}

impl Default for RedirectParams {
    fn default() -> Self {
        RedirectParams { c: 0.5, l: vec![1, 2], h: 3.0, k: 2, m: 6, n_loc: 10.0 }
    }
}

fn run_redirect(m: &Manifest) -> Result<Output> {
    let p: RedirectParams = params(&m.params)?;
    check_paths(m.n_paths)?;
    if !(p.c > 0.0 && p.c < 1.0) {
        return Err(Error::InvalidParameter("c must lie in (0, 1)".into()));
    }
    // Z = e^-t first drops to c at ρ = log(1/c).
    let rho = -p.c.ln();
    let ep = ExtendedParams { h: p.h, k: p.k, m: p.m, n_loc: p.n_loc };
    let ctx = extended_context(MarkovSupermartingale::exp_decay(), ep, &m.grid, &[rho, rho + 1.0])?;
    let (kr, kr1) = match (ctx.grid.index_of(rho), ctx.grid.index_of(rho + 1.0)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidParameter("the grid must reach ρ + 1".into())),
    };
    let last = ctx.grid.len() - 1;
    let rows: Vec<[f64; 4]> = par_paths(m.n_paths, |i| ctx.path(m.seed, i).map(|x| [x.l_bar[kr], x.l_bar[last], x.w[kr], x.w[kr1]]))
        .into_iter()
        .collect::<Result<_>>()?;
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let (l_rho, l_inf, w_rho, w1) = (col(0), col(1), col(2), col(3));
    let fin = vec![true; rows.len()];
    let input = RedirectInput { l_rho: &l_rho, l_inf: &l_inf, w_rho: &w_rho, w_rho_plus_1: &w1, rho_finite: &fin };
    let mut out = Output::default();
    let mut results = Vec::new();
    let outs: Vec<_> = p.l.iter().map(|&l| mass_redirect(&input, p.c, l)).collect::<Result<_>>()?;
    for (a, ra) in outs.iter().enumerate() {
        out.checks.push(check(
            &format!("mass_on_b{}", ra.l),
            ra.mass_on_b.mean >= ra.bound - 3.0 * ra.mass_on_b.std_err,
            format!("{} against the bound {}", fmt_est(&ra.mass_on_b), ra.bound),
        ));
        let mut cross = Vec::new();
        for (b, rb) in outs.iter().enumerate() {
            if a == b {
                continue;
            }
            let on_other: Vec<f64> = ra.weights.iter().zip(&rb.in_b).map(|(w, &hit)| if hit { *w } else { 0.0 }).collect();
            let e = estimate(&on_other);
            let both: Vec<f64> = ra.weights.iter().zip(ra.in_b.iter().zip(&rb.in_b)).map(|(w, (&x, &y))| if x || y { *w } else { 0.0 }).collect();
            let s = estimate(&both);
            out.checks.push(check(
                &format!("disjoint_sum_b{}_b{}", ra.l, rb.l),
                s.mean <= 1.0 + 5.0 * s.std_err,
                format!("mass on B_{} ∪ B_{} is {}", ra.l, rb.l, fmt_est(&s)),
            ));
            cross.push(json!({"other": rb.l, "mass": e}));
        }
        results.push(json!({"l": ra.l, "mass_on_b": ra.mass_on_b, "total_mass": ra.total_mass, "bound": ra.bound,
            "stopped_fraction": estimate(&ra.stopped.iter().map(|&s| s as u8 as f64).collect::<Vec<_>>()), "cross": cross}));
        out.plot.push(("mass_on_b".into(), ra.l as f64, ra.mass_on_b.mean));
    }
    out.values = json!({"rho": rho, "families": results});
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SplitParams {
    n: u32,
    sign: i8,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams { n: 4, sign: 1 }
    }
}

fn run_split(m: &Manifest) -> Result<Output> {
    let p: SplitParams = params(&m.params)?;
    let r = split_limit_demo(p.sign, p.n, m.n_paths, m.seed, m.grid.points_per_window, m.grid.sigma_max)?;
    let mut out = Output::default();
    out.checks.push(check("same_event_mass", r.same_mass.within(1.0, 3.0), format!("E[L 1_A] = {}", fmt_est(&r.same_mass))));
    out.checks.push(check("cross_event_mass", r.cross_mass.within(0.0, 3.0), format!("E[L 1_A'] = {}", fmt_est(&r.cross_mass))));
    out.checks.push(check(
        "doob_bound",
        r.hit_frequency.mean <= r.doob_bound + 3.0 * r.hit_frequency.std_err,
        format!("P[ρ_n < ∞] = {} against 2^-n = {}", fmt_est(&r.hit_frequency), r.doob_bound),
    ));
    out.plot.push(("same_mass".into(), p.n as f64, r.same_mass.mean));
    out.plot.push(("hit_frequency".into(), p.n as f64, r.hit_frequency.mean));
    out.values = serde_json::to_value(&r)?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TimesParams {
    ts: Vec<f64>,
}

impl Default for TimesParams {
    fn default() -> Self {
        TimesParams { ts: vec![0.5, 1.0, 2.0] }
    }
}

fn run_exp_decay(m: &Manifest) -> Result<Output> {
    let p: TimesParams = params(&m.params)?;
    let rows = exp_decay_tail(&p.ts, m.n_paths, m.seed)?;
    let mut out = Output::default();
    for r in &rows {
        out.checks.push(check(&format!("tail_t{}", r.t), r.estimate.within(r.exact, 3.0), format!("{} against e^-t = {}", fmt_est(&r.estimate), r.exact)));
    }
    let tail = halving_chain_tail(6)?;
    let exact = tail.iter().enumerate().all(|(t, q)| *q == rat(1, 1 << t));
    out.checks.push(check("halving_chain_exact", exact, "Q[τ > t] = 2^-t on the unary chain"));
    out.add_series("Q_tau_gt_t", rows.iter().map(|r| (r.t, r.estimate)).collect());
    out.plot.extend(rows.iter().map(|r| ("exact".to_string(), r.t, r.exact)));
    out.values = json!({"rows": rows});
    Ok(out)
}

fn run_bessel(m: &Manifest) -> Result<Output> {
    let p: TimesParams = params(&m.params)?;
    let grid = m.grid.build(&[], &p.ts)?;
    let rows = reciprocal_bessel(&grid, &p.ts, m.n_paths, m.seed)?;
    let mut out = Output::default();
    for r in &rows {
        out.checks.push(check(&format!("mean_t{}", r.t), r.mean.within(r.exact, 4.0), format!("E[1/R_t] = {} against {}", fmt_est(&r.mean), r.exact)));
        out.checks.push(check(&format!("crossing_t{}", r.t), r.crossing.within(r.exact, 4.0), format!("survival {} against {}", fmt_est(&r.crossing), r.exact)));
    }
    out.add_series("mean", rows.iter().map(|r| (r.t, r.mean)).collect());
    out.add_series("survival", rows.iter().map(|r| (r.t, r.crossing)).collect());
    out.values = json!({"rows": rows});
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct UniformParams {
    ms: Vec<u32>,
    probe: f64,
}

impl Default for UniformParams {
    fn default() -> Self {
        UniformParams { ms: vec![2, 4, 8, 16, 32], probe: 1.5 }
    }
}

fn run_uniform(m: &Manifest) -> Result<Output> {
    let p: UniformParams = params(&m.params)?;
    let rows = uniform_rho(&p.ms, p.probe, m.n_paths, m.seed, m.grid.points_per_window)?;
    let mut out = Output::default();
    let at_rho = rows.iter().all(|r| r.m_at_rho.mean == 0.0 && r.n_at_rho.mean > 1.0 - 1e-6);
    out.checks.push(check("limits_differ_at_rho", at_rho, "M^(m)_ρ = 0 and N^(m)_ρ = 1 for every m"));
    let shrink = |f: &dyn Fn(&super::gallery::UniformRhoRow) -> f64| rows.windows(2).all(|w| f(&w[1]) <= f(&w[0]));
    out.checks.push(check("agree_at_fixed_time", shrink(&|r| r.m_off_at_probe.mean) && shrink(&|r| r.n_off_at_probe.mean), "disagreement with 1_{t<ρ} at the probe shrinks in m"));
    out.add_series("m_off_at_probe", rows.iter().map(|r| (r.m as f64, r.m_off_at_probe)).collect());
    out.add_series("n_off_at_probe", rows.iter().map(|r| (r.m as f64, r.n_off_at_probe)).collect());
    out.values = json!({"rows": rows});
    Ok(out)
}

fn dispatch(m: &Manifest) -> Result<Output> {
    match m.experiment.as_str() {
        "bm" => run_bm(m),
        "bridge" => run_jump(m, true),
        "single_jump" => run_jump(m, false),
        "suicide" => run_suicide(m),
        "fatou" => run_fatou(m),
        "extended" => run_extended(m),
        "mass_redirect" => run_redirect(m),
        "split_limit" => run_split(m),
        "exp_decay" => run_exp_decay(m),
        "reciprocal_bessel" => run_bessel(m),
        "uniform_rho" => run_uniform(m),
        other => Err(Error::UnknownExperiment(other.to_string())),
    }
}

fn write_outputs(m: &Manifest, out: &Output, summary: &RunSummary, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(m)? + "\n")?;
    for (name, rows) in &out.series {
        let mut w = csv::Writer::from_path(dir.join(format!("series_{name}.csv")))?;
        w.write_record(["t", "estimate", "ci_low", "ci_high", "n_eff"])?;
        for (t, e) in rows {
            w.write_record([t.to_string(), e.mean.to_string(), e.ci_low.to_string(), e.ci_high.to_string(), e.n_eff.to_string()])?;
        }
        w.flush()?;
    }
    let mut w = csv::Writer::from_path(dir.join("plot_data.csv"))?;
    w.write_record(["series", "x", "y"])?;
    for (s, x, y) in &out.plot {
        w.write_record([s.clone(), x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

/// Runs a manifest, optionally on a dedicated pool of `threads` workers,
/// and writes its outputs under `out_dir` when given.
pub fn run_manifest(m: &Manifest, out_dir: Option<&Path>, threads: Option<usize>) -> Result<RunSummary> {
    let out = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| dispatch(m))?,
        None => dispatch(m)?,
    };
    let summary = RunSummary {
        experiment: m.experiment.clone(),
        seed: m.seed,
        n_paths: m.n_paths,
        all_pass: out.checks.iter().all(|c| c.pass),
        checks: out.checks.clone(),
        values: out.values.clone(),
    };
    if let Some(dir) = out_dir {
        write_outputs(m, &out, &summary, dir)?;
    }
    Ok(summary)
}
