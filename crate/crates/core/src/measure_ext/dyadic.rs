//! Finitely additive measures that agree with P on every dyadic algebra F_n
//! yet put full mass on a set of representative points.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};

/// How the representative y_k^(n) of (k2⁻ⁿ, (k+1)2⁻ⁿ] is chosen.
#[derive(Clone, Debug)]
pub enum Picks {
    /// First hit in the enumeration of (0, 1] ∩ ℚ by denominator, then
    /// numerator.
    CanonicalRationals,
    /// First hit in a user-supplied enumeration.
    Enumeration(Vec<Rational>),
    /// One point per interval per level, `explicit[n-1][k]`.
    Explicit(Vec<Vec<Rational>>),
}

/// Reduced p/q in (0, 1], ordered by q then p.
pub fn canonical_rationals() -> impl Iterator<Item = (u64, u64)> {
    (1u64..).flat_map(|q| (1..=q).filter(move |&p| p.gcd(&q) == 1).map(move |p| (p, q)))
}

/// Index k with x ∈ (k2⁻ⁿ, (k+1)2⁻ⁿ], if x ∈ (0, 1].
fn interval_index(x: &Rational, n: u32) -> Option<u64> {
    if x <= &Rational::zero() || x > &Rational::one() {
        return None;
    }
    let scaled = x * Rational::from_integer(BigInt::one() << n);
    (scaled.ceil().to_integer() - BigInt::one()).to_u64()
}

fn representatives(n_max: u32, picks: &Picks) -> Result<Vec<Vec<Rational>>> {
    let mut reps: Vec<Vec<Option<Rational>>> = (1..=n_max).map(|n| vec![None; 1 << n]).collect();
    let mut missing: usize = reps.iter().map(Vec::len).sum();
    let mut offer = |x: Rational, reps: &mut Vec<Vec<Option<Rational>>>| {
        for n in 1..=n_max {
            if let Some(k) = interval_index(&x, n) {
                let slot = &mut reps[n as usize - 1][k as usize];
                if slot.is_none() {
                    *slot = Some(x.clone());
                    missing -= 1;
                }
            }
        }
        missing == 0
    };
    match picks {
        Picks::CanonicalRationals => {
            for (p, q) in canonical_rationals() {
                if offer(Rational::new(p.into(), q.into()), &mut reps) {
                    break;
                }
            }
        }
        Picks::Enumeration(xs) => {
            for x in xs {
                if offer(x.clone(), &mut reps) {
                    break;
                }
            }
        }
        Picks::Explicit(levels) => {
            for n in 1..=n_max {
                let row = levels.get(n as usize - 1).ok_or_else(|| Error::Representative {
                    level: n,
                    k: 0,
                    reason: "no representatives given for this level".into(),
                })?;
                for k in 0..(1u64 << n) {
                    let x = row.get(k as usize).ok_or_else(|| Error::Representative {
                        level: n,
                        k,
                        reason: "missing representative".into(),
                    })?;
                    if interval_index(x, n) != Some(k) {
                        return Err(Error::Representative {
                            level: n,
                            k,
                            reason: format!("{} lies outside its interval", format_rational(x)),
                        });
                    }
                    reps[n as usize - 1][k as usize] = Some(x.clone());
                }
            }
        }
    }
    reps.into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(|(k, y)| {
                    y.ok_or_else(|| Error::Representative {
                        level: i as u32 + 1,
                        k: k as u64,
                        reason: "no element of the enumeration falls in this interval".into(),
                    })
                })
                .collect()
        })
        .collect()
}

/// P̃^(n) = Σ_k P[I_k^n] δ_{y_k^n}.
#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    pub level: u32,
    pub points: Vec<Rational>,
    pub masses: Vec<Rational>,
}

impl AtomicMeasure {
    pub fn measure_interval(&self, lo: &Rational, hi: &Rational) -> Rational {
        self.points.iter().zip(&self.masses).filter(|(y, _)| *y > lo && *y <= hi).map(|(_, m)| m.clone()).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub cylinders_checked: usize,
    pub mismatches: usize,
    pub agrees_on_f_n: bool,
    pub mass_on_representatives: String,
    pub p_of_representatives: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DyadicReport {
    pub n_max: u32,
    pub rows: Vec<LevelRow>,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct DyadicDemo {
    pub family: Vec<AtomicMeasure>,
    pub representatives: Vec<Vec<Rational>>,
    pub report: DyadicReport,
}

/// `weights[k]` is P of the k-th interval of level `n_max`; P is taken to be
/// uniform inside each such interval, so finite sets are P-null.
pub fn dyadic_demo(n_max: u32, weights: &[Rational], picks: &Picks) -> Result<DyadicDemo> {
    if n_max == 0 || n_max > 20 {
        return Err(Error::InvalidParameter("dyadic level must be in 1..=20".into()));
    }
    if weights.len() != 1 << n_max {
        return Err(Error::InvalidParameter(format!("expected {} weights, got {}", 1u64 << n_max, weights.len())));
    }
    if weights.iter().any(|w| w < &Rational::zero()) || !weights.iter().cloned().sum::<Rational>().is_one() {
        return Err(Error::InvalidParameter("weights must be a probability".into()));
    }
    let reps = representatives(n_max, picks)?;
    // P of level-l intervals, by aggregating the finest weights.
    let p_level = |l: u32, j: usize| -> Rational {
        let width = 1usize << (n_max - l);
        weights[j * width..(j + 1) * width].iter().cloned().sum()
    };
    let dy = |k: u64, l: u32| Rational::new(BigInt::from(k), BigInt::one() << l);

    let mut family = Vec::new();
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let points = reps[n as usize - 1].clone();
        let masses: Vec<Rational> = (0..points.len()).map(|k| p_level(n, k)).collect();
        let m = AtomicMeasure { level: n, points, masses };
        let mut checked = 0;
        let mut mismatches = 0;
        for l in 1..=n {
            for j in 0..(1u64 << l) {
                checked += 1;
                if m.measure_interval(&dy(j, l), &dy(j + 1, l)) != p_level(l, j as usize) {
                    mismatches += 1;
                }
            }
        }
        let total: Rational = m.masses.iter().cloned().sum();
        rows.push(LevelRow {
            level: n,
            cylinders_checked: checked,
            mismatches,
            agrees_on_f_n: mismatches == 0,
            mass_on_representatives: format_rational(&total),
            p_of_representatives: "0/1".into(),
        });
        family.push(m);
    }
    let ok = rows.iter().all(|r| r.agrees_on_f_n && r.mass_on_representatives == "1/1");
    Ok(DyadicDemo { family, representatives: reps, report: DyadicReport { n_max, rows, ok } })
}

pub fn uniform_weights(n_max: u32) -> Vec<Rational> {
    vec![Rational::new(BigInt::one(), BigInt::one() << n_max); 1 << n_max]
}
