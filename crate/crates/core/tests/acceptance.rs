//! Acceptance suite: one pass/fail line per criterion.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use follmer_core::decompositions::{check_multiplicative_properties, doob_meyer, multiplicative};
use follmer_core::follmer::{
    construct_follmer, nonuniqueness_witness, uniqueness_report, verify_ky_all, PairVerdict, Target,
};
use follmer_core::lattice::random::{random_supermartingale, random_tree, TreeShape};
use follmer_core::lattice::{AdaptedProcess, FilteredTree, DEFAULT_ENUMERATION_CAP};
use follmer_core::mc::bm::par_paths;
use follmer_core::mc::bridge::{dyadic_window, single_jump_path};
use follmer_core::mc::experiment::EXPERIMENTS;
use follmer_core::mc::fatou::{fatou_error, fatou_grid, fatou_path, in_s};
use follmer_core::mc::gallery::{exp_decay_tail, halving_chain_tail};
use follmer_core::mc::grid::GridSpec;
use follmer_core::mc::simple::{suicide_path, SimpleProcess};
use follmer_core::mc::stats::median_of_means;
use follmer_core::mc::{run_manifest, split_limit_demo, Manifest};
use follmer_core::measure_ext::{bierlein_extend, dyadic_demo, uniform_weights, AtomSet, FiniteSpace, Picks};
use follmer_core::rational::{format_rational, rat, Rational};

const CORPUS: usize = 1000;
const CORPUS_SEED: u64 = 20_240_601;

fn corpus() -> Vec<(FilteredTree, AdaptedProcess)> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let shape = TreeShape::default();
    (0..CORPUS)
        .map(|_| {
            let tree = random_tree(&mut rng, &shape);
            let z = random_supermartingale(&mut rng, &tree);
            (tree, z)
        })
        .collect()
}

type Outcome = (bool, String);

fn ky_suite(trees: &[(FilteredTree, AdaptedProcess)]) -> Outcome {
    let mut times = 0usize;
    for (i, (tree, z)) in trees.iter().enumerate() {
        let pair = match construct_follmer(tree, z, Target::Cemetery) {
            Ok(p) => p,
            Err(e) => return (false, format!("tree {i}: {e}")),
        };
        match verify_ky_all(&pair, tree, z, DEFAULT_ENUMERATION_CAP) {
            Ok(r) if r.ok => times += r.stopping_times.len(),
            Ok(r) => return (false, format!("tree {i}: first failure {:?}", r.first_failure())),
            Err(e) => return (false, format!("tree {i}: {e}")),
        }
    }
    (true, format!("{} trees, {times} stopping times, exact equality", trees.len()))
}

fn decomposition_suite(trees: &[(FilteredTree, AdaptedProcess)]) -> Outcome {
    for (i, (tree, z)) in trees.iter().enumerate() {
        let add = doob_meyer(tree, z).unwrap();
        let mult = multiplicative(tree, z).unwrap();
        for n in 0..tree.len() {
            if z[n] != &add.m[n] + add.d.at(tree, n) || z[n] != &mult.m[n] * mult.d.at(tree, n) {
                return (false, format!("tree {i}, node {}: identity fails", tree.id(n)));
            }
            // Predictable: siblings share one value.
            let kids = tree.children(n);
            if kids.iter().any(|&c| mult.d.at(tree, c) != mult.d.at(tree, kids[0])) {
                return (false, format!("tree {i}: D_mult differs across siblings of {}", tree.id(n)));
            }
        }
        let bad = check_multiplicative_properties(tree, z, &mult.m, &mult.d);
        if !bad.is_empty() {
            return (false, format!("tree {i}: {bad:?}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut caught = 0;
    for j in 0..100 {
        let (tree, z) = &trees[j * 7 % trees.len()];
        let md = multiplicative(tree, z).unwrap();
        let (mut m, mut d) = (md.m.clone(), md.d.clone());
        let eps = rat(rng.random_range(1..5), rng.random_range(2..9));
        match j % 3 {
            0 => m.values_mut()[rng.random_range(0..tree.len())] += eps,
            1 => d.initial += eps,
            _ => {
                let internal: Vec<_> = (0..tree.len()).filter(|&n| !tree.is_leaf(n)).collect();
                *d.next[internal[rng.random_range(0..internal.len())]].as_mut().unwrap() += eps;
            }
        }
        if !check_multiplicative_properties(tree, z, &m, &d).is_empty() {
            caught += 1;
        }
    }
    (caught == 100, format!("identities exact on {} trees; {caught}/100 perturbations rejected", trees.len()))
}

fn uniqueness_suite(trees: &[(FilteredTree, AdaptedProcess)]) -> Outcome {
    let (mut martingales, mut witnesses) = (0, 0);
    for (i, (tree, z)) in trees.iter().enumerate() {
        let pair = construct_follmer(tree, z, Target::Cemetery).unwrap();
        let r = uniqueness_report(tree, z, &pair).unwrap();
        let lost: Rational = Rational::one() - follmer_core::lattice::terminal_mean(tree, z);
        if r.is_martingale {
            martingales += 1;
            if !lost.is_zero() || !r.tau_lt_zeta_negligible || r.pair != PairVerdict::Unique {
                return (false, format!("tree {i}: martingale report {r:?}"));
            }
        } else if tree.alphabet().len() >= 2 {
            let PairVerdict::NonUnique { witness_state } = &r.pair else {
                return (false, format!("tree {i}: expected a witness, got {:?}", r.pair));
            };
            let w = nonuniqueness_witness(tree, z, witness_state).unwrap();
            let ok_a = verify_ky_all(&w.cemetery, tree, z, DEFAULT_ENUMERATION_CAP).unwrap().ok;
            let ok_b = verify_ky_all(&w.frozen, tree, z, DEFAULT_ENUMERATION_CAP).unwrap().ok;
            if !(ok_a && ok_b) || w.total_variation != lost {
                return (false, format!("tree {i}: TV {} against mass lost {}", format_rational(&w.total_variation), format_rational(&lost)));
            }
            witnesses += 1;
        }
    }
    (true, format!("{martingales} martingales unique; {witnesses} witnesses with TV = mass lost"))
}

fn exp_decay_suite() -> Outcome {
    let rows = exp_decay_tail(&[0.5, 1.0, 2.0], 100_000, 4).unwrap();
    let chain = halving_chain_tail(8).unwrap();
    let exact = chain.iter().enumerate().all(|(t, q)| *q == rat(1, 1 << t));
    let ok = exact && rows.iter().all(|r| r.estimate.within(r.exact, 3.0));
    let detail: Vec<String> = rows.iter().map(|r| format!("t={}: {:.5} vs {:.5} ({:.2}σ)", r.t, r.estimate.mean, r.exact, r.estimate.z_score(r.exact))).collect();
    (ok, format!("{}; halving chain exact: {exact}", detail.join(", ")))
}

fn single_jump_suite() -> Outcome {
    let (m, a, anchor) = (6, 0.5, 1.0);
    let w = dyadic_window(m, anchor);
    let mid = anchor - w.length / 2.0;
    let grid = GridSpec::new(2.0, 0.125).build(&[w], &[mid]).unwrap();
    let before: Vec<usize> = (0..grid.len()).filter(|&k| grid.times[k] <= anchor - w.length).collect();
    let (k_mid, k_end) = (grid.index_of(mid).unwrap(), grid.index_of(2.0).unwrap());
    let rows = par_paths(100_000, |i| {
        let p = single_jump_path(&grid, a, &w, 2024, i);
        (before.iter().all(|&k| p[k] == 1.0), p[k_end] == 0.5, p[k_mid])
    });
    let pre = rows.iter().all(|r| r.0);
    let end = rows.iter().all(|r| r.1);
    let mids: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let mom = median_of_means(&mids, 20);
    let ok = pre && end && mom.within(1.0, 5.0);
    (ok, format!("N=1 before window: {pre}; N_2=1/2 on all paths: {end}; mid-window MoM {:.4} ± {:.4}", mom.mean, mom.std_err))
}

fn suicide_suite() -> Outcome {
    let m = 6;
    let g = SimpleProcess::new(vec![0.5, 1.0], vec![1.0, 0.75, 0.25]).unwrap();
    let windows = g.burn_windows(m);
    let grid = GridSpec::new(2.0, 1.0 / 32.0).build(&windows, &[]).unwrap();
    let plateau: Vec<usize> = (0..grid.len())
        .filter(|&k| !windows.iter().any(|w| w.anchor - w.length < grid.times[k] && grid.times[k] < w.anchor))
        .collect();
    let n = 10_000;
    let good = par_paths(n, |i| {
        let p = suicide_path(&grid, &g, m, 99, i);
        plateau.iter().all(|&k| p[k] == g.value_at(grid.times[k]))
    });
    let count = good.iter().filter(|&&b| b).count();
    (count == n, format!("{count}/{n} paths equal G exactly on all {} plateau grid points", plateau.len()))
}

fn fatou_suite() -> Outcome {
    let probes = [0.3, 1.0 / 3.0, 0.45, 0.5, 0.8];
    let m_max = 6;
    let spec = GridSpec::new(1.0, 1.0 / 64.0).with_points_per_window(16);
    let mut extra = probes.to_vec();
    extra.push(0.7);
    let grid = fatou_grid(&spec, m_max, &extra).unwrap();
    let d: Vec<f64> = grid.times.iter().map(|&t| -0.25 * ((t >= 0.3) as u8 + (t >= 0.7) as u8) as f64).collect();
    let kp: Vec<usize> = probes.iter().map(|&t| grid.index_of(t).unwrap()).collect();
    let errs = par_paths(100, |i| {
        let w = follmer_core::mc::bm::bm_path(&grid, 5, follmer_core::mc::rng::CH_BM, i);
        let mp: Vec<f64> = grid.times.iter().zip(&w).map(|(&t, &x)| 0.5 + 0.5 * (x - 0.5 * t).exp()).collect();
        (1..=m_max).map(|l| {
            let z = fatou_path(&grid, &mp, &d, l, 5, i);
            kp.iter().map(|&k| fatou_error(&z, &mp, &d, k)).collect::<Vec<_>>()
        }).collect::<Vec<_>>()
    });
    let mut m0s = Vec::new();
    let mut ok = true;
    for (j, &t) in probes.iter().enumerate() {
        let off = !in_s(t, 20);
        let m0 = (0..m_max as usize).rev().take_while(|&l| errs.iter().all(|e| e[l][j] == 0.0)).last().map(|l| l + 1);
        ok &= off && m0.is_some();
        m0s.push(format!("{t:.4}→m0={}", m0.map_or("none".into(), |x| x.to_string())));
    }
    let probe_a = !in_s(0.5, 20);
    let probe_b = in_s(0.125 + 2f64.powi(-9) / 2.0, 20);
    ok &= probe_a && probe_b;
    (ok, format!("{}; in_S(0.5)=false: {probe_a}; in_S(2^-3+2^-10)=true: {probe_b}", m0s.join(" ")))
}

fn redirect_suite() -> Outcome {
    let m = Manifest::gallery("mass_redirect", 11).unwrap();
    let s = run_manifest(&m, None, None).unwrap();
    let fam = s.values["families"].as_array().unwrap();
    let ls: Vec<String> = fam.iter().map(|f| format!("l={}: {:.4} ± {:.4}", f["l"], f["mass_on_b"]["mean"].as_f64().unwrap(), f["mass_on_b"]["std_err"].as_f64().unwrap())).collect();
    let distinct = fam.len() >= 2;
    (s.all_pass && distinct, format!("bound 1/4 − 3σ; {}; disjoint sums ≤ 1 + 5σ: {}", ls.join(", "), s.checks.iter().filter(|c| c.name.starts_with("disjoint")).all(|c| c.pass)))
}

fn split_suite() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for sign in [1i8, -1] {
        let r = split_limit_demo(sign, 4, 100_000, if sign > 0 { 31 } else { 32 }, 200, 30.0).unwrap();
        ok &= r.same_mass.within(1.0, 3.0) && r.cross_mass.within(0.0, 3.0);
        parts.push(format!("{}: same {:.4} ± {:.4}, cross {}", if sign > 0 { "+" } else { "−" }, r.same_mass.mean, r.same_mass.std_err, r.cross_mass.mean));
    }
    (ok, parts.join("; "))
}

fn measure_ext_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for i in 0..500 {
        let s = FiniteSpace::random(&mut rng, 10);
        let a: AtomSet = (0..s.n_atoms).filter(|_| rng.random_bool(0.5)).collect();
        let e = bierlein_extend(&s, &a).unwrap();
        if e.measure(&a).unwrap() != s.outer_content(&a) {
            return (false, format!("space {i}: ν[A] differs from μ*[A]"));
        }
        for (b, atoms) in s.blocks.iter().enumerate() {
            if e.measure(&atoms.iter().copied().collect()).unwrap() != s.mu[b] {
                return (false, format!("space {i}: ν differs from μ on block {b}"));
            }
        }
    }
    let demo = dyadic_demo(10, &uniform_weights(10), &Picks::CanonicalRationals).unwrap();
    let agree = demo.report.rows.iter().all(|r| r.agrees_on_f_n);
    let mass = demo.report.rows.iter().all(|r| r.mass_on_representatives == "1/1");
    (agree && mass && demo.report.ok, format!("500 spaces exact; dyadic levels 1..=10 agree on F_n: {agree}, representative mass 1: {mass}"))
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir).unwrap().map(|e| e.unwrap()).map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())).collect()
}

fn replay_suite() -> Outcome {
    let root = std::env::temp_dir().join(format!("follmer-acceptance-{}", std::process::id()));
    let mut diffs = Vec::new();
    for name in EXPERIMENTS {
        let mut m = Manifest::gallery(name, 3).unwrap();
        m.n_paths = m.n_paths.min(2_000);
        if *name == "fatou" {
            m.n_paths = 20;
            m.params = json!({"m_max": 4});
        }
        let a = root.join(name).join("t1");
        let b = root.join(name).join("t4");
        run_manifest(&m, Some(&a), Some(1)).unwrap();
        run_manifest(&m, Some(&b), Some(4)).unwrap();
        // Replaying from the written manifest must reproduce it too.
        let replay = Manifest::from_json(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
        let c = root.join(name).join("replay");
        run_manifest(&replay, Some(&c), Some(2)).unwrap();
        let (da, db, dc) = (dir_bytes(&a), dir_bytes(&b), dir_bytes(&c));
        if da != db || da != dc {
            diffs.push(name.to_string());
        }
    }
    let _ = fs::remove_dir_all(&root);
    (diffs.is_empty(), if diffs.is_empty() { format!("{} experiments byte-identical across 1, 2 and 4 threads", EXPERIMENTS.len()) } else { format!("differences in {diffs:?}") })
}

fn main() {
    let trees = corpus();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("exact Kunita-Yoeurp identity on the random corpus", Box::new(|| ky_suite(&trees))),
        ("decomposition identities and perturbation rejection", Box::new(|| decomposition_suite(&trees))),
        ("uniqueness dichotomy and witnesses", Box::new(|| uniqueness_suite(&trees))),
        ("exponential-decay kill-time law", Box::new(exp_decay_suite)),
        ("single-jump bridge approximation", Box::new(single_jump_suite)),
        ("burn-in plateau identity", Box::new(suicide_suite)),
        ("Fatou approximation off the exceptional set", Box::new(fatou_suite)),
        ("mass redirection bound", Box::new(redirect_suite)),
        ("split limit masses", Box::new(split_suite)),
        ("measure extension and dyadic family", Box::new(measure_ext_suite)),
        ("replay determinism across thread counts", Box::new(replay_suite)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!("[{}] {:>2}. {name}: {detail} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
