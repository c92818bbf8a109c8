//! `follmer-lab`: exact Föllmer-pair constructions on tree files and
//! reproducible Monte-Carlo experiments.
//!
//! Exit codes: 0 when every check passes, 1 when a verification fails,
//! 2 on usage or validation errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use follmer_core::decompositions::decomposition_report;
use follmer_core::follmer::{
    construct_follmer, nonuniqueness_witness, pair_from_json, pair_to_json, uniqueness_report, verify_ky_all, KyReport, Target,
};
use follmer_core::lattice::io::{load_tree, tree_to_json, TreeFile};
use follmer_core::lattice::{is_supermartingale, DEFAULT_ENUMERATION_CAP};
use follmer_core::mc::{run_manifest, Manifest};
use follmer_core::rational::format_rational;

#[derive(Parser)]
#[command(name = "follmer-lab", version, about = "Föllmer measures of nonnegative supermartingales")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct OutArg {
    /// Directory for report files; without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Clone)]
struct McOverrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long = "grid-step")]
    grid_step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Additive and multiplicative decompositions of the process in a tree file.
    Decompose {
        tree: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Build the Föllmer pair and check it against every stopping time.
    Follmer {
        tree: PathBuf,
        /// `cemetery` or `freeze:<state>`.
        #[arg(long, default_value = "cemetery")]
        target: String,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Check a stored pair file against every stopping time.
    Verify {
        tree: PathBuf,
        pair: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Uniqueness diagnostics for the pair with the given target.
    Uniqueness {
        tree: PathBuf,
        #[arg(long, default_value = "cemetery")]
        target: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Two distinct pairs for the same process: killed and frozen at a state.
    Witness {
        tree: PathBuf,
        state: String,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run an experiment manifest.
    Mc {
        manifest: PathBuf,
        #[command(flatten)]
        overrides: McOverrides,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run a named experiment with its default manifest.
    Gallery {
        name: String,
        #[command(flatten)]
        overrides: McOverrides,
        #[command(flatten)]
        out: OutArg,
    },
    /// Quick end-to-end checks on built-in examples.
    Selftest,
}

/// Marks a failed verification (exit code 1) as opposed to bad input.
#[derive(Debug)]
struct VerificationFailed(String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn threads() -> Result<Option<usize>> {
    match std::env::var("FOLLMER_LAB_THREADS") {
        Ok(s) => {
            let n: usize = s.trim().parse().with_context(|| format!("FOLLMER_LAB_THREADS = {s:?} is not a count"))?;
            if n == 0 {
                bail!("FOLLMER_LAB_THREADS must be at least 1");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn read_tree(path: &Path) -> Result<TreeFile> {
    load_tree(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_target(tree: &TreeFile, s: &str) -> Result<Target> {
    let t = Target::parse(s);
    if let Target::Freeze(x) = &t {
        if !tree.tree.alphabet().iter().any(|a| a == x) {
            bail!("freeze state {x:?} is not in the alphabet {:?}", tree.tree.alphabet());
        }
    }
    Ok(t)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text).with_context(|| format!("writing {name}"))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap() + "\n"
}

/// Manifest for tree commands: the normalized tree is embedded so the run
/// replays without the original file.
fn tree_manifest(command: &str, tree: &TreeFile, extra: Value) -> Value {
    let mut m = json!({
        "command": command,
        "tree": serde_json::from_str::<Value>(&tree_to_json(&tree.tree, tree.z.as_ref())).unwrap(),
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut m, extra) {
        a.extend(b);
    }
    m
}

fn ledger_csv(report: &KyReport) -> Result<String> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn ky_outcome(report: &KyReport) -> Result<()> {
    match report.first_failure() {
        None => Ok(()),
        Some(row) => Err(VerificationFailed(format!(
            "stopping time {} at atom {}: Q side {} but P side {}",
            row.rho_id, row.atom_node, row.lhs, row.rhs
        ))
        .into()),
    }
}

fn ky_summary(report: &KyReport) -> Value {
    json!({
        "ok": report.ok,
        "stopping_times": report.stopping_times,
        "rows": report.rows.len(),
        "first_failure": report.first_failure(),
    })
}

fn cmd_decompose(path: &Path, out: &OutArg) -> Result<()> {
    let tf = read_tree(path)?;
    let report = decomposition_report(&tf.tree, tf.require_z()?)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &out.out {
        Some(dir) => {
            write(dir, "manifest.json", &pretty(&tree_manifest("decompose", &tf, json!({}))))?;
            write(dir, "decomposition.json", &text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_follmer(path: &Path, target: &str, cap: u64, out: &OutArg) -> Result<()> {
    let tf = read_tree(path)?;
    let z = tf.require_z()?;
    let target = parse_target(&tf, target)?;
    if matches!(target, Target::Freeze(_)) && is_supermartingale(&tf.tree, z).is_martingale {
        bail!("a freeze target needs lost mass, but the process is a martingale");
    }
    let pair = construct_follmer(&tf.tree, z, target.clone())?;
    let report = verify_ky_all(&pair, &tf.tree, z, cap)?;
    let pair_json = pair_to_json(&tf.tree, &pair);
    match &out.out {
        Some(dir) => {
            write(dir, "manifest.json", &pretty(&tree_manifest("follmer", &tf, json!({"target": target.label(), "cap": cap}))))?;
            write(dir, "pair.json", &pair_json)?;
            write(dir, "ledger.csv", &ledger_csv(&report)?)?;
            write(dir, "summary.json", &pretty(&ky_summary(&report)))?;
        }
        None => print!(
            "{}",
            pretty(&json!({
                "pair": serde_json::from_str::<Value>(&pair_json)?,
                "killed_mass": format_rational(&pair.killed_mass()),
                "ledger": ky_summary(&report),
            }))
        ),
    }
    ky_outcome(&report)
}

fn cmd_verify(tree: &Path, pair_path: &Path, cap: u64, out: &OutArg) -> Result<()> {
    let tf = read_tree(tree)?;
    let z = tf.require_z()?;
    let text = fs::read_to_string(pair_path).with_context(|| format!("reading {}", pair_path.display()))?;
    let pair = pair_from_json(&tf.tree, &text)?;
    let report = verify_ky_all(&pair, &tf.tree, z, cap)?;
    match &out.out {
        Some(dir) => {
            let pair_value: Value = serde_json::from_str(&text)?;
            write(dir, "manifest.json", &pretty(&tree_manifest("verify", &tf, json!({"pair": pair_value, "cap": cap}))))?;
            write(dir, "ledger.csv", &ledger_csv(&report)?)?;
            write(dir, "summary.json", &pretty(&ky_summary(&report)))?;
        }
        None => print!("{}", pretty(&ky_summary(&report))),
    }
    ky_outcome(&report)
}

fn cmd_uniqueness(path: &Path, target: &str, out: &OutArg) -> Result<()> {
    let tf = read_tree(path)?;
    let z = tf.require_z()?;
    let target = parse_target(&tf, target)?;
    let pair = construct_follmer(&tf.tree, z, target.clone())?;
    let report = uniqueness_report(&tf.tree, z, &pair)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &out.out {
        Some(dir) => {
            write(dir, "manifest.json", &pretty(&tree_manifest("uniqueness", &tf, json!({"target": target.label()}))))?;
            write(dir, "uniqueness.json", &text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_witness(path: &Path, state: &str, cap: u64, out: &OutArg) -> Result<()> {
    let tf = read_tree(path)?;
    let z = tf.require_z()?;
    parse_target(&tf, &format!("freeze:{state}"))?;
    let w = nonuniqueness_witness(&tf.tree, z, state)?;
    let ledgers = [verify_ky_all(&w.cemetery, &tf.tree, z, cap)?, verify_ky_all(&w.frozen, &tf.tree, z, cap)?];
    let summary = json!({
        "state": state,
        "total_variation": format_rational(&w.total_variation),
        "mass_lost": format_rational(&w.cemetery.killed_mass()),
        "cemetery_ledger": ky_summary(&ledgers[0]),
        "frozen_ledger": ky_summary(&ledgers[1]),
    });
    match &out.out {
        Some(dir) => {
            write(dir, "manifest.json", &pretty(&tree_manifest("witness", &tf, json!({"state": state, "cap": cap}))))?;
            write(dir, "pair_cemetery.json", &pair_to_json(&tf.tree, &w.cemetery))?;
            write(dir, "pair_frozen.json", &pair_to_json(&tf.tree, &w.frozen))?;
            write(dir, "summary.json", &pretty(&summary))?;
        }
        None => print!("{}", pretty(&summary)),
    }
    ledgers.iter().try_for_each(ky_outcome)
}

fn apply(m: &mut Manifest, o: &McOverrides) {
    if let Some(s) = o.seed {
        m.seed = s;
    }
    if let Some(n) = o.paths {
        m.n_paths = n;
    }
    if let Some(h) = o.grid_step {
        m.grid.base_step = h;
    }
}

fn run_mc(m: Manifest, out: &OutArg) -> Result<()> {
    let summary = run_manifest(&m, out.out.as_deref(), threads()?)?;
    if out.out.is_none() {
        print!("{}", serde_json::to_string_pretty(&summary)? + "\n");
    }
    for c in &summary.checks {
        eprintln!("{} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    if summary.all_pass {
        Ok(())
    } else {
        let failed: Vec<&str> = summary.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        Err(VerificationFailed(failed.join(", ")).into())
    }
}

fn cmd_mc(path: &Path, o: &McOverrides, out: &OutArg) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut m = Manifest::from_json(&text)?;
    apply(&mut m, o);
    run_mc(m, out)
}

fn cmd_gallery(name: &str, o: &McOverrides, out: &OutArg) -> Result<()> {
    let mut m = Manifest::gallery(name, 0)?;
    apply(&mut m, o);
    run_mc(m, out)
}

fn cmd_selftest() -> Result<()> {
    use follmer_core::fixtures;
    use follmer_core::mc::fatou::in_s;
    let mut failures = Vec::new();
    let mut report = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            failures.push(name.to_string());
        }
    };

    let (tree, z) = fixtures::binary();
    let pair = construct_follmer(&tree, &z, Target::Cemetery)?;
    report("binary_ky_identity", verify_ky_all(&pair, &tree, &z, DEFAULT_ENUMERATION_CAP)?.ok);
    let dec = decomposition_report(&tree, &z)?;
    report("binary_d_mult", dec.nodes.iter().filter(|r| r.depth == 1).all(|r| r.d_mult == "7/8"));
    let (tree, z) = fixtures::zero_hits();
    let pair = construct_follmer(&tree, &z, Target::Cemetery)?;
    report("zero_hits_ky_identity", verify_ky_all(&pair, &tree, &z, DEFAULT_ENUMERATION_CAP)?.ok);
    report("s_set_probes", !in_s(0.5, 20) && in_s(0.125 + 2f64.powi(-10), 20));
    let mut m = Manifest::gallery("exp_decay", 1)?;
    m.n_paths = 20_000;
    report("exp_decay_tail", run_manifest(&m, None, threads()?)?.all_pass);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(VerificationFailed(failures.join(", ")).into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Decompose { tree, out } => cmd_decompose(tree, out),
        Command::Follmer { tree, target, cap, out } => cmd_follmer(tree, target, *cap, out),
        Command::Verify { tree, pair, cap, out } => cmd_verify(tree, pair, *cap, out),
        Command::Uniqueness { tree, target, out } => cmd_uniqueness(tree, target, out),
        Command::Witness { tree, state, cap, out } => cmd_witness(tree, state, *cap, out),
        Command::Mc { manifest, overrides, out } => cmd_mc(manifest, overrides, out),
        Command::Gallery { name, overrides, out } => cmd_gallery(name, overrides, out),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<VerificationFailed>() => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
