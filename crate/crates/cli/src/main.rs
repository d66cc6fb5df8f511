//! Batch front-end: subcommand dispatch, config-file defaults, deterministic
//! JSON/CSV report emission.
//!
//! Exit codes: 0 success, 1 configuration error, 2 infeasible instance or
//! solver failure.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use mot_hedge::discretize::{crossing_times, embed_from, snap_gaps};
use mot_hedge::hedging::{check_superreplication_with_slack, lift_tree_hedge};
use mot_hedge::lifting::{compute_thresholds, extract_conditionals, simulate_lift, verify_identity};
use mot_hedge::marginals::{project_marginal, read_marginal_csv, GridMarginal};
use mot_hedge::lp::LpStatus;
use mot_hedge::mot::{
    build_tree, dual_lp, primal_lp, refine_experiment, verify_measure, MarginalMode,
    TreeConfig, TreeMeasure,
};
use mot_hedge::paths::{read_paths_csv, write_grid_csv};
use mot_hedge::payoffs::{Claim, ClaimKind};
use mot_hedge::rng::RNG_ALGORITHM;
use mot_hedge::MotError;

#[derive(Parser)]
#[command(name = "mot-hedge", version, about = "Robust hedging toolkit")]
struct Cli {
    /// Key=value config file; command-line flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Include wall-clock timings in reports (breaks byte-stability).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed sampled paths into the grid path class.
    Discretize(DiscretizeArgs),
    /// Solve the primal transport problem (upper price bound).
    Price(SolveArgs),
    /// Solve the dual problem and export the hedge certificate.
    Hedge(SolveArgs),
    /// Check a lifted hedge certificate pathwise on sampled paths.
    VerifyHedge(VerifyHedgeArgs),
    /// Simulate a tree measure on a Gaussian driver and test the fit.
    Lift(LiftArgs),
    /// Solve both sides and report the duality gap.
    DualitySuite(SolveArgs),
    /// Run a refinement schedule and emit a CSV table.
    Report(ReportArgs),
}

#[derive(Args)]
struct DiscretizeArgs {
    /// Input paths CSV (`t,value` rows; `t = 0` starts a new path).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Crossing resolution.
    #[arg(long = "N")]
    n: Option<u32>,
    /// Output grid CSV (one header block per path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional JSON diagnostics (crossing counts, snap errors).
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolveArgs {
    /// Claim: vanilla | lookback | asian | lookback-put.
    #[arg(long)]
    claim: Option<String>,
    /// Strike for vanilla / lookback-put.
    #[arg(long = "K")]
    strike: Option<f64>,
    /// Discount rate.
    #[arg(long)]
    rate: Option<f64>,
    /// Marginal CSV (`x,weight` or `x,density` rows).
    #[arg(long)]
    marginal: Option<PathBuf>,
    /// Moment exponent p > 1 declared for the marginal.
    #[arg(long)]
    p: Option<f64>,
    /// Crossing resolution.
    #[arg(long = "N")]
    n: Option<u32>,
    /// Maximum jumps in the tree.
    #[arg(long)]
    m: Option<usize>,
    /// Gap menu size per depth.
    #[arg(long = "J")]
    j: Option<usize>,
    /// Price cap B.
    #[arg(long = "B")]
    b: Option<f64>,
    /// Marginal mode: exact | band.
    #[arg(long)]
    mode: Option<String>,
    /// Band width parameter for mode band.
    #[arg(long)]
    kappa: Option<f64>,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Certificate JSON path (hedge subcommand).
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Optimal-measure JSON path (price subcommand), consumable by `lift`.
    #[arg(long)]
    measure_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyHedgeArgs {
    /// Certificate JSON produced by `hedge`.
    #[arg(long)]
    portfolio: Option<PathBuf>,
    /// Paths CSV to check against.
    #[arg(long)]
    paths: Option<PathBuf>,
    /// Claim: vanilla | lookback | asian | lookback-put.
    #[arg(long)]
    claim: Option<String>,
    #[arg(long = "K")]
    strike: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    /// Pathwise slack added to the claim side, in units of `‖S‖/N`.
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LiftArgs {
    /// Measure JSON: tree config plus stop masses.
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Schedule CSV with `N,m,J` rows.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long)]
    claim: Option<String>,
    #[arg(long = "K")]
    strike: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    marginal: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                MotError::Solver(_) => 2,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}

/// Key=value config file; `#` starts a comment.
fn load_config(path: &Option<PathBuf>) -> Result<BTreeMap<String, String>, MotError> {
    let mut map = BTreeMap::new();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| {
            MotError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        for line in text.lines() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| MotError::config(format!("bad config line: {line}")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(map)
}

fn fill<T: std::str::FromStr>(
    slot: &mut Option<T>,
    cfg: &BTreeMap<String, String>,
    key: &str,
) -> Result<(), MotError> {
    if slot.is_none() {
        if let Some(raw) = cfg.get(key) {
            *slot = Some(raw.parse().map_err(|_| {
                MotError::config(format!("config key {key}: cannot parse {raw:?}"))
            })?);
        }
    }
    Ok(())
}

fn require<T>(slot: Option<T>, key: &str) -> Result<T, MotError> {
    slot.ok_or_else(|| MotError::config(format!("missing required option --{key}")))
}

fn open_input(path: &Path) -> Result<BufReader<File>, MotError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| MotError::config(format!("cannot open {}: {e}", path.display())))
}

fn parse_claim(name: &str, strike: Option<f64>, rate: f64) -> Result<Claim, MotError> {
    let kind = match name {
        "vanilla" => ClaimKind::VanillaCall {
            strike: require(strike, "K")?,
        },
        "lookback" => ClaimKind::LookbackMax,
        "asian" => ClaimKind::AsianAverage,
        "lookback-put" => ClaimKind::LookbackPutOnMax {
            strike: require(strike, "K")?,
        },
        other => {
            return Err(MotError::config(format!(
                "unknown claim {other:?}; expected vanilla | lookback | asian | lookback-put"
            )))
        }
    };
    Ok(Claim::new(kind).with_rate(rate))
}

fn status_json(status: &LpStatus) -> Value {
    match status {
        LpStatus::Optimal => json!("optimal"),
        LpStatus::Infeasible => json!("infeasible"),
        LpStatus::Unbounded => json!("unbounded"),
        LpStatus::SolverFailure(msg) => json!({ "solver-failure": msg }),
    }
}

fn require_optimal(status: &LpStatus, side: &str) -> Result<(), MotError> {
    if *status == LpStatus::Optimal {
        Ok(())
    } else {
        Err(MotError::Solver(format!("{side} solve ended {status:?}")))
    }
}

fn emit(out: &Option<PathBuf>, report: &Value) -> Result<(), MotError> {
    let text = serde_json::to_string_pretty(report).expect("serializable") + "\n";
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| MotError::config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), MotError> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Discretize(args) => discretize(args, &cfg, cli.timings),
        Command::Price(args) => solve(args, &cfg, cli.timings, Side::Primal),
        Command::Hedge(args) => solve(args, &cfg, cli.timings, Side::Dual),
        Command::DualitySuite(args) => solve(args, &cfg, cli.timings, Side::Both),
        Command::VerifyHedge(args) => verify_hedge(args, &cfg, cli.timings),
        Command::Lift(args) => lift(args, &cfg, cli.timings),
        Command::Report(args) => report(args, &cfg),
    }
}

fn discretize(
    mut args: DiscretizeArgs,
    cfg: &BTreeMap<String, String>,
    timings: bool,
) -> Result<(), MotError> {
    fill(&mut args.input, cfg, "input")?;
    fill(&mut args.n, cfg, "N")?;
    fill(&mut args.out, cfg, "out")?;
    fill(&mut args.diagnostics, cfg, "diagnostics")?;
    let input = require(args.input, "input")?;
    let n = require(args.n, "N")?;
    let out = require(args.out, "out")?;

    let started = Instant::now();
    let paths = read_paths_csv(open_input(&input)?)?;
    let mut grid_text = Vec::new();
    let mut crossings = Vec::new();
    let mut snap_errors = Vec::new();
    for s in &paths {
        let dec = crossing_times(s, n)?;
        let snapped = snap_gaps(&dec)?;
        let grid = embed_from(&dec, &snapped)?;
        write_grid_csv(&mut grid_text, &grid)?;
        crossings.push(dec.h);
        let err: f64 = (1..dec.h)
            .map(|k| (dec.taus[k] - dec.taus[k - 1]) - snapped.deltas[k - 1])
            .sum();
        snap_errors.push(err);
    }
    std::fs::write(&out, grid_text)
        .map_err(|e| MotError::config(format!("cannot write {}: {e}", out.display())))?;

    if let Some(diag) = &args.diagnostics {
        let mut report = json!({
            "command": "discretize",
            "inputs": { "input": input.display().to_string(), "N": n },
            "paths": paths.len(),
            "crossings": crossings,
            "snap_error_sums": snap_errors,
            "snap_error_bound": 1.0 / n as f64,
            "version": env!("CARGO_PKG_VERSION"),
        });
        if timings {
            report["timings"] = json!({ "total_s": started.elapsed().as_secs_f64() });
        }
        emit(&Some(diag.clone()), &report)?;
    }
    Ok(())
}

enum Side {
    Primal,
    Dual,
    Both,
}

fn load_projected(
    marginal: &Path,
    p: f64,
    n: u32,
) -> Result<(GridMarginal, f64), MotError> {
    let mu = read_marginal_csv(open_input(marginal)?, p)?;
    let nu = project_marginal(&mu, n)?;
    Ok((nu, mu.mean()))
}

fn solve(
    mut args: SolveArgs,
    cfg: &BTreeMap<String, String>,
    timings: bool,
    side: Side,
) -> Result<(), MotError> {
    fill(&mut args.claim, cfg, "claim")?;
    fill(&mut args.strike, cfg, "K")?;
    fill(&mut args.rate, cfg, "rate")?;
    fill(&mut args.marginal, cfg, "marginal")?;
    fill(&mut args.p, cfg, "p")?;
    fill(&mut args.n, cfg, "N")?;
    fill(&mut args.m, cfg, "m")?;
    fill(&mut args.j, cfg, "J")?;
    fill(&mut args.b, cfg, "B")?;
    fill(&mut args.mode, cfg, "mode")?;
    fill(&mut args.kappa, cfg, "kappa")?;
    fill(&mut args.out, cfg, "out")?;
    fill(&mut args.certificate, cfg, "certificate")?;
    fill(&mut args.measure_out, cfg, "measure-out")?;

    let claim_name = require(args.claim, "claim")?;
    let claim = parse_claim(&claim_name, args.strike, args.rate.unwrap_or(0.0))?;
    let marginal = require(args.marginal, "marginal")?;
    let n = require(args.n, "N")?;
    let m = require(args.m, "m")?;
    let j = args.j.unwrap_or(3);
    let p = args.p.unwrap_or(2.0);
    let mode = match args.mode.as_deref() {
        None | Some("exact") => MarginalMode::Exact,
        Some("band") => MarginalMode::Band {
            kappa: args.kappa.unwrap_or(1.0),
        },
        Some(other) => {
            return Err(MotError::config(format!(
                "unknown mode {other:?}; expected exact | band"
            )))
        }
    };

    let started = Instant::now();
    let (nu, mean) = load_projected(&marginal, p, n)?;
    let mut tc = TreeConfig::new(n, m).with_menu(j);
    if let Some(b) = args.b {
        tc = tc.with_cap(b);
    }
    let tree = build_tree(&tc)?;

    let mut report = json!({
        "inputs": {
            "claim": claim_name,
            "K": args.strike,
            "rate": args.rate.unwrap_or(0.0),
            "marginal": marginal.display().to_string(),
            "marginal_mean": mean,
            "p": p,
            "N": n,
            "m": m,
            "J": j,
            "B": tree.price_cap,
            "mode": args.mode.as_deref().unwrap_or("exact"),
            "kappa": args.kappa,
        },
        "tree": { "nodes": tree.nodes.len(), "states": tree.num_states() },
        "tolerances": {
            "duality_gap_rel": 1e-8,
            "lp_residual": 1e-9,
            "measure_check": 1e-9,
        },
        "rng": { "algorithm": RNG_ALGORITHM },
        "version": env!("CARGO_PKG_VERSION"),
    });

    match side {
        Side::Primal => {
            let sol = primal_lp(&tree, &claim, &nu, mode)?;
            require_optimal(&sol.status, "primal")?;
            let check = verify_measure(&tree, sol.measure.as_ref().unwrap(), &nu)?;
            report["command"] = json!("price");
            report["status"] = status_json(&sol.status);
            report["value"] = json!(sol.value);
            report["residuals"] = json!({
                "lp": sol.max_residual,
                "measure_mass": check.mass_residual,
                "measure_balance": check.worst_balance,
                "terminal_l1": check.terminal_l1,
            });
            if let Some(path) = &args.measure_out {
                let payload = json!({
                    "N": n, "m": m, "J": j, "B": tree.price_cap,
                    "masses": sol.measure.as_ref().unwrap().masses,
                });
                emit(&Some(path.clone()), &payload)?;
                report["measure_path"] = json!(path.display().to_string());
            }
        }
        Side::Dual => {
            let sol = dual_lp(&tree, &claim, &nu)?;
            require_optimal(&sol.status, "dual")?;
            let cert = sol.certificate.as_ref().unwrap();
            report["command"] = json!("hedge");
            report["status"] = status_json(&sol.status);
            report["value"] = json!(sol.value);
            report["residuals"] = json!({ "lp": sol.max_residual });
            if let Some(path) = &args.certificate {
                let payload = json!({
                    "N": n, "m": m, "J": j, "B": tree.price_cap,
                    "horizon": tree.horizon,
                    "h": cert.h,
                    "positions": cert.positions,
                    "bound_m": 10.0 * (1.0 + cert.h.iter().fold(0.0f64, |a, &x| a.max(x.abs()))),
                    "exponent_p": p,
                });
                emit(&Some(path.clone()), &payload)?;
                report["certificate_path"] = json!(path.display().to_string());
            }
        }
        Side::Both => {
            let primal = primal_lp(&tree, &claim, &nu, mode)?;
            let dual = dual_lp(&tree, &claim, &nu)?;
            require_optimal(&primal.status, "primal")?;
            require_optimal(&dual.status, "dual")?;
            // weak duality is a hard invariant of the formulation
            assert!(
                dual.value >= primal.value - 1e-8 * (1.0 + primal.value.abs()),
                "weak duality violated: primal {} > dual {}",
                primal.value,
                dual.value
            );
            report["command"] = json!("duality-suite");
            report["status"] = json!({
                "primal": status_json(&primal.status),
                "dual": status_json(&dual.status),
            });
            report["primal"] = json!(primal.value);
            report["dual"] = json!(dual.value);
            report["gap"] = json!(dual.value - primal.value);
            report["residuals"] = json!({
                "primal_lp": primal.max_residual,
                "dual_lp": dual.max_residual,
            });
        }
    }
    if timings {
        report["timings"] = json!({ "total_s": started.elapsed().as_secs_f64() });
    }
    emit(&args.out, &report)
}

fn verify_hedge(
    mut args: VerifyHedgeArgs,
    cfg: &BTreeMap<String, String>,
    timings: bool,
) -> Result<(), MotError> {
    fill(&mut args.portfolio, cfg, "portfolio")?;
    fill(&mut args.paths, cfg, "paths")?;
    fill(&mut args.claim, cfg, "claim")?;
    fill(&mut args.strike, cfg, "K")?;
    fill(&mut args.rate, cfg, "rate")?;
    fill(&mut args.slack, cfg, "slack")?;
    fill(&mut args.out, cfg, "out")?;
    let portfolio = require(args.portfolio, "portfolio")?;
    let paths_file = require(args.paths, "paths")?;
    let claim_name = require(args.claim, "claim")?;
    let claim = parse_claim(&claim_name, args.strike, args.rate.unwrap_or(0.0))?;

    let started = Instant::now();
    let text = std::fs::read_to_string(&portfolio)
        .map_err(|e| MotError::config(format!("cannot read {}: {e}", portfolio.display())))?;
    let payload: Value = serde_json::from_str(&text)
        .map_err(|e| MotError::config(format!("bad certificate JSON: {e}")))?;
    let get = |key: &str| -> Result<&Value, MotError> {
        payload
            .get(key)
            .ok_or_else(|| MotError::config(format!("certificate missing {key:?}")))
    };
    let n = get("N")?.as_u64().unwrap_or(0) as u32;
    let m = get("m")?.as_u64().unwrap_or(0) as usize;
    let j = get("J")?.as_u64().unwrap_or(0) as usize;
    let b = get("B")?.as_f64().unwrap_or(0.0);
    let h: Vec<f64> = serde_json::from_value(get("h")?.clone())
        .map_err(|e| MotError::config(format!("bad h: {e}")))?;
    let positions: Vec<f64> = serde_json::from_value(get("positions")?.clone())
        .map_err(|e| MotError::config(format!("bad positions: {e}")))?;
    let bound_m = get("bound_m")?.as_f64().unwrap_or(0.0);
    let exponent_p = get("exponent_p")?.as_f64().unwrap_or(2.0);

    let tree = build_tree(&TreeConfig::new(n, m).with_menu(j).with_cap(b))?;
    let pi = lift_tree_hedge(&tree, &h, &positions, bound_m, exponent_p)?;
    let paths = read_paths_csv(open_input(&paths_file)?)?;
    // the lift carries an O(1/N) discretization cost: compare against the
    // claim reduced by slack·‖S‖/N
    let slack = args.slack.unwrap_or(0.0);
    let check = check_superreplication_with_slack(&pi, &claim, &paths, slack)?;
    let mut report = json!({
        "command": "verify-hedge",
        "inputs": {
            "portfolio": portfolio.display().to_string(),
            "paths": paths_file.display().to_string(),
            "claim": claim_name,
            "K": args.strike,
            "slack": slack,
        },
        "paths": paths.len(),
        "min_margin": check.min_margin,
        "violations": check.violations,
        "admissibility_violations": check.admissibility_violations,
        "tolerances": { "pathwise": 1e-9 },
        "version": env!("CARGO_PKG_VERSION"),
    });
    if timings {
        report["timings"] = json!({ "total_s": started.elapsed().as_secs_f64() });
    }
    emit(&args.out, &report)
}

fn lift(
    mut args: LiftArgs,
    cfg: &BTreeMap<String, String>,
    timings: bool,
) -> Result<(), MotError> {
    fill(&mut args.measure, cfg, "measure")?;
    fill(&mut args.samples, cfg, "samples")?;
    fill(&mut args.seed, cfg, "seed")?;
    fill(&mut args.out, cfg, "out")?;
    let measure = require(args.measure, "measure")?;
    let n_samples = args.samples.unwrap_or(100_000);
    let seed = args.seed.unwrap_or(42);

    let started = Instant::now();
    let text = std::fs::read_to_string(&measure)
        .map_err(|e| MotError::config(format!("cannot read {}: {e}", measure.display())))?;
    let payload: Value = serde_json::from_str(&text)
        .map_err(|e| MotError::config(format!("bad measure JSON: {e}")))?;
    let n = payload["N"].as_u64().unwrap_or(0) as u32;
    let m = payload["m"].as_u64().unwrap_or(0) as usize;
    let j = payload["J"].as_u64().unwrap_or(0) as usize;
    let masses: Vec<f64> = serde_json::from_value(payload["masses"].clone())
        .map_err(|e| MotError::config(format!("bad masses: {e}")))?;
    let mut tc = TreeConfig::new(n, m).with_menu(j);
    if let Some(b) = payload["B"].as_f64() {
        tc = tc.with_cap(b);
    }
    let tree = build_tree(&tc)?;
    let q = TreeMeasure { masses };

    let tables = extract_conditionals(&tree, &q)?;
    let thresholds = compute_thresholds(&tables)?;
    let samples = simulate_lift(&tree, &thresholds, n_samples, seed)?;
    let fit = verify_identity(&samples, &tree, &q)?;
    let mut report = json!({
        "command": "lift",
        "inputs": {
            "measure": measure.display().to_string(),
            "samples": n_samples,
            "seed": seed,
            "N": n, "m": m, "J": j,
        },
        "chi_square": {
            "statistic": fit.statistic,
            "degrees_of_freedom": fit.degrees_of_freedom,
            "p_value": fit.p_value,
            "cells": fit.cells,
            "pooled": fit.pooled,
        },
        "z_max_error": fit.z_max_error,
        "tail_count": fit.tail_count,
        "tolerances": { "z_identity": 1e-12, "p_value_floor": 0.001 },
        "rng": { "algorithm": RNG_ALGORITHM, "seed": seed },
        "version": env!("CARGO_PKG_VERSION"),
    });
    if timings {
        report["timings"] = json!({ "total_s": started.elapsed().as_secs_f64() });
    }
    emit(&args.out, &report)
}

fn report(mut args: ReportArgs, cfg: &BTreeMap<String, String>) -> Result<(), MotError> {
    fill(&mut args.schedule, cfg, "schedule")?;
    fill(&mut args.claim, cfg, "claim")?;
    fill(&mut args.strike, cfg, "K")?;
    fill(&mut args.rate, cfg, "rate")?;
    fill(&mut args.marginal, cfg, "marginal")?;
    fill(&mut args.p, cfg, "p")?;
    fill(&mut args.out, cfg, "out")?;
    let schedule_file = require(args.schedule, "schedule")?;
    let claim_name = require(args.claim, "claim")?;
    let claim = parse_claim(&claim_name, args.strike, args.rate.unwrap_or(0.0))?;
    let marginal = require(args.marginal, "marginal")?;
    let out = require(args.out, "out")?;

    let mu = read_marginal_csv(open_input(&marginal)?, args.p.unwrap_or(2.0))?;
    let text = std::fs::read_to_string(&schedule_file)
        .map_err(|e| MotError::config(format!("cannot read {}: {e}", schedule_file.display())))?;
    let mut schedule = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') || line.starts_with('N') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(MotError::config(format!("bad schedule row: {line}")));
        }
        let n: u32 = parts[0]
            .parse()
            .map_err(|_| MotError::config(format!("bad N in schedule: {line}")))?;
        let m: usize = parts[1]
            .parse()
            .map_err(|_| MotError::config(format!("bad m in schedule: {line}")))?;
        let j: usize = parts[2]
            .parse()
            .map_err(|_| MotError::config(format!("bad J in schedule: {line}")))?;
        schedule.push((n, m, j));
    }
    let rows = refine_experiment(&claim, &mu, &schedule, 1.0)?;
    let mut csv = String::from("N,m,J,primal,dual,gap,primal_status,dual_status\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{:?},{:?}\n",
            r.n, r.max_jumps, r.gap_menu_size, r.primal, r.dual, r.gap, r.primal_status,
            r.dual_status
        ));
    }
    let mut f = File::create(&out)
        .map_err(|e| MotError::config(format!("cannot write {}: {e}", out.display())))?;
    f.write_all(csv.as_bytes())
        .map_err(|e| MotError::config(format!("cannot write {}: {e}", out.display())))?;
    Ok(())
}
