//! Command-line runner for the synchronization-market simulator.
//!
//! Exit codes: 0 on success, 1 on runtime or check failure, 2 on
//! configuration errors.

use syncmarket_cli::{config, output};

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use syncmarket_core::market::sample_scenario;
use syncmarket_core::mechanism::{run_mechanism, MechanismKind};
use syncmarket_core::property_lab::{
    check_adverse_selection, check_individual_rationality, check_strategy_proofness,
    flagged_scenarios, winners_curse_config,
};
use syncmarket_core::simulator::{
    run_experiment, truthful_av_bids, ExperimentPlan, Sweep, SweepVar,
};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "syncmarket",
    about = "Deterministic simulator of a physical-virtual synchronization market",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment sweep and emit per-cell statistics.
    Run(RunArgs),
    /// Run the property checks (strategy-proofness, IR, adverse selection).
    Verify(VerifyArgs),
    /// Clear one sampled scenario and print the full outcome as JSON.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed all randomness derives from.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    parallel: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sweep specification, e.g. "tasks:1..10" or "gscore:0.25,0.5,0.75".
    #[arg(long)]
    sweep: Option<String>,
    /// Seeds per (mechanism, sweep point) cell.
    #[arg(long)]
    seeds: Option<u64>,
    /// Comma-separated mechanisms (mtepvisa, epvisa, pvisa,
    /// first-price-control).
    #[arg(long)]
    mechanisms: Option<String>,
    /// Output format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated checks: strategy-proofness, ir, adverse-selection.
    /// All three when omitted; an empty string runs none.
    #[arg(long)]
    checks: Option<String>,
    /// Mechanism to probe.
    #[arg(long, default_value = "mtepvisa")]
    mechanism: String,
    /// Scenario count for the deviation search.
    #[arg(long, default_value_t = 100)]
    scenarios: u64,
    /// Grid points per deviation sweep.
    #[arg(long, default_value_t = 50)]
    grid: usize,
    /// Profitable-deviation tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Scenario count for the individual-rationality batch.
    #[arg(long, default_value_t = 2000)]
    ir_batch: u64,
    /// Scenario count for the adverse-selection batch.
    #[arg(long, default_value_t = 2000)]
    as_batch: u64,
    /// Report path (JSON lines; stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scenario seed to sample and clear.
    #[arg(long)]
    seed: u64,
    /// Mechanism to clear with.
    #[arg(long, default_value = "mtepvisa")]
    mechanism: String,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => {
            if let Err(e) = install_pool(args.common.parallel) {
                return exit(Err(runtime_err(e)));
            }
            exit(cmd_run(args))
        }
        Command::Verify(args) => {
            if let Err(e) = install_pool(args.common.parallel) {
                return exit(Err(runtime_err(e)));
            }
            exit(cmd_verify(args))
        }
        Command::Inspect(args) => exit(cmd_inspect(args)),
    }
}

fn install_pool(threads: usize) -> Result<(), String> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("cannot size the worker pool: {e}"))
}

fn exit(r: Result<(), (u8, String)>) -> ExitCode {
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn config_err(msg: impl Into<String>) -> (u8, String) {
    (EXIT_CONFIG, msg.into())
}

fn runtime_err(msg: impl Into<String>) -> (u8, String) {
    (EXIT_RUNTIME, msg.into())
}

fn core_err(e: syncmarket_core::Error) -> (u8, String) {
    if e.is_config() {
        config_err(e.to_string())
    } else {
        runtime_err(e.to_string())
    }
}

fn parse_mechanisms(spec: &str) -> Result<Vec<MechanismKind>, (u8, String)> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(MechanismKind::from_str(part).map_err(core_err)?);
    }
    if out.is_empty() {
        return Err(config_err("no mechanisms named"));
    }
    Ok(out)
}

/// Parse "tasks:1..10", "tasks:1,2,5", or "gscore:0.25,0.5,0.75".
fn parse_sweep(spec: &str) -> Result<Sweep, (u8, String)> {
    let (var, rest) = spec
        .split_once(':')
        .ok_or_else(|| config_err(format!("sweep '{spec}' must look like var:values")))?;
    let variable = SweepVar::from_str(var).map_err(core_err)?;
    let values: Vec<f64> = if let Some((lo, hi)) = rest.split_once("..") {
        let lo: i64 = lo
            .trim()
            .parse()
            .map_err(|e| config_err(format!("sweep range start '{lo}': {e}")))?;
        let hi: i64 = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|e| config_err(format!("sweep range end '{hi}': {e}")))?;
        if hi < lo {
            return Err(config_err(format!("sweep range {lo}..{hi} is empty")));
        }
        (lo..=hi).map(|v| v as f64).collect()
    } else {
        rest.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| config_err(format!("sweep value '{s}': {e}"))))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(config_err(format!("sweep '{spec}' names no values")));
    }
    Ok(Sweep { variable, values })
}

fn write_out(path: &Option<PathBuf>, content: &str) -> Result<(), (u8, String)> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| runtime_err(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), (u8, String)> {
    let file = config::load(&args.common.config).map_err(config_err)?;

    let sweep = match (&args.sweep, &file.experiment.sweep) {
        (Some(spec), _) => parse_sweep(spec)?,
        (None, Some(block)) => Sweep {
            variable: SweepVar::from_str(&block.variable).map_err(core_err)?,
            values: block.values.clone(),
        },
        (None, None) => Sweep::none(),
    };
    let mechanisms = match (&args.mechanisms, &file.experiment.mechanisms) {
        (Some(spec), _) => parse_mechanisms(spec)?,
        (None, Some(list)) => parse_mechanisms(&list.join(","))?,
        (None, None) => {
            vec![MechanismKind::Mtepvisa, MechanismKind::Epvisa, MechanismKind::Pvisa]
        }
    };

    let plan = ExperimentPlan {
        config: file.scenario,
        mechanisms,
        sweep,
        seeds: args.seeds.or(file.experiment.seeds).unwrap_or(100),
        seed_offset: 0,
        master_seed: args.common.master_seed.or(file.experiment.master_seed).unwrap_or(7),
    };
    let result = run_experiment(&plan).map_err(core_err)?;

    let content = match args.format.as_str() {
        "csv" => output::to_csv(&result),
        _ => {
            let mut s = serde_json::to_string_pretty(&result)
                .map_err(|e| runtime_err(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    write_out(&args.out, &content)
}

#[derive(Serialize)]
struct CheckSummary<'a> {
    check: &'a str,
    pass: bool,
    detail: serde_json::Value,
}

fn cmd_verify(args: VerifyArgs) -> Result<(), (u8, String)> {
    let file = config::load(&args.common.config).map_err(config_err)?;
    let kind = MechanismKind::from_str(&args.mechanism).map_err(core_err)?;
    let master = args.common.master_seed.unwrap_or(7);

    let selected: Vec<&str> = match &args.checks {
        None => vec!["strategy-proofness", "ir", "adverse-selection"],
        Some(list) => list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect(),
    };
    for check in &selected {
        if !matches!(*check, "strategy-proofness" | "ir" | "adverse-selection") {
            return Err(config_err(format!("unknown check '{check}'")));
        }
    }

    let mut lines: Vec<String> = Vec::new();
    let mut all_pass = true;

    for check in &selected {
        match *check {
            "strategy-proofness" => {
                let reports = check_strategy_proofness(
                    kind,
                    &file.scenario,
                    args.scenarios,
                    master,
                    args.grid,
                )
                .map_err(core_err)?;
                for r in reports.iter().filter(|r| r.flagged(args.tolerance)) {
                    lines.push(serde_json::to_string(r).unwrap());
                }
                let flagged = flagged_scenarios(&reports, args.tolerance);
                let pass = flagged == 0;
                all_pass &= pass;
                lines.push(
                    serde_json::to_string(&CheckSummary {
                        check: "strategy-proofness",
                        pass,
                        detail: serde_json::json!({
                            "mechanism": kind.as_str(),
                            "scenarios": args.scenarios,
                            "grid": args.grid,
                            "tolerance": args.tolerance,
                            "flagged_scenarios": flagged,
                        }),
                    })
                    .unwrap(),
                );
            }
            "ir" => {
                let summary =
                    check_individual_rationality(kind, &file.scenario, args.ir_batch, master)
                        .map_err(core_err)?;
                let pass = summary.violations == 0;
                all_pass &= pass;
                lines.push(
                    serde_json::to_string(&CheckSummary {
                        check: "ir",
                        pass,
                        detail: serde_json::to_value(&summary).unwrap(),
                    })
                    .unwrap(),
                );
            }
            "adverse-selection" => {
                let cfg = winners_curse_config(&file.scenario);
                let summary = check_adverse_selection(&cfg, args.as_batch, master)
                    .map_err(core_err)?;
                let pass = summary.adverse_selection_free;
                all_pass &= pass;
                lines.push(
                    serde_json::to_string(&CheckSummary {
                        check: "adverse-selection",
                        pass,
                        detail: serde_json::to_value(&summary).unwrap(),
                    })
                    .unwrap(),
                );
            }
            _ => unreachable!(),
        }
    }

    let mut content = lines.join("\n");
    if !content.is_empty() {
        content.push('\n');
    }
    write_out(&args.out, &content)?;

    if all_pass {
        Ok(())
    } else {
        Err(runtime_err("one or more checks failed (see report)"))
    }
}

#[derive(Serialize)]
struct InspectReport {
    seed: u64,
    mechanism: String,
    counts: serde_json::Value,
    gamma: f64,
    score_board: syncmarket_core::ScoreBoard,
    outcome: syncmarket_core::AuctionOutcome,
}

fn cmd_inspect(args: InspectArgs) -> Result<(), (u8, String)> {
    let file = config::load(&args.common.config).map_err(config_err)?;
    let kind = MechanismKind::from_str(&args.mechanism).map_err(core_err)?;
    let scenario = sample_scenario(&file.scenario, args.seed).map_err(core_err)?;
    let bids = truthful_av_bids(&scenario);
    let (outcome, score_board) = run_mechanism(kind, &scenario, &bids)
        .map_err(|e| runtime_err(format!("seed {}: {e}", args.seed)))?;

    let report = InspectReport {
        seed: args.seed,
        mechanism: kind.as_str().to_string(),
        counts: serde_json::json!({
            "avs": scenario.avs.len(),
            "mars": scenario.mars.len(),
            "rsus": scenario.rsus.len(),
            "tasks_per_av": scenario.avs[0].tasks.len(),
        }),
        gamma: scenario.gamma,
        score_board,
        outcome,
    };
    let mut text =
        serde_json::to_string_pretty(&report).map_err(|e| runtime_err(e.to_string()))?;
    text.push('\n');
    print!("{text}");
    Ok(())
}
