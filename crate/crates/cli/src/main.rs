//! `tsplan`: solve, inspect and generate transmission switching cases.
//!
//! Exit codes: 0 success, 1 solve failure or failed cross-check, 2 bad
//! command line, 3 invalid case file, 4 I/O error.

use std::fmt;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tsplan::case::{generate_case, parse_case, CaseError, CaseFile, GenSpec};
use tsplan::experiment::{compare_all, run_regime, Regime};
use tsplan::milp::{PlanningConfig, SwitchingBudgets};
use tsplan::network::{Network, Topology};
use tsplan::report::{CaseInfo, ComparisonReport, RunReport};
use tsplan::sensitivity::SensitivitySet;

#[derive(Parser)]
#[command(
    name = "tsplan",
    version,
    about = "Multi-hour transmission switching planner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a case under one regime, or all of them with cross-checks.
    Solve(SolveArgs),
    /// Distribution factors of a topology.
    Sensitivity(SensitivityArgs),
    /// Write a seeded synthetic case.
    Gen(GenArgs),
    /// Parse and check a case file.
    Validate { case: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Baseline,
    Classic,
    Constrained,
    Reduced,
    CompareAll,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    case: PathBuf,
    #[arg(long, value_enum, default_value = "reduced")]
    regime: RegimeArg,
    /// Solve only the first T blocks.
    #[arg(long = "horizon", value_name = "T")]
    horizon: Option<usize>,
    /// Per-line operation budget, the same for every line.
    #[arg(long)]
    h1: Option<i64>,
    /// Network-wide operation budget, the same for every hour.
    #[arg(long)]
    h2: Option<i64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    overload_threshold: Option<f64>,
    /// Charge switching costs only when a line opens.
    #[arg(long)]
    opening_only: bool,
    #[arg(long)]
    mip_gap: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Seconds; results under a time limit may differ between runs.
    #[arg(long, env = "TSPLAN_TIME_LIMIT")]
    time_limit: Option<f64>,
    /// Include wall-clock times (makes output non-reproducible).
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SensitivityArgs {
    case: PathBuf,
    /// Line ids to open before computing the factors.
    #[arg(long, value_delimiter = ',')]
    open: Vec<usize>,
    /// Monitored line ids; every closed line by default.
    #[arg(long, value_delimiter = ',')]
    monitored: Vec<usize>,
    /// Outaged line ids; every closed line by default.
    #[arg(long, value_delimiter = ',')]
    candidates: Vec<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    buses: usize,
    #[arg(long)]
    lines: usize,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value_t = 0.3)]
    congestion: f64,
    #[arg(long, default_value_t = 2)]
    h1: i64,
    #[arg(long, default_value_t = 4)]
    h2: i64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Range of per-operation switching costs, `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [2.0, 20.0])]
    switch_cost: Vec<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing output file.
    #[arg(long)]
    force: bool,
}

/// A bad option value that clap cannot see, such as an unknown line id.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// The process outcome of a command that ran to completion.
enum Outcome {
    Done,
    ChecksFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Sensitivity(args) => sensitivity(args),
        Command::Gen(args) => gen(args),
        Command::Validate { case } => validate(&case),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => {
            eprintln!("tsplan: cross-checks failed");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("tsplan: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if cause.is::<CaseError>() || matches!(cause.downcast_ref(), Some(tsplan::Error::Case(_))) {
            return 3;
        }
        if cause.is::<io::Error>() {
            return 4;
        }
    }
    1
}

fn load(path: &Path) -> Result<CaseFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_case(&text).with_context(|| format!("invalid case {}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("cannot write to stdout"),
    }
}

fn planning_config(args: &SolveArgs, case: &CaseFile) -> Result<PlanningConfig> {
    let mut config = case.config()?;
    let (n_lines, horizon) = (case.lines.len(), config.horizon);
    if args.h1.is_some() || args.h2.is_some() {
        let budgets = config.budgets.get_or_insert_with(|| SwitchingBudgets {
            per_line: vec![horizon as i64; n_lines],
            per_hour: vec![n_lines as i64; horizon],
        });
        if let Some(h1) = args.h1 {
            budgets.per_line = vec![h1; n_lines];
        }
        if let Some(h2) = args.h2 {
            budgets.per_hour = vec![h2; horizon];
        }
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(threshold) = args.overload_threshold {
        config.overload_threshold = threshold;
    }
    if args.opening_only {
        config.charge_both_directions = false;
    }
    if let Some(gap) = args.mip_gap {
        config.limits.mip_gap = gap;
    }
    if let Some(nodes) = args.node_limit {
        config.limits.node_limit = Some(nodes);
    }
    if let Some(secs) = args.time_limit {
        let limit = Duration::try_from_secs_f64(secs)
            .map_err(|_| usage(format!("time limit {secs} is not a valid duration")))?;
        config.limits.time_limit = Some(limit);
    }
    Ok(config)
}

fn solve(args: SolveArgs) -> Result<Outcome> {
    let mut case = load(&args.case)?;
    if let Some(t) = args.horizon {
        if t == 0 || t > case.horizon {
            return Err(usage(format!("--horizon must lie in 1..={}", case.horizon)));
        }
        case = case.truncated(t)?;
    }
    let network = case.network()?;
    let demand = case.demand();
    let config = planning_config(&args, &case)?;
    config
        .validate(&network, &demand)
        .map_err(|e| usage(e.to_string()))?;
    let breakers = case.breakers()?;
    let info = CaseInfo::new(&case, &config);

    let regime = match args.regime {
        RegimeArg::Baseline => Regime::Baseline,
        RegimeArg::Classic => Regime::Classic,
        RegimeArg::Constrained => Regime::Constrained,
        RegimeArg::Reduced => Regime::Reduced,
        RegimeArg::CompareAll => {
            let comparison = compare_all(&network, &demand, &config)?;
            let report =
                ComparisonReport::new(&network, &demand, &comparison, &breakers, args.timings)?;
            let text = match args.output.format {
                Format::Json => info.document(&report),
                Format::Text => format!("{}\n{}", info.to_text(), report.to_text()),
            };
            emit(&args.output.out, &text)?;
            return Ok(if report.all_passed() {
                Outcome::Done
            } else {
                Outcome::ChecksFailed
            });
        }
    };
    let run = run_regime(&network, &demand, &config, regime)?;
    let report = RunReport::new(&network, &demand, &run, &breakers, args.timings)?;
    let text = match args.output.format {
        Format::Json => info.document(&report),
        Format::Text => format!("{}\n{}", info.to_text(), report.to_text()),
    };
    emit(&args.output.out, &text)?;
    Ok(Outcome::Done)
}

fn line_positions(network: &Network, ids: &[usize], what: &str) -> Result<Vec<usize>> {
    ids.iter()
        .map(|&id| {
            network
                .line_position(id)
                .ok_or_else(|| usage(format!("{what}: no line with id {id}")))
        })
        .collect()
}

fn sensitivity(args: SensitivityArgs) -> Result<Outcome> {
    let case = load(&args.case)?;
    let network = case.network()?;
    let mut topology = Topology::initial(&network);
    for l in line_positions(&network, &args.open, "--open")? {
        topology.set(l, false);
    }
    let closed: Vec<usize> = topology.closed_lines().collect();
    let pick = |ids: &[usize], what: &str| -> Result<Vec<usize>> {
        if ids.is_empty() {
            Ok(closed.clone())
        } else {
            line_positions(&network, ids, what)
        }
    };
    let monitored = pick(&args.monitored, "--monitored")?;
    let candidates = pick(&args.candidates, "--candidates")?;
    let set = SensitivitySet::compute(&network, &topology, &monitored, &candidates)
        .map_err(|e| usage(e.to_string()))?;

    let id = |l: usize| network.lines()[l].id;
    let lines: Vec<_> = candidates
        .iter()
        .map(|&c| {
            json!({
                "line": id(c),
                "ptdf_self": set.ptdf_self(c),
                "bridge": set.is_bridge(c),
            })
        })
        .collect();
    let mut lodf = Vec::new();
    for &m in &monitored {
        for &c in &candidates {
            let value = set.lodf(m, c).and_then(Result::ok);
            lodf.push(json!({ "monitored": id(m), "outage": id(c), "lodf": value }));
        }
    }
    let open: Vec<usize> = (0..network.n_lines())
        .filter(|&l| !topology.is_closed(l))
        .map(id)
        .collect();
    let text = match args.output.format {
        Format::Json => {
            let doc = json!({
                "case": case.name,
                "open_lines": open,
                "lines": lines,
                "lodf": lodf,
            });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = format!(
                "open lines: {open:?}\n{:>6} {:>12} {:>7}\n",
                "line", "self PTDF", "bridge"
            );
            for &c in &candidates {
                let own = set.ptdf_self(c).unwrap_or(f64::NAN);
                let bridge = set.is_bridge(c).unwrap_or(false);
                s.push_str(&format!("{:>6} {:>12.6} {:>7}\n", id(c), own, bridge));
            }
            s.push_str(&format!(
                "\n{:>9} {:>7} {:>12}\n",
                "monitored", "outage", "LODF"
            ));
            for &m in &monitored {
                for &c in &candidates {
                    let value = match set.lodf(m, c) {
                        Some(Ok(v)) => format!("{v:.6}"),
                        _ => "bridge".to_string(),
                    };
                    s.push_str(&format!("{:>9} {:>7} {:>12}\n", id(m), id(c), value));
                }
            }
            s
        }
    };
    emit(&args.output.out, &text)?;
    Ok(Outcome::Done)
}

fn gen(args: GenArgs) -> Result<Outcome> {
    let mut spec = GenSpec::new(args.seed, args.buses, args.lines, args.horizon)
        .congestion(args.congestion)
        .budgets(args.h1, args.h2)
        .switch_cost(args.switch_cost[0], args.switch_cost[1]);
    spec.alpha = args.alpha;
    if let Some(nodes) = args.node_limit {
        spec = spec.node_limit(nodes);
    }
    spec.validate().map_err(usage)?;
    if let Some(path) = &args.out {
        if path.exists() && !args.force {
            let err = io::Error::new(io::ErrorKind::AlreadyExists, "use --force to overwrite");
            return Err(err).with_context(|| format!("{} exists", path.display()));
        }
    }
    let case = generate_case(&spec);
    emit(&args.out, &case.to_json())?;
    Ok(Outcome::Done)
}

fn validate(path: &Path) -> Result<Outcome> {
    let case = load(path)?;
    println!(
        "ok: {} ({} buses, {} lines, {} generators, {} blocks)",
        case.name.as_deref().unwrap_or("unnamed case"),
        case.buses.len(),
        case.lines.len(),
        case.generators.len(),
        case.horizon
    );
    Ok(Outcome::Done)
}
