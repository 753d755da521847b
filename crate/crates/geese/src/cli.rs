//! `geese plan|simulate|catalog|serve`.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use geese_core::catalog::{parse_json, Catalog};
use geese_core::exec::ExecMode;
use geese_core::perf_models::{Regime, Role};
use geese_core::planner::{build_model, cross_check, plan, Certificate, OracleCheck, OracleStatus, Plan, SolveOutcome};
use geese_core::simulator::{run_monte_carlo, simulate_collaborative, simulate_delivery, CollabConfig, SimReport};

use crate::scenario::{catalog_from, load_scenario, CollabSection};

const EXIT_ERROR: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "geese", version, about = "Plan and simulate cloudlet delivery by UAV")]
pub struct Cli {
    /// Catalog file (overrides the scenario's own catalog).
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Seed for simulations (overrides the scenario's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cross-check plans against the exhaustive oracle.
    #[arg(long, global = true)]
    pub verify: bool,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario and print the plan (exit 0 optimal, 2 infeasible).
    Plan { scenario: PathBuf },
    /// Run a collaborative-processing or delivery simulation.
    Simulate(SimulateArgs),
    /// Print the catalog in use.
    Catalog,
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long, env = "GEESE_STATE_DIR", default_value = "geese-state")]
        state_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["collab", "delivery"]))]
pub struct SimulateArgs {
    /// Scenario file (required for --delivery).
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub collab: bool,
    #[arg(long)]
    pub delivery: bool,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    #[arg(long, value_enum)]
    pub role: Option<RoleArg>,
    #[arg(long)]
    pub jobs: Option<u32>,
    #[arg(long)]
    pub workers: Option<u32>,
    /// Base work per job in ms.
    #[arg(long)]
    pub work_ms: Option<f64>,
    /// Monte Carlo repetitions.
    #[arg(long)]
    pub reps: Option<u32>,
    /// Plan document written by `geese plan`.
    #[arg(long, conflicts_with = "plan_inline")]
    pub plan: Option<PathBuf>,
    /// Plan document given inline.
    #[arg(long)]
    pub plan_inline: Option<String>,
    /// Write the per-job (or per-repetition) CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Surface,
    EncasedDry,
    Depth1,
    Depth2,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Surface => Regime::Surface,
            RegimeArg::EncasedDry => Regime::EncasedDry,
            RegimeArg::Depth1 => Regime::Depth1,
            RegimeArg::Depth2 => Regime::Depth2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Master,
    Workers,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Master => Role::Master,
            RoleArg::Workers => Role::Workers,
        }
    }
}

const DEFAULT_WORKERS: u32 = 3;
const DEFAULT_JOBS: u32 = 50;
const DEFAULT_WORK_MS: f64 = 100.0;

/// Parses the process arguments and runs the command.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let mut out = std::io::stdout().lock();
    match run(&cli, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.downcast_ref::<UsageError>().map_or(EXIT_ERROR, |_| EXIT_USAGE))
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(String);

/// Runs `cli`, writing documents to `out`; returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Plan { scenario } => cmd_plan(cli, scenario, out),
        Command::Simulate(args) => cmd_simulate(cli, args, out),
        Command::Catalog => {
            let cat = catalog_from(cli.catalog.as_deref())?;
            match cli.format {
                Format::Json => writeln!(out, "{}", cat.to_json())?,
                Format::Csv => out.write_all(catalog_csv(&cat)?.as_bytes())?,
            }
            Ok(0)
        }
        Command::Serve { bind, state_dir } => {
            let cat = catalog_from(cli.catalog.as_deref())?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::service::serve(*bind, cat, state_dir))?;
            Ok(0)
        }
    }
}

fn cmd_plan(cli: &Cli, path: &Path, out: &mut dyn Write) -> anyhow::Result<u8> {
    let sc = load_scenario(path, cli.catalog.as_deref())?;
    let request = &sc.file.request;
    let outcome = plan(request, &sc.catalog)?;
    let mut code = match outcome.certificate() {
        Certificate::Optimal => 0,
        Certificate::Infeasible => EXIT_INFEASIBLE,
    };
    match (cli.verify, cli.format) {
        (false, Format::Json) => out.write_all(outcome.to_canonical_json().as_bytes())?,
        (false, Format::Csv) => out.write_all(plan_csv(&outcome)?.as_bytes())?,
        (true, format) => {
            let check = match build_model(request, &sc.catalog) {
                Ok(model) => Some(cross_check(&model, &outcome, ExecMode::default())),
                // no pairing at all: nothing for the oracle to enumerate
                Err(_) => None,
            };
            if check.as_ref().is_some_and(|c| c.status == OracleStatus::Mismatch) {
                code = EXIT_ERROR;
            }
            match format {
                Format::Json => {
                    let doc = Verified {
                        plan: &outcome,
                        oracle: check.as_ref(),
                    };
                    let mut s = serde_json::to_string_pretty(&doc)?;
                    s.push('\n');
                    out.write_all(s.as_bytes())?;
                }
                Format::Csv => {
                    out.write_all(plan_csv(&outcome)?.as_bytes())?;
                    if let Some(c) = &check {
                        eprintln!("oracle: {}", serde_json::to_string(c)?);
                    }
                }
            }
        }
    }
    Ok(code)
}

/// `plan --verify` document; keeps the plan's own key order.
#[derive(serde::Serialize)]
struct Verified<'a> {
    plan: &'a SolveOutcome,
    oracle: Option<&'a OracleCheck>,
}

fn plan_csv(outcome: &SolveOutcome) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "uav",
        "cloudlet",
        "modality",
        "count",
        "unit_cost",
        "unit_capacity",
        "unit_response_ms",
        "round_trip_s",
        "usable_endurance_s",
    ])?;
    if let Some(p) = outcome.plan() {
        for a in &p.assignments {
            w.write_record([
                a.uav.clone(),
                a.cloudlet.clone(),
                a.modality.to_string(),
                a.count.to_string(),
                a.unit_cost.to_string(),
                a.unit_capacity.to_string(),
                a.unit_response_ms.to_string(),
                a.round_trip_s.to_string(),
                a.usable_endurance_s.to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn catalog_csv(cat: &Catalog) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "cloudlet",
        "category",
        "type",
        "description",
        "payload_gm",
        "batch_latency_s",
        "capacity_low",
        "capacity_high",
        "cost_beta",
    ])?;
    for c in &cat.cloudlets {
        w.write_record([
            c.id.clone(),
            c.category.to_string(),
            c.type_index.to_string(),
            c.description.clone(),
            c.payload_weight_gm.to_string(),
            c.batch_latency_s.to_string(),
            c.capacity_users.low.to_string(),
            c.capacity_users.high.to_string(),
            c.cost_beta.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs, out: &mut dyn Write) -> anyhow::Result<u8> {
    let scenario = args
        .scenario
        .as_deref()
        .map(|p| load_scenario(p, cli.catalog.as_deref()))
        .transpose()?;
    let catalog = match &scenario {
        Some(s) => s.catalog.clone(),
        None => catalog_from(cli.catalog.as_deref())?,
    };
    let seed = cli.seed.or(scenario.as_ref().and_then(|s| s.file.seed)).unwrap_or(0);

    if args.collab {
        let defaults = scenario
            .as_ref()
            .and_then(|s| s.file.collab.clone())
            .unwrap_or_default();
        return simulate_collab(cli, args, &defaults, &catalog, seed, out);
    }

    let Some(sc) = &scenario else {
        return Err(UsageError("--delivery needs a scenario file".into()).into());
    };
    let plan_text = match (&args.plan, &args.plan_inline) {
        (Some(p), _) => std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
        (None, Some(s)) => s.clone(),
        (None, None) => {
            return Err(UsageError("--delivery needs a plan: pass --plan FILE or --plan-inline JSON".into()).into())
        }
    };
    let plan = read_plan(&plan_text)?;
    let report = simulate_delivery(&plan, &sc.file.request, &catalog)?;
    if let Some(path) = &args.out {
        write_mission_csv(&report, path)?;
    }
    match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            out.write_all(s.as_bytes())?;
        }
        Format::Csv => out.write_all(mission_csv(&report)?.as_bytes())?,
    }
    Ok(if report.warnings.is_empty() { 0 } else { EXIT_ERROR })
}

/// Accepts a plain plan document or the `{plan, oracle}` document of
/// `plan --verify`.
fn read_plan(text: &str) -> anyhow::Result<Plan> {
    let v: Value = parse_json(text)?;
    let inner = match v.get("plan") {
        Some(p) if v.get("oracle").is_some() => p.to_string(),
        _ => text.to_string(),
    };
    let outcome: SolveOutcome = parse_json(&inner)?;
    match outcome {
        SolveOutcome::Optimal(p) => Ok(p),
        SolveOutcome::Infeasible(_) => bail!("the plan is infeasible; nothing to deliver"),
    }
}

fn simulate_collab(
    cli: &Cli,
    args: &SimulateArgs,
    defaults: &CollabSection,
    catalog: &Catalog,
    seed: u64,
    out: &mut dyn Write,
) -> anyhow::Result<u8> {
    let regime = args.regime.map(Regime::from).or(defaults.regime).unwrap_or(Regime::EncasedDry);
    let role = args.role.map(Role::from).or(defaults.role).unwrap_or(Role::Master);
    let config = CollabConfig::for_regime(
        &catalog.calibration.links,
        regime,
        role,
        args.workers.or(defaults.workers).unwrap_or(DEFAULT_WORKERS),
        args.jobs.or(defaults.jobs).unwrap_or(DEFAULT_JOBS),
        args.work_ms.or(defaults.work_ms).unwrap_or(DEFAULT_WORK_MS),
        seed,
    );
    let reps = args.reps.or(defaults.repetitions).unwrap_or(1);
    if reps == 0 {
        return Err(UsageError("--reps must be >= 1".into()).into());
    }

    if reps == 1 {
        let report = simulate_collaborative(&config)?;
        let csv = report.to_csv()?;
        if let Some(path) = &args.out {
            std::fs::write(path, &csv).with_context(|| format!("cannot write {}", path.display()))?;
        }
        match cli.format {
            Format::Json => {
                let completed = report
                    .traces
                    .iter()
                    .filter(|t| t.completed_at_ms.is_some())
                    .count();
                let doc = json!({
                    "regime": regime,
                    "role": role,
                    "seed": seed,
                    "jobs": config.n_jobs,
                    "workers": config.n_workers,
                    "completed": completed,
                    "success_rate": report.success_rate,
                    "response_times": report.response_times,
                });
                let mut s = serde_json::to_string_pretty(&doc)?;
                s.push('\n');
                out.write_all(s.as_bytes())?;
            }
            Format::Csv => out.write_all(csv.as_bytes())?,
        }
        return Ok(0);
    }

    let mc = run_monte_carlo(&config, reps, ExecMode::default())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rep", "success_rate"])?;
    for (i, r) in mc.rep_success_rates.iter().enumerate() {
        w.write_record([i.to_string(), r.to_string()])?;
    }
    let csv = String::from_utf8(w.into_inner()?)?;
    if let Some(path) = &args.out {
        std::fs::write(path, &csv).with_context(|| format!("cannot write {}", path.display()))?;
    }
    match cli.format {
        Format::Json => {
            let doc = json!({
                "regime": regime,
                "role": role,
                "seed": seed,
                "jobs": config.n_jobs,
                "workers": config.n_workers,
                "repetitions": reps,
                "success_rate": mc.report.success_rate,
                "success_rate_half_width": mc.success_rate_half_width,
                "mean_latency_ms": mc.mean_latency_ms,
                "response_times": mc.report.response_times,
            });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            out.write_all(s.as_bytes())?;
        }
        Format::Csv => out.write_all(csv.as_bytes())?,
    }
    Ok(0)
}

fn mission_csv(report: &SimReport) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["uav", "cloudlet", "unit", "completed", "aborted_at_s", "final_battery"])?;
    for m in &report.missions {
        w.write_record([
            m.uav.clone(),
            m.cloudlet.clone().unwrap_or_default(),
            m.unit.to_string(),
            m.completed.to_string(),
            m.aborted_at_s.map(|t| t.to_string()).unwrap_or_default(),
            m.final_battery.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn write_mission_csv(report: &SimReport, path: &Path) -> anyhow::Result<()> {
    std::fs::write(path, mission_csv(report)?).map_err(|e| anyhow!("cannot write {}: {e}", path.display()))
}
