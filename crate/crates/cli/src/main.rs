mod model;
mod simulate;
mod units;
mod validate;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rtpslab::optimizer::{feasibility, optimize_profile, recommend_utilization, ChannelUse, OptimizationInput};
use rtpslab::profile_io::{emit_profile_xml, parse_scenario, write_metrics_csv, ProfileNames};

const EXIT_USAGE: u8 = 1;
const EXIT_BREACH: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "rtpslab", version, about = "RTPS reliability over lossy links: model, optimize, simulate, validate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate closed-form model surfaces as CSV.
    Model {
        #[command(subcommand)]
        kind: ModelKind,
    },
    /// Derive a tuned QoS profile and write it as XML.
    Optimize(OptimizeArgs),
    /// Run a scenario file for several seeded trials.
    Simulate(SimulateArgs),
    /// Check simulator against the closed forms over a parameter grid.
    Validate(ValidateArgs),
}

#[derive(Subcommand)]
enum ModelKind {
    /// Steady-state rate over payload x packets-per-message.
    Rdds {
        #[arg(long, default_value_t = 0.1)]
        per: f64,
        #[arg(long, default_value_t = 30.0)]
        rate: f64,
        /// `a..b` or comma list; `k` = x1000.
        #[arg(long, default_value = "33k..330k")]
        payloads: String,
        #[arg(long)]
        step: Option<String>,
        #[arg(long, default_value = "1,5,44")]
        nip: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Worst-case burst over publish rate x heartbeat rate.
    Burst {
        #[arg(long, default_value_t = 480.0)]
        pub_rate_mbps: f64,
        #[arg(long, default_value_t = 0.1)]
        per: f64,
        #[arg(long, default_value = "1,10,30,60,100")]
        rates: String,
        #[arg(long, default_value = "0.3333333333333333,1,10,30,60")]
        retx: String,
        #[arg(long, default_value_t = 65_536)]
        max_message: u64,
        #[arg(long, default_value_t = 1500)]
        mtu: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Best-effort delivery table.
    Delivery {
        #[arg(long, default_value = "0.001,0.01")]
        per: String,
        #[arg(long, default_value = "33k..330k")]
        payloads: String,
        #[arg(long)]
        step: Option<String>,
        #[arg(long, default_value_t = 65_536)]
        max_message: u64,
        #[arg(long, default_value_t = 1500)]
        mtu: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(short = 'r', long)]
    rate: f64,
    /// Sample size in bytes (`k` = x1000).
    #[arg(short = 'u', long)]
    payload: String,
    #[arg(long)]
    link_mbps: f64,
    /// Link share for this traffic; defaults to the recommendation.
    #[arg(long)]
    util: Option<f64>,
    /// Other hosts share the channel.
    #[arg(long)]
    shared: bool,
    #[arg(long, default_value_t = 1500)]
    mtu: u64,
    /// Packet error rate used for the feasibility check.
    #[arg(long, default_value_t = 0.0)]
    per: f64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    scenario: PathBuf,
    #[arg(long, default_value_t = 5)]
    trials: u32,
    /// Base seed; trial i uses seed + i. Defaults to the scenario's seed.
    #[arg(long, env = "RTPSLAB_SEED")]
    seed: Option<u64>,
    /// Override the history cache capacity (count or `unbounded`).
    #[arg(long)]
    history_capacity: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Directory for per-trial trace CSVs.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 10_000)]
    rounds: u64,
    #[arg(long, default_value_t = 2.0)]
    rate: f64,
    #[arg(long, env = "RTPSLAB_SEED", default_value_t = 1)]
    seed: u64,
}

enum Failure {
    Usage(anyhow::Error),
    Io(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<rtpslab::Error> for Failure {
    fn from(e: rtpslab::Error) -> Self {
        Failure::Usage(e.into())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(Failure::Io)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).map_err(Failure::Io)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_model(kind: ModelKind) -> CliResult<()> {
    let step = |s: Option<String>| s.as_deref().map(units::parse_bytes).transpose();
    match kind {
        ModelKind::Rdds { per, rate, payloads, step: st, nip, out } => {
            let payloads = units::parse_byte_list(&payloads, step(st)?)?;
            let csv = model::rdds_csv(rate, per, &payloads, &units::parse_u64_list(&nip)?)?;
            emit(out.as_deref(), &csv)
        }
        ModelKind::Burst { pub_rate_mbps, per, rates, retx, max_message, mtu, out } => {
            let csv = model::burst_csv(
                units::mbps_to_bytes_per_s(pub_rate_mbps),
                per,
                &units::parse_f64_list(&rates)?,
                &units::parse_f64_list(&retx)?,
                max_message,
                mtu,
            )?;
            emit(out.as_deref(), &csv)
        }
        ModelKind::Delivery { per, payloads, step: st, max_message, mtu, out } => {
            let payloads = units::parse_byte_list(&payloads, step(st)?)?;
            let csv = model::delivery_csv(&units::parse_f64_list(&per)?, &payloads, max_message, mtu)?;
            emit(out.as_deref(), &csv)
        }
    }
}

fn run_optimize(a: OptimizeArgs) -> CliResult<()> {
    let channel = if a.shared { ChannelUse::Shared } else { ChannelUse::Exclusive };
    let util = a.util.unwrap_or_else(|| recommend_utilization(channel).low);
    let input = OptimizationInput::new(a.rate, units::parse_bytes(&a.payload)?, units::mbps_to_bytes_per_s(a.link_mbps), util)?
        .with_mtu(a.mtu)?;
    if !(0.0..=1.0).contains(&a.per) {
        return Err(Failure::Usage(anyhow!("--per must lie in [0, 1]")));
    }
    let optimized = optimize_profile(&input)?;
    let report = feasibility(&input, 1.0 - a.per)?;
    let xml = emit_profile_xml(&optimized.profile, &ProfileNames::default())?;

    let q = &optimized.profile;
    let mut summary = format!(
        "max_message_bytes = {}\nretx_rate_hz = {}\nhistory_capacity = {}\nutilization = {util}\n{report}\n",
        q.max_rtps_message_bytes,
        q.retransmission_rate_hz,
        q.history_cache_capacity.map_or("unbounded".to_string(), |n| n.to_string()),
    );
    if channel == ChannelUse::Shared {
        summary.push_str("caveat = SHARED_CHANNEL\n");
    }
    for w in &optimized.warnings {
        eprintln!("warning: {w}");
    }
    match a.out {
        Some(p) => {
            write(&p, &xml)?;
            print!("{summary}");
        }
        None => {
            print!("{xml}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn run_simulate(a: SimulateArgs) -> CliResult<()> {
    if a.trials == 0 {
        return Err(Failure::Usage(anyhow!("--trials must be at least 1")));
    }
    let mut spec = parse_scenario(&read(&a.scenario)?)?;
    if let Some(cap) = &a.history_capacity {
        spec.qos.history_cache_capacity = if cap.eq_ignore_ascii_case("unbounded") {
            None
        } else {
            Some(cap.parse().map_err(|_| anyhow!("invalid --history-capacity '{cap}'"))?)
        };
        spec.validate()?;
    }
    let mode = a.mode.clone().unwrap_or_else(|| simulate::mode_label(&spec).to_string());
    let seed = a.seed.unwrap_or(spec.rng_seed);
    let trials = simulate::run_trials(&spec, a.trials, seed, &mode, a.trace_dir.is_some())?;

    if let Some(dir) = &a.trace_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).map_err(Failure::Io)?;
        for (i, t) in trials.iter().enumerate() {
            let path = dir.join(format!("{}_trace_{i}.csv", spec.name));
            write(&path, t.trace_csv.as_deref().unwrap_or_default())?;
        }
    }
    let csv = write_metrics_csv(&simulate::table(&spec, &trials)?)?;
    emit(a.metrics_out.as_deref(), &csv)
}

fn run_validate(a: ValidateArgs) -> CliResult<ExitCode> {
    if a.rounds == 0 || a.rate.is_nan() || a.rate <= 0.0 {
        return Err(Failure::Usage(anyhow!("--rounds and --rate must be positive")));
    }
    let results = validate::run_grid(&validate::default_grid(a.rate), a.rounds, a.seed)?;
    let mut max_dev: f64 = 0.0;
    for r in &results {
        println!("{r}");
        max_dev = max_dev.max(r.rate_dev).max(r.burst_dev.unwrap_or(0.0));
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("max_relative_deviation={max_dev:.6} failed_cells={failed}/{}", results.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_BREACH) })
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Model { kind } => run_model(kind).map(|_| ExitCode::SUCCESS),
        Command::Optimize(a) => run_optimize(a).map(|_| ExitCode::SUCCESS),
        Command::Simulate(a) => run_simulate(a).map(|_| ExitCode::SUCCESS),
        Command::Validate(a) => run_validate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}
