mod error;
mod ranges;
mod table;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aqds_core::adversary::{
    collision_experiment, forgery_blind, forgery_known_signature_with, repudiation_experiment,
    robustness_experiment, AttackResult, IrreducibleProduct, KnownSignatureSetup,
};
use aqds_core::baselines::{comparison_table, default_scenarios};
use aqds_core::keymat::{required_n, total_consumption};
use aqds_core::netsim::{parse_config, AdversaryScript, Simulation, Topology};
use aqds_core::qkd_model::{rate_at_distance, time_curve, SourceParams};
use aqds_core::scenario::KeyStockFile;
use aqds_core::{BitString, SecurityParams};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};
use crate::table::{Format, Table};

const OUTPUT_DIR_ENV: &str = "AQDS_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "aqds", version, about = "Arbitrated multi-receiver signature simulator and key planner")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; relative paths resolve under $AQDS_OUTPUT_DIR when set. Defaults to stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulated signing round and print the transcript and verdicts.
    SignRound(SignRoundArgs),
    /// Run Monte Carlo attack suites against their bounds.
    Attack(AttackArgs),
    /// Total key consumption over message sizes, security levels and receiver counts.
    Consumption(ConsumptionArgs),
    /// Secure key rate versus fiber distance.
    RateCurve(CurveArgs),
    /// Seconds of key generation per signing round versus fiber distance.
    TimeCurve(CurveArgs),
    /// Supported rounds for a network's per-link key stocks.
    Scenario(ScenarioArgs),
}

#[derive(Args, Debug)]
struct SignRoundArgs {
    /// Number of receivers; taken from the script's topology when omitted.
    #[arg(long)]
    receivers: Option<usize>,
    #[arg(long, default_value_t = 1024)]
    message_bytes: u64,
    /// Sign this UTF-8 text instead of a random message.
    #[arg(long, conflicts_with = "message_bytes")]
    message: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    epsilon: f64,
    /// TOML topology / adversary script.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    round: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Robustness,
    Forgery,
    Repudiation,
    Collision,
    All,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long, default_value_t = 8)]
    n: u32,
    #[arg(long, default_value_t = 16)]
    m_bits: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 3)]
    receivers: usize,
}

#[derive(Args, Debug)]
struct ConsumptionArgs {
    /// Comma list of forgery bounds.
    #[arg(long, default_value = "1e-10,1e-14,1e-20")]
    epsilon: String,
    /// Comma list of receiver counts.
    #[arg(long, default_value = "4,8,10")]
    receivers: String,
    /// Comma list, or `a..b` for powers of two from a to b.
    #[arg(long, default_value = "1..1048576")]
    message_bytes: String,
    /// Print the scheme comparison table instead of the sweep.
    #[arg(long)]
    compare: bool,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[arg(long, default_value = "reference")]
    preset: String,
    /// Source parameter file overriding the preset.
    #[arg(long)]
    params: Option<PathBuf>,
    /// `start..end:step` or a comma list.
    #[arg(long, default_value = "0..400:20")]
    distance_km: String,
    /// Comma list of message sizes (time curve only).
    #[arg(long, default_value = "1,1048576")]
    message_bytes: String,
    #[arg(long, default_value_t = 1e-20)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long, default_value = "eight-user")]
    name: String,
    /// Key stock file overriding the bundled one.
    #[arg(long)]
    keys: Option<PathBuf>,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn sign_round(args: &SignRoundArgs, seed: u64, format: Format) -> CliResult<String> {
    let (script_topology, script) = match &args.script {
        Some(path) => parse_config(&read(path)?)?,
        None => (None, AdversaryScript::honest()),
    };
    let topology = match (script_topology, args.receivers) {
        (Some(t), Some(k)) if t.receivers() != k => {
            return Err(CliError::Usage(format!(
                "--receivers {k} disagrees with the script topology ({} receivers)",
                t.receivers()
            )))
        }
        (Some(t), _) => t,
        (None, k) => Topology::new(k.unwrap_or(6))?,
    };
    let message = args.message.as_ref().map(|m| BitString::from_bytes(m.as_bytes()));
    let m_bits = message.as_ref().map_or(args.message_bytes * 8, |m| m.len() as u64);
    let params = SecurityParams::new(m_bits, args.epsilon, topology.receivers())?;
    let mut sim = Simulation::new(topology, params, script).round_id(args.round);
    if let Some(m) = message {
        sim = sim.message(m);
    }
    let transcript = sim.run(seed)?;

    let mut verdicts = Table::new(["receiver", "receiver_verdict", "status", "keys_released", "timeout_claim"]);
    for row in transcript.verdict_rows() {
        verdicts.push(row);
    }
    let (per_link, total) = transcript.key_accounting();
    Ok(format!(
        "{}\n{}\n# n = {}, key bits per link = {}, total = {}\n",
        transcript.render(),
        verdicts.render(format),
        params.n,
        per_link,
        total
    ))
}

fn attack(args: &AttackArgs, seed: u64, format: Format) -> CliResult<(String, usize)> {
    let want = |s: Suite| args.suite == s || args.suite == Suite::All;
    let k = args.receivers;
    let mut results: Vec<AttackResult> = Vec::new();
    if want(Suite::Robustness) {
        let topo = Topology::new(k)?;
        let params = SecurityParams::with_n(args.m_bits, k, args.n)?;
        results.push(robustness_experiment(&topo, params, args.trials, seed)?);
    }
    if want(Suite::Forgery) {
        results.push(forgery_blind(args.n, args.m_bits, args.trials, seed)?);
        for colluders in [1, k] {
            let setup = KnownSignatureSetup {
                n: args.n,
                m_bits: args.m_bits,
                receivers: k,
                colluders,
            };
            results.push(forgery_known_signature_with(setup, &IrreducibleProduct, args.trials, seed)?);
        }
    }
    if want(Suite::Repudiation) {
        let topo = Topology::new(k)?;
        let params = SecurityParams::with_n(args.m_bits, k, args.n)?;
        results.push(repudiation_experiment(&topo, params, args.trials, seed)?);
    }
    if want(Suite::Collision) {
        results.push(collision_experiment(args.n, args.m_bits, args.trials, seed)?);
    }
    let mut table = Table::new(["experiment", "trials", "successes", "not_applicable", "rate", "bound", "threshold", "pass"]);
    for r in &results {
        table.push([
            r.experiment.clone(),
            r.trials.to_string(),
            r.successes.to_string(),
            r.not_applicable.to_string(),
            format!("{:.6e}", r.rate()),
            format!("{:.6e}", r.bound),
            format!("{:.6e}", r.threshold()),
            if r.passes() { "pass" } else { "FAIL" }.to_string(),
        ]);
    }
    let failures = results.iter().filter(|r| !r.passes()).count();
    Ok((table.render(format), failures))
}

fn consumption(args: &ConsumptionArgs, format: Format) -> CliResult<String> {
    if args.compare {
        let mut table = Table::new(["scheme", "sign", "verify", "k", "m_bits", "eps_f", "total_kbit", "source"]);
        for r in comparison_table(&default_scenarios())? {
            table.push([
                r.scheme,
                r.sign_complexity.to_string(),
                r.verify_complexity.to_string(),
                r.k.to_string(),
                r.m_bits.to_string(),
                format!("{:e}", r.eps_f),
                format!("{:.3}", r.total_kbit),
                r.source.to_string(),
            ]);
        }
        return Ok(table.render(format));
    }
    let eps = ranges::float_list(&args.epsilon)?;
    let ks = ranges::int_list(&args.receivers)?;
    let sizes = ranges::int_list(&args.message_bytes)?;
    let mut table = Table::new(["m_bytes", "eps", "k", "n", "bits"]);
    for &e in &eps {
        for &k in &ks {
            for &m in &sizes {
                let n = required_n(m * 8, e)?;
                let bits = total_consumption(m * 8, e, k)?;
                table.push([m.to_string(), format!("{e:e}"), k.to_string(), n.to_string(), bits.to_string()]);
            }
        }
    }
    Ok(table.render(format))
}

fn source_params(args: &CurveArgs) -> CliResult<SourceParams> {
    match &args.params {
        Some(path) => Ok(SourceParams::from_toml(&read(path)?)?),
        None => Ok(SourceParams::preset(&args.preset)?),
    }
}

fn rate_curve(args: &CurveArgs, format: Format) -> CliResult<String> {
    let params = source_params(args)?;
    let mut table = Table::new(["distance_km", "R_bps", "qber"]);
    for d in ranges::stepped(&args.distance_km)? {
        match rate_at_distance(&params, d) {
            Ok(r) => table.push([d.to_string(), format!("{:.6e}", r.secure_rate), format!("{:.6}", r.qber)]),
            Err(aqds_core::Error::NoSignal) => table.push([d.to_string(), "0".into(), "-".into()]),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(table.render(format))
}

fn time_curve_cmd(args: &CurveArgs, format: Format) -> CliResult<String> {
    let params = source_params(args)?;
    let distances = ranges::stepped(&args.distance_km)?;
    let mut table = Table::new(["m_bytes", "distance_km", "R_bps", "seconds"]);
    for m in ranges::int_list(&args.message_bytes)? {
        for p in time_curve(&params, &distances, m * 8, args.epsilon)? {
            table.push([
                m.to_string(),
                p.distance_km.to_string(),
                format!("{:.6e}", p.rate_bps),
                p.seconds.map_or("infeasible".into(), |s| format!("{s:.6e}")),
            ]);
        }
    }
    Ok(table.render(format))
}

fn scenario(args: &ScenarioArgs, format: Format) -> CliResult<String> {
    let file = match (&args.keys, args.name.as_str()) {
        (Some(path), _) => KeyStockFile::parse(&read(path)?)?,
        (None, "eight-user") => KeyStockFile::eight_user(),
        (None, other) => return Err(CliError::Usage(format!("unknown scenario {other:?}; use --keys"))),
    };
    let mut table = Table::new(["scenario", "bottleneck_link", "bottleneck_bits", "bits_per_round", "rounds"]);
    for r in file.reports()? {
        table.push([
            r.name,
            r.bottleneck_link,
            r.bottleneck_bits.to_string(),
            r.bits_per_round.to_string(),
            r.rounds.to_string(),
        ]);
    }
    Ok(table.render(format))
}

fn output_path(cli: &Cli) -> Option<PathBuf> {
    let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    match (&cli.output, dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => {
            let name = match cli.command {
                Command::SignRound(_) => "sign-round.txt",
                Command::Attack(_) => "attack.csv",
                Command::Consumption(_) => "consumption.csv",
                Command::RateCurve(_) => "rate-curve.csv",
                Command::TimeCurve(_) => "time-curve.csv",
                Command::Scenario(_) => "scenario.csv",
            };
            Some(dir.join(name))
        }
        (None, None) => None,
    }
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match output_path(cli) {
        Some(path) => fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "stdout".into(),
            source,
        }),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let (text, failures) = match &cli.command {
        Command::SignRound(a) => (sign_round(a, cli.seed, cli.format)?, 0),
        Command::Attack(a) => attack(a, cli.seed, cli.format)?,
        Command::Consumption(a) => (consumption(a, cli.format)?, 0),
        Command::RateCurve(a) => (rate_curve(a, cli.format)?, 0),
        Command::TimeCurve(a) => (time_curve_cmd(a, cli.format)?, 0),
        Command::Scenario(a) => (scenario(a, cli.format)?, 0),
    };
    emit(cli, &text)?;
    if failures > 0 {
        return Err(CliError::BoundViolation(failures));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aqds: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
