use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

mod commands;
mod error;
mod io;

use commands::Outcome;
use error::{CliError, Result};
use io::{csv_string, Artifacts};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "matic", version, about = "Event traces, implicature and cognitive network tools")]
struct Cli {
    /// Root seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for metrics.csv, summary.json and timing.json.
    #[arg(long, global = true, default_value = "matic-out")]
    out: PathBuf,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Event trace utilities.
    #[command(subcommand)]
    Trace(TraceCmd),
    /// Run a single module.
    #[command(subcommand)]
    Gcm(GcmCmd),
    /// Network analysis.
    #[command(subcommand)]
    Net(NetCmd),
    /// Infer the implied cause of events in a trace.
    Infer {
        trace: PathBuf,
        /// Training corpus, or a model written by `train`.
        #[arg(long)]
        corpus: PathBuf,
        /// Only this event id.
        #[arg(long)]
        event: Option<String>,
        #[arg(short = 'k', long = "max-context", default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Ranked candidates kept per event in summary.json.
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Predictive entropy at each event of a trace.
    Entropy {
        trace: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Number of preceding events used as context.
        #[arg(long, default_value_t = 1)]
        window: usize,
        #[arg(short = 'k', long = "max-context", default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Windowed divergence test over one or more trace files.
    Stationarity {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Window length in ticks.
        #[arg(long)]
        window: Option<u64>,
        /// Divergence threshold in bits.
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
    },
    /// Formula tools.
    #[command(subcommand)]
    Logic(LogicCmd),
    /// Train a conditional model and write model.json.
    Train {
        corpus: PathBuf,
        #[arg(short = 'k', long = "max-context", default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Built-in scenarios.
    #[command(subcommand)]
    Demo(DemoCmd),
}

#[derive(Debug, Subcommand)]
enum TraceCmd {
    /// Check ordering and chain structure.
    Validate { file: PathBuf },
}

#[derive(Debug, Subcommand)]
enum GcmCmd {
    Run {
        config: PathBuf,
        /// Signal bundle with p/n/r/l lines.
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long)]
        ticks: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum NetCmd {
    /// Circularity and stratification.
    Check { file: PathBuf },
    /// Run for a number of ticks.
    Run {
        file: PathBuf,
        /// Map from input name to signal.
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long)]
        ticks: usize,
    },
}

#[derive(Debug, Subcommand)]
enum LogicCmd {
    /// Internality, stratification and comprehension checks.
    Check { file: PathBuf },
    /// Apply transference to each formula.
    Transfer {
        file: PathBuf,
        /// Comma separated standard parameters.
        #[arg(long, value_delimiter = ',')]
        standard: Vec<String>,
    },
    /// Apply idealisation to each formula.
    Idealise { file: PathBuf },
}

#[derive(Debug, Subcommand)]
enum DemoCmd {
    Garage {
        #[arg(short = 'k', long = "max-context", default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    Receiver {
        /// Receiver configuration. Without it, a BPSK error-rate sweep runs.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        symbols: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,4,8", allow_negative_numbers = true)]
        ebn0: Vec<f64>,
    },
    Bandit {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        runs: usize,
    },
    Character {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        ticks: usize,
        /// Probability that each condition holds on a tick.
        #[arg(long, default_value_t = 0.2)]
        condition_rate: f64,
    },
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Trace(TraceCmd::Validate { .. }) => "trace validate",
            Command::Gcm(GcmCmd::Run { .. }) => "gcm run",
            Command::Net(NetCmd::Check { .. }) => "net check",
            Command::Net(NetCmd::Run { .. }) => "net run",
            Command::Infer { .. } => "infer",
            Command::Entropy { .. } => "entropy",
            Command::Stationarity { .. } => "stationarity",
            Command::Logic(LogicCmd::Check { .. }) => "logic check",
            Command::Logic(LogicCmd::Transfer { .. }) => "logic transfer",
            Command::Logic(LogicCmd::Idealise { .. }) => "logic idealise",
            Command::Train { .. } => "train",
            Command::Demo(DemoCmd::Garage { .. }) => "demo garage",
            Command::Demo(DemoCmd::Receiver { .. }) => "demo receiver",
            Command::Demo(DemoCmd::Bandit { .. }) => "demo bandit",
            Command::Demo(DemoCmd::Character { .. }) => "demo character",
        }
    }

    /// Inputs and parameters recorded in summary.json. The output directory
    /// is left out so that runs into different directories compare equal.
    fn params(&self) -> Value {
        let opt = |p: &Option<PathBuf>| p.as_deref().map(path_str);
        match self {
            Command::Trace(TraceCmd::Validate { file }) => json!({ "file": path_str(file) }),
            Command::Gcm(GcmCmd::Run { config, inputs, ticks }) => json!({
                "config": path_str(config), "inputs": path_str(inputs), "ticks": ticks,
            }),
            Command::Net(NetCmd::Check { file }) => json!({ "file": path_str(file) }),
            Command::Net(NetCmd::Run { file, inputs, ticks }) => json!({
                "file": path_str(file), "inputs": path_str(inputs), "ticks": ticks,
            }),
            Command::Infer { trace, corpus, event, k, lambda, top } => json!({
                "trace": path_str(trace), "corpus": path_str(corpus), "event": event,
                "max_context": k, "lambda": lambda, "top": top,
            }),
            Command::Entropy { trace, corpus, window, k, lambda } => json!({
                "trace": path_str(trace), "corpus": path_str(corpus), "window": window,
                "max_context": k, "lambda": lambda,
            }),
            Command::Stationarity { files, window, tau } => json!({
                "files": files.iter().map(|f| path_str(f)).collect::<Vec<_>>(),
                "window": window, "tau": tau,
            }),
            Command::Logic(LogicCmd::Check { file }) | Command::Logic(LogicCmd::Idealise { file }) => {
                json!({ "file": path_str(file) })
            }
            Command::Logic(LogicCmd::Transfer { file, standard }) => json!({
                "file": path_str(file), "standard": standard,
            }),
            Command::Train { corpus, k, lambda } => json!({
                "corpus": path_str(corpus), "max_context": k, "lambda": lambda,
            }),
            Command::Demo(DemoCmd::Garage { k, lambda }) => json!({ "max_context": k, "lambda": lambda }),
            Command::Demo(DemoCmd::Receiver { config, symbols, ebn0 }) => json!({
                "config": opt(config), "symbols": symbols, "ebn0_db": ebn0,
            }),
            Command::Demo(DemoCmd::Bandit { config, runs }) => json!({
                "config": opt(config), "runs": runs,
            }),
            Command::Demo(DemoCmd::Character { config, ticks, condition_rate }) => json!({
                "config": opt(config), "ticks": ticks, "condition_rate": condition_rate,
            }),
        }
    }

    fn execute(&self, seed: u64) -> Result<Outcome> {
        match self {
            Command::Trace(TraceCmd::Validate { file }) => commands::trace_validate(file),
            Command::Gcm(GcmCmd::Run { config, inputs, ticks }) => {
                commands::gcm_run(config, inputs, *ticks, seed)
            }
            Command::Net(NetCmd::Check { file }) => commands::net_check(file),
            Command::Net(NetCmd::Run { file, inputs, ticks }) => commands::net_run(file, inputs, *ticks),
            Command::Infer { trace, corpus, event, k, lambda, top } => {
                check_lambda(*lambda)?;
                commands::infer(trace, corpus, event.as_deref(), *k, *lambda, *top)
            }
            Command::Entropy { trace, corpus, window, k, lambda } => {
                check_lambda(*lambda)?;
                commands::entropy(trace, corpus, *window, *k, *lambda)
            }
            Command::Stationarity { files, window, tau } => {
                if !(tau.is_finite() && *tau >= 0.0) {
                    return Err(CliError::config(format!("tau must be non-negative, got {tau}")));
                }
                commands::stationarity(files, *window, *tau)
            }
            Command::Logic(LogicCmd::Check { file }) => commands::logic_check(file),
            Command::Logic(LogicCmd::Transfer { file, standard }) => {
                commands::logic_transfer(file, standard)
            }
            Command::Logic(LogicCmd::Idealise { file }) => commands::logic_idealise(file),
            Command::Train { corpus, k, lambda } => {
                check_lambda(*lambda)?;
                commands::train(corpus, *k, *lambda)
            }
            Command::Demo(DemoCmd::Garage { k, lambda }) => {
                check_lambda(*lambda)?;
                commands::demo_garage(*k, *lambda)
            }
            Command::Demo(DemoCmd::Receiver { config, symbols, ebn0 }) => {
                commands::demo_receiver(config.as_deref(), *symbols, ebn0, seed)
            }
            Command::Demo(DemoCmd::Bandit { config, runs }) => {
                commands::demo_bandit(config.as_deref(), *runs, seed)
            }
            Command::Demo(DemoCmd::Character { config, ticks, condition_rate }) => {
                commands::demo_character(config.as_deref(), *ticks, *condition_rate, seed)
            }
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("lambda must be positive, got {lambda}")))
    }
}

fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let name = cli.command.name();
    log::info!("{name} seed={}", cli.seed);
    let outcome = cli.command.execute(cli.seed)?;
    let artifacts = Artifacts::new(&cli.out)?;
    let csv = csv_string(outcome.header, &outcome.rows)?;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "version": matic_core::VERSION,
        "command": name,
        "seed": cli.seed,
        "params": cli.command.params(),
        "results": outcome.results,
    });
    artifacts.write_text("metrics.csv", &csv)?;
    artifacts.write_json("summary.json", &summary)?;
    for (file, value) in &outcome.extra {
        artifacts.write_json(file, value)?;
    }
    artifacts.write_json(
        "timing.json",
        &json!({ "command": name, "wall_time_seconds": started.elapsed().as_secs_f64() }),
    )?;
    match cli.format {
        Format::Csv => print!("{csv}"),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&summary).map_err(|e| CliError::Internal(e.to_string()))?
        ),
    }
    log::info!("wrote artifacts to {}", cli.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MATIC_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("matic: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
