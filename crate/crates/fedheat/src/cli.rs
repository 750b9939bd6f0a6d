use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Command};
use crate::config::ExperimentConfig;
use crate::error::CliResult;

/// Heat-kernel multi-view fuzzy clustering, centralized and federated.
///
/// Logging verbosity comes from FEDHEAT_LOG (error, warn, info, debug).
/// Exit status: 0 success, 1 invalid config or input, 2 runtime failure.
#[derive(Parser)]
#[command(name = "fedheat", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the synthetic two-view benchmark and validate it.
    Generate(Common),
    /// Run the centralized solver.
    Cluster(Common),
    /// Run the federated simulation.
    Fedrun(Common),
    /// Compare the squared-Euclidean baseline with both coefficient estimators.
    Ablate(Common),
    /// Compute metrics from saved label files.
    Evaluate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config, or a report.json to re-run.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "fedheat-out")]
    out: PathBuf,
}

fn run(cmd: Command, args: Common) -> CliResult<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    commands::run(cmd, &cfg, &args.out).map(|_| ())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("FEDHEAT_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors are config errors; help and version are not errors.
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (cmd, args) = match cli.command {
        Cmd::Generate(a) => (Command::Generate, a),
        Cmd::Cluster(a) => (Command::Cluster, a),
        Cmd::Fedrun(a) => (Command::Fedrun, a),
        Cmd::Ablate(a) => (Command::Ablate, a),
        Cmd::Evaluate(a) => (Command::Evaluate, a),
    };
    match run(cmd, args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
