use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use modal_core::engine::SimConfig;
use modal_core::scenario::{Format, PRESETS};
use modal_sim::commands::{load_calibration, run_calibrate, run_run, CalibrateArgs, RunArgs, RunOutput};
use modal_sim::server::{serve, AppState};
use modal_sim::CliError;

/// Agent-based simulator of urban modal choice under habits and perception
/// biases.
#[derive(Parser)]
#[command(name = "modal-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive a calibration file from a survey CSV.
    Calibrate {
        /// Survey file (comma-separated, header row).
        #[arg(long)]
        survey: PathBuf,
        /// Per-mode distance caps in km, e.g. "walk=10,bike=55,car=195,bus=100".
        #[arg(long)]
        caps: Option<String>,
        /// JSON file renaming survey columns.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Where to write the calibration JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario file or bundled preset over all its seeds.
    Run {
        /// Scenario JSON file, or the name of a bundled preset (see `presets`).
        #[arg(long)]
        scenario: String,
        /// Calibration JSON; defaults to the embedded survey statistics.
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Output directory for per-seed series and the aggregate; prints to
        /// stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
    /// Serve live steering sessions over websocket at /ws.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Calibration JSON; defaults to the embedded survey statistics.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        agents: usize,
        /// Directory of static dashboard assets served at /.
        #[arg(long)]
        assets: Option<PathBuf>,
        /// Directory receiving each finished session's replay scenario.
        #[arg(long)]
        replay_dir: Option<PathBuf>,
    },
    /// List the bundled scenario presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Calibrate { survey, caps, mapping, out } => {
            let report = run_calibrate(&CalibrateArgs { survey, caps, mapping, out })?;
            eprintln!("{report}");
        }
        Command::Run { scenario, calibration, out, format } => {
            match run_run(&RunArgs { scenario, calibration, out, format: format.into() })? {
                RunOutput::Stdout(text) => print!("{text}"),
                RunOutput::Files(paths) => {
                    for p in paths {
                        eprintln!("wrote {}", p.display());
                    }
                }
            }
        }
        Command::Serve { port, host, calibration, seed, agents, assets, replay_dir } => {
            let calib = load_calibration(calibration.as_deref())?;
            let config = SimConfig { seed, n_agents: agents, ..SimConfig::default() };
            config.validate()?;
            if let Some(dir) = &replay_dir {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
            }
            let state = Arc::new(AppState::new(calib, config, replay_dir));
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
            runtime
                .block_on(serve(SocketAddr::new(host, port), state, assets))
                .map_err(|e| CliError::Runtime(format!("server error on port {port}: {e}")))?;
        }
        Command::Presets => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
