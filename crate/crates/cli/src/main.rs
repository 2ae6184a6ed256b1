//! `ncmap` — derivative-free optimization with non-commutative maps.
//!
//! Subcommands: `construct` (build an exploration matrix and write it to a
//! file), `run` (construct or load a matrix, then optimize), `simulate`
//! (run one of the five shipped presets) and `verify` (numerical
//! certification suites).

use clap::{Parser, Subcommand};
use ncmap_cli::commands::{self, CommandError, EXIT_BAD_CONFIG};
use ncmap_cli::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

const PRESET_SOURCES: [&str; 5] = [
    include_str!("../presets/sim1.cfg"),
    include_str!("../presets/sim2.cfg"),
    include_str!("../presets/sim3.cfg"),
    include_str!("../presets/sim4.cfg"),
    include_str!("../presets/sim5.cfg"),
];

#[derive(Parser)]
#[command(
    name = "ncmap",
    about = "Derivative-free optimization with non-commutative maps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct an exploration matrix and write it as a text file
    Construct {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Start from a shipped preset (1..=5)
        #[arg(long)]
        preset: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// key=value overrides applied on top of the config
        overrides: Vec<String>,
    },
    /// Construct (or load) an exploration matrix and run the optimizer
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        overrides: Vec<String>,
    },
    /// Run one of the shipped simulation presets
    Simulate {
        /// Preset number (1..=5)
        #[arg(long)]
        preset: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        overrides: Vec<String>,
    },
    /// Run a verification suite: order | shoelace | brockett | catalog | interlacing
    Verify {
        suite: String,
        /// Scan bound for the interlacing suite
        #[arg(long, default_value_t = 200)]
        m_max: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        overrides: Vec<String>,
    },
}

fn load_config(
    config: &Option<PathBuf>,
    preset: Option<usize>,
    seed: Option<u64>,
    overrides: &[String],
) -> Result<RunConfig, CommandError> {
    let mut cfg = match (config, preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| CommandError {
                code: EXIT_BAD_CONFIG,
                message: format!("{}: {e}", path.display()),
            })?;
            RunConfig::parse(&text)?
        }
        (None, Some(k)) => preset_config(k)?,
        (Some(_), Some(_)) => {
            return Err(CommandError {
                code: EXIT_BAD_CONFIG,
                message: "give either --config or --preset, not both".into(),
            })
        }
        (None, None) => {
            return Err(CommandError {
                code: EXIT_BAD_CONFIG,
                message: "a --config file or --preset number is required".into(),
            })
        }
    };
    for item in overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| CommandError {
            code: EXIT_BAD_CONFIG,
            message: format!("override '{item}' is not of the form key=value"),
        })?;
        cfg.apply(key.trim(), value.trim())?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn preset_config(k: usize) -> Result<RunConfig, CommandError> {
    if !(1..=5).contains(&k) {
        return Err(CommandError {
            code: EXIT_BAD_CONFIG,
            message: format!("preset {k} does not exist (use 1..=5)"),
        });
    }
    Ok(RunConfig::parse(PRESET_SOURCES[k - 1])?)
}

fn dispatch(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Construct {
            config,
            preset,
            out,
            seed,
            overrides,
        } => {
            let cfg = load_config(&config, preset, seed, &overrides)?;
            commands::cmd_construct(&cfg, &out)
        }
        Command::Run {
            config,
            preset,
            out,
            seed,
            overrides,
        } => {
            let cfg = load_config(&config, preset, seed, &overrides)?;
            commands::cmd_run(&cfg, &out)
        }
        Command::Simulate {
            preset,
            out,
            seed,
            overrides,
        } => {
            let cfg = load_config(&None, Some(preset), seed, &overrides)?;
            commands::cmd_simulate(&cfg, &out)
        }
        Command::Verify {
            suite,
            m_max,
            config,
            overrides,
        } => {
            let cfg = match &config {
                Some(_) => Some(load_config(&config, None, None, &overrides)?),
                None => None,
            };
            commands::cmd_verify(&suite, m_max, cfg.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
