use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dualbound::config::{ConfigError, ExperimentConfig, Mode};
use dualbound::output;
use dualbound::pipeline::{self, CellStatus, FigureError, Retain};
use dualbound::{Rayon, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "dualbound", version, about = "Dual-control bounds for portfolio choice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to $DUALBOUND_OUT, then the config's `outputs`.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Lower and upper bounds for every (profile, horizon) cell.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Run cells concurrently.
        #[arg(long)]
        parallel_cells: bool,
        /// Also export weight and wealth trajectories for this many paths per cell.
        #[arg(long, value_name = "N")]
        trajectories: Option<usize>,
    },
    /// Data for the utility, allocation and terminal-wealth density figures.
    Figures {
        #[command(flatten)]
        common: Common,
    },
    /// Exports simulated state paths.
    Paths {
        #[command(flatten)]
        common: Common,
        /// Number of paths to write.
        #[arg(long, default_value_t = 100)]
        limit: usize,
    },
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(dualbound_core::Error),
    #[error("{0}")]
    Io(String),
}

impl From<FigureError> for RunError {
    fn from(e: FigureError) -> Self {
        match e {
            FigureError::Config(c) => RunError::Config(c),
            FigureError::Numerical(n) => RunError::Numerical(n),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> RunError + '_ {
    move |e| RunError::Io(format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> RunError + '_ {
    move |e| RunError::Io(format!("{}: {e}", path.display()))
}

fn prepare(common: &Common) -> Result<(ExperimentConfig, PathBuf), RunError> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| config.outputs.clone());
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    Ok((config, out))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, RunError> {
    fs::File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Returns whether every cell converged.
fn run(cli: Cli) -> Result<bool, RunError> {
    match cli.command {
        Command::Bounds { common, mode, parallel_cells, trajectories } => {
            let (mut config, out) = prepare(&common)?;
            let mode = mode.unwrap_or(config.mode);
            config.parallel_cells |= parallel_cells;
            let retain = if trajectories.is_some() { Retain::Trajectories } else { Retain::TerminalOnly };
            let cells = pipeline::run_bounds(&config, mode, retain, &Rayon)?;
            let path = out.join("bounds.csv");
            output::write_bounds(create(&path)?, &cells).map_err(csv_err(&path))?;
            if let Some(limit) = trajectories {
                for c in &cells {
                    let Some(sample) = &c.sample else { continue };
                    let name = format!(
                        "trajectories_{}_T{}.csv",
                        output::profile_label(&c.prefs),
                        dualbound::format::sig6(c.horizon)
                    );
                    let path = out.join(name);
                    let grid = config.sim(c.horizon).grid().map_err(RunError::Numerical)?;
                    output::write_trajectories(create(&path)?, sample, &grid, limit)
                        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
                }
            }
            let mut ok = true;
            for c in &cells {
                let label = output::profile_label(&c.prefs);
                match (c.status, &c.error) {
                    (CellStatus::Failed, e) => {
                        ok = false;
                        let why = e.as_ref().map(|e| e.to_string()).unwrap_or_default();
                        eprintln!("cell {label} T={}: failed: {why}", c.horizon);
                    }
                    (CellStatus::WeakDualityFlag, _) => {
                        eprintln!("cell {label} T={}: gap below -2 standard errors", c.horizon)
                    }
                    _ => {}
                }
            }
            Ok(ok)
        }
        Command::Figures { common } => {
            let (config, out) = prepare(&common)?;
            let data = pipeline::run_figures(&config, config.mode, &Rayon)?;
            output::write_figures(&out, &data).map_err(io_err(&out))?;
            Ok(true)
        }
        Command::Paths { common, limit } => {
            let (config, out) = prepare(&common)?;
            let paths = pipeline::debug_paths(&config, &Rayon)?;
            let path = out.join("paths.csv");
            output::write_paths(create(&path)?, &paths, limit).map_err(csv_err(&path))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                RunError::Config(_) => 2,
                RunError::Numerical(_) => 3,
                RunError::Io(_) => 1,
            })
        }
    }
}
