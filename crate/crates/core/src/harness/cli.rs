use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::aggregate::{aggregate, AggregateCurve};
use super::config::{expand_sweep, ExperimentConfig};
use super::output::{write_curve, write_records};
use super::plot::render_plot;
use super::runner::run_experiment;
use crate::envs::bfs_optimal_steps;
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "ebmc", about = "Adaptive epsilon-greedy benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write records.csv, curve.csv and plot.svg.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Overrides `base_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every point of the config's `[sweep]` grid, one directory each.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value = "sweep_out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a reference value computed independently of learning.
    Oracle {
        #[arg(value_enum)]
        kind: OracleKind,
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleKind {
    /// Shortest completion length of the configured grid-world.
    Gridworld,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Run `config` and write its three output files into `dir`. Returns the test curve.
pub fn run_to_dir(config: &ExperimentConfig, dir: &Path, parallelism: usize) -> Result<AggregateCurve> {
    create_dir(dir)?;
    let records = run_experiment(config, parallelism)?;
    let curve = aggregate(&records);
    write_records(&records, &dir.join("records.csv"))?;
    write_curve(&curve, &dir.join("curve.csv"))?;
    let name = if config.name.is_empty() { "test metric".to_string() } else { config.name.clone() };
    render_plot(&[(name, curve.clone())], config.env.metric().label(), &dir.join("plot.svg"))?;
    Ok(curve)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run { config, out, parallelism, seed } => {
            let mut cfg = ExperimentConfig::from_toml_str(&read(&config)?)?;
            if let Some(seed) = seed {
                cfg.base_seed = seed;
            }
            run_to_dir(&cfg, &out, parallelism)?;
            let _ = writeln!(stdout, "wrote {}", out.display());
        }
        Command::Sweep { config, out, parallelism, seed } => {
            let points = expand_sweep(&read(&config)?)?;
            create_dir(&out)?;
            let mut curves = Vec::with_capacity(points.len());
            for mut point in points {
                if let Some(seed) = seed {
                    point.config.base_seed = seed;
                }
                let dir = out.join(point.label.replace(['/', '\\', ' ', '"'], "_"));
                let curve = run_to_dir(&point.config, &dir, parallelism)?;
                let _ = writeln!(stdout, "wrote {}", dir.display());
                curves.push((point.label, curve, point.config.env.metric()));
            }
            if let Some((_, _, metric)) = curves.first() {
                let label = metric.label();
                let named: Vec<_> = curves.into_iter().map(|(l, c, _)| (l, c)).collect();
                render_plot(&named, label, &out.join("sweep.svg"))?;
            }
        }
        Command::Oracle { kind: OracleKind::Gridworld, config } => {
            let cfg = ExperimentConfig::from_toml_str(&read(&config)?)?;
            match bfs_optimal_steps(&cfg.env.gridworld) {
                Some(steps) => {
                    let _ = writeln!(stdout, "{steps}");
                }
                None => return Err(Error::invalid("env.gridworld", "task cannot be completed")),
            }
        }
    }
    Ok(())
}

/// Entry point shared by the binary and the tests. Returns the process exit code.
pub fn cli_main<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                let _ = write!(stdout, "{e}");
            } else {
                let _ = write!(stderr, "{e}");
            }
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}
