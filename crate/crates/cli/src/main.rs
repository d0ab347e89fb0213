use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modlab_cli::{convergence_scan, run, ExperimentConfig, ExperimentReport, Suite};
use modlab_core::Result;

#[derive(Parser)]
#[command(name = "modlab", version, about = "Numerical checks for modular commutation relations")]
struct Cli {
    /// Directory searched for relative config paths that do not exist as given.
    #[arg(long, global = true, env = "MODLAB_CONFIG_DIR")]
    config_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite and write report.json and results.csv.
    Check {
        /// theorem1, theorem3, prop2, freefield, fock, wedgenet or all; overrides the config.
        suite: String,
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output`, then `modlab-out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence scan of the grid-scalable checks over increasing grid sizes.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a plain-text summary of a finished run.
    Report { dir: PathBuf },
}

fn resolve(path: &Path, dir: Option<&Path>) -> PathBuf {
    match dir {
        Some(d) if path.is_relative() && !path.exists() => d.join(path),
        _ => path.to_path_buf(),
    }
}

fn out_dir(out: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("modlab-out"))
}

fn finish(report: &ExperimentReport, dir: &Path) -> Result<i32> {
    report.write(dir)?;
    print!("{}", report.render());
    println!("wrote {}", dir.display());
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn execute(cli: Cli) -> Result<i32> {
    let cdir = cli.config_dir.as_deref();
    match cli.command {
        Command::Check { suite, config, out } => {
            let mut cfg = ExperimentConfig::load(&resolve(&config, cdir))?;
            cfg.suite = Suite::parse(&suite)?;
            let report = run(&cfg)?;
            finish(&report, &out_dir(out, &cfg))
        }
        Command::Scan { config, grids, out } => {
            let cfg = ExperimentConfig::load(&resolve(&config, cdir))?;
            let report = convergence_scan(&cfg, &grids)?;
            finish(&report, &out_dir(out, &cfg))
        }
        Command::Report { dir } => {
            let report = ExperimentReport::read(&dir)?;
            print!("{}", report.render());
            Ok(if report.all_pass() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
