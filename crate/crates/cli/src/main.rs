use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qja_core::experiment::{
    preset_figure1, run_experiment, validate, ExperimentConfig, RunError, RunOverrides,
};

/// Quantum Jarzynski annealing simulator.
#[derive(Debug, Parser)]
#[command(name = "qja", version, about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "QJA_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the global seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run or print a built-in experiment.
    Preset {
        name: PresetName,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset config as TOML and exit.
        #[arg(long)]
        dump: bool,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetName {
    Figure1,
}

fn base_dir(config: &Path) -> PathBuf {
    config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn execute(config: &ExperimentConfig, base: &Path, overrides: RunOverrides) -> Result<u8, RunError> {
    let outcome = run_experiment(config, base, &overrides)?;
    print!("{}", outcome.summary.render());
    println!("output = {}", outcome.output_dir.display());
    Ok(if outcome.summary.all_pass() { 0 } else { 1 })
}

fn dispatch(cli: Cli) -> Result<u8, RunError> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            execute(&cfg, &base_dir(&config), RunOverrides { seed, out })
        }
        Command::Preset {
            name: PresetName::Figure1,
            seed,
            out,
            dump,
        } => {
            let cfg = preset_figure1();
            if dump {
                print!("{}", cfg.to_toml());
                return Ok(0);
            }
            execute(&cfg, Path::new("."), RunOverrides { seed, out })
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let prep = validate(&cfg, &base_dir(&config))?;
            println!(
                "ok: {} engines={:?} dim={} steps={} hash={}",
                cfg.name,
                cfg.engines,
                prep.cost.dim(),
                prep.schedule.n_steps(),
                cfg.hash()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("qja: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qja: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
