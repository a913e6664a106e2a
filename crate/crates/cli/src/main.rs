use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oam_plasmon::{pipeline, Config, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_DOMAIN: u8 = 3;

/// Entangled OAM photon pairs through a plasmonic hole array: simulation driver.
#[derive(Parser, Debug)]
#[command(name = "oamsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file; built-in defaults are used when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for the coincidence-count sampler (overrides run.rng_seed).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; without it results go to stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override a config entry, e.g. `--set scan.n_points=401`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pipeline: states, mode matrices, both dip scans, filter design and classical baseline.
    ReproducePaper(Common),
    /// Single coincidence scan of the configured input state.
    Scan(Common),
    /// Procrustean filter that maximally entangles the configured input state.
    DesignFilter {
        #[command(flatten)]
        common: Common,
        /// Largest transmission the filter may assign (default: targets.filter_cap).
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Coincidence probabilities for every (l_signal, l_idler) pair, before and after the plate.
    ModeMatrix(Common),
}

fn load_config(common: &Common) -> Result<Config, Error> {
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("run.rng_seed={seed}"));
    }
    match &common.config {
        Some(path) => Config::load(path, &overrides),
        None => Config::from_toml_with_overrides("", &overrides),
    }
}

fn emit(out: Option<&Path>, file: &str, body: &str) -> Result<(), Error> {
    match out {
        Some(dir) => {
            let io = |p: &Path, e: std::io::Error| Error::Io { path: p.display().to_string(), message: e.to_string() };
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
            let path = dir.join(file);
            std::fs::write(&path, body).map_err(|e| io(&path, e))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io { path: "<stdout>".into(), message: e.to_string() })
        }
    }
}

fn run(command: &Command) -> Result<(), Error> {
    match command {
        Command::ReproducePaper(common) => {
            let cfg = load_config(common)?;
            let bundle = pipeline::reproduce_paper(&cfg)?;
            match &common.out {
                Some(dir) => pipeline::write_bundle(&bundle, dir),
                None => emit(None, pipeline::BUNDLE_FILE, &bundle.to_json()),
            }
        }
        Command::Scan(common) => {
            let cfg = load_config(common)?;
            emit(common.out.as_deref(), "scan.csv", &pipeline::cmd_scan(&cfg)?)
        }
        Command::DesignFilter { common, cap } => {
            let cfg = load_config(common)?;
            emit(common.out.as_deref(), "filter.json", &pipeline::cmd_design_filter(&cfg, *cap)?)
        }
        Command::ModeMatrix(common) => {
            let cfg = load_config(common)?;
            emit(common.out.as_deref(), "mode_matrix.csv", &pipeline::cmd_mode_matrix(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oamsim: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_DOMAIN })
        }
    }
}
