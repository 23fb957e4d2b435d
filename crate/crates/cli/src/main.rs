use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chaoscope::pipeline::{self, RunConfig, RunManifest};
use chaoscope::rmt::{Ensemble, EnsembleSpec};
use chaoscope::Error;
use clap::{Parser, Subcommand};

const CONFIG_HELP: &str = "\
Config is TOML. Sections and defaults:
  [model]       kind = \"dicke\" | \"tavis_cummings\" (or \"tc\"), omega = 1, omega0 = 1, j (required),
                g or g_over_gc (scalar or list), gamma = 0, sector = \"full\"
                (\"even\", \"odd\", \"q:LO-HI\"), cutoffs (ascending; the top two
                are compared for convergence)
  [selection]   fraction = 0.6, alpha = 0.5, tol = 1e-6 (open: 1e-4*gamma),
                exclude_zero_mode = true
  [unfolding]   degree = 10, sigma_factor = 4.5, power_a = [0, -1],
                power_nu = 0.3333333333333333, z0 = \"auto\"
  [indicators]  list (default per mode), rk = [1], bins = 40
  [time]        points = 2000, t_min = 0.01, t_max = 10000, window = 0.5
  [dsff]        phi = 3pi/4, dphi = pi/16, n_phi = 8
  [dspf]        beta = 0, n_traj = 100,
                backend = \"auto\", points = 200, t_min = 0.01, t_max = 100
  [baseline]    realizations = 10
  [run]         seed = 0, output_dir = \"chaoscope-out\", cache_dir =
                \"<output_dir>/cache\", workers = 1, superoperator_cap = 40000000

Exit codes: 0 ok, 1 i/o, 2 config or parameters, 3 numerical, 4 resource cap.
CHAOSCOPE_MAX_WORKERS caps the worker count.";

#[derive(Parser)]
#[command(name = "chaoscope", version, about = "Spectral and dynamical chaos indicators for light-matter models", after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every requested indicator at a single parameter point.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a grid of coupling and dissipation values and write scan tables.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Sample a random-matrix or Poisson ensemble and write its reference curves.
    Baseline {
        /// poisson1d, goe, poisson2d or ginue
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to `baseline-<kind>-<n>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Summarize a finished run directory as JSON on stdout.
    Report { dir: PathBuf },
}

fn load(config: &Path, out: Option<PathBuf>, workers: Option<usize>) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(o) = out {
        cfg.run.output_dir = o;
    }
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Config { key: "--workers".into(), message: "must be at least 1".into() });
        }
        cfg.run.workers = w;
    }
    Ok(cfg)
}

// A closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_manifest(m: &RunManifest) {
    let failed = m.points.iter().filter(|p| p.error.is_some()).count();
    emit(&format!("{} points, {} failed, output in {}", m.points.len(), failed, m.config.run.output_dir.display()));
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { config, out, workers } => print_manifest(&pipeline::run(&load(&config, out, workers)?)?),
        Command::Sweep { config, out, workers } => print_manifest(&pipeline::sweep(&load(&config, out, workers)?)?),
        Command::Baseline { kind, n, realizations, seed, out, workers } => {
            let ensemble = Ensemble::parse(&kind)
                .ok_or_else(|| Error::Config { key: "--kind".into(), message: format!("unknown ensemble `{kind}`") })?;
            let spec = EnsembleSpec::new(ensemble, n, realizations, seed)
                .map_err(|e| Error::Config { key: "--n".into(), message: e.to_string() })?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("baseline-{}-{n}", ensemble.name())));
            let summary = pipeline::baseline(&spec, &out, workers)?;
            emit(&serde_json::to_string_pretty(&summary).expect("json"));
        }
        Command::Report { dir } => {
            emit(&serde_json::to_string_pretty(&pipeline::report(&dir)?).expect("json"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
