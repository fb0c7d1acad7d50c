use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thz_ris::config::ScenarioConfig;
use thz_ris::error::{Error, Result};
use thz_ris::runner::{run_alpha_sweep, run_correlation_dump, run_sweep, RunOptions};
use thz_ris::{presets, report, verify};

/// Channel estimation experiments for RIS-aided THz links.
#[derive(Parser)]
#[command(name = "thz-ris", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset name instead of a file.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Option<ScenarioConfig>> {
        match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path).map(Some),
            (None, Some(name)) => presets::preset(name).map(Some),
            (None, None) => Ok(None),
        }
    }

    fn require(&self) -> Result<ScenarioConfig> {
        self.load()?
            .ok_or_else(|| Error::Config("either --config or --preset is required".into()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// NMSE-versus-SNR sweep (or the MG shape sweep if the scenario sets
    /// `alpha_grid`).
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        workers: Option<usize>,
        /// Skip LMMSE (lifts the M*K limit).
        #[arg(long)]
        ls_only: bool,
        /// Disable mutual coupling in the ground truth.
        #[arg(long)]
        no_coupling: bool,
        /// Also write the cascaded channels of the first 16 trials to
        /// `<out>.channels.csv` (or `channels.csv` when writing to stdout).
        #[arg(long)]
        dump_channels: bool,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump one link's ground-truth correlation matrix as CSV.
    Correlation {
        #[command(flatten)]
        source: Source,
        /// ris_ue, ris_bs or bs_ris.
        #[arg(long)]
        link: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the acceptance criteria.
    Verify {
        #[command(flatten)]
        source: Source,
    },
}

const DUMPED_TRIALS: usize = 16;

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            source,
            seed,
            workers,
            ls_only,
            no_coupling,
            dump_channels,
            out,
        } => {
            let mut cfg = source.require()?;
            if let Some(seed) = seed {
                cfg.scenario.seed = seed;
            }
            if no_coupling {
                cfg.coupling.enabled = false;
            }
            let opts = RunOptions {
                workers,
                ls_only,
                keep_channels: if dump_channels { DUMPED_TRIALS } else { 0 },
            };
            if cfg.scenario.alpha_grid.is_some() {
                let rows = run_alpha_sweep(&cfg, &opts)?;
                let resolved = cfg.resolve()?;
                write_output(out.as_deref(), &report::alpha_csv(&resolved, &rows)?)?;
            } else {
                let result = run_sweep(&cfg, &opts)?;
                write_output(out.as_deref(), &report::sweep_csv(&result)?)?;
                if dump_channels {
                    let path = match &out {
                        Some(p) => {
                            let mut s = p.clone().into_os_string();
                            s.push(".channels.csv");
                            PathBuf::from(s)
                        }
                        None => PathBuf::from("channels.csv"),
                    };
                    let text = report::channels_csv(&result.config, &result.channels)?;
                    write_output(Some(&path), &text)?;
                    log::info!("channels written to {}", path.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Correlation { source, link, out } => {
            let cfg = source.require()?;
            let (resolved, r) = run_correlation_dump(&cfg, &link)?;
            write_output(Some(&out), &report::correlation_csv(&resolved, &link, &r)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { source } => {
            let cfg = match source.load()? {
                Some(c) => c,
                None => presets::preset("default")?,
            };
            // surface config errors as validation failures before running
            cfg.resolve()?;
            let outcomes = verify::run_all(&cfg);
            for o in &outcomes {
                println!("{}", o.line());
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
