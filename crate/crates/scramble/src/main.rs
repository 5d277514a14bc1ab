use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scramble::config::ExperimentConfig;
use scramble::error::{RunError, RunResult};
use scramble::{figures, manifest, verify, Method};

#[derive(Parser)]
#[command(name = "scramble", version, about = "Scrambling and entanglement dynamics of collective spin models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and/or overrides.
    Run {
        config: Option<PathBuf>,
        /// `key=value` override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Regenerate the data of a named figure.
    Figure {
        name: Option<String>,
        /// Output directory (default `figures/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// List the recipes and exit.
        #[arg(long)]
        list: bool,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the acceptance checks.
    Verify {
        /// Criterion numbers to run (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn build_config(path: Option<&PathBuf>, sets: &[String]) -> RunResult<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for s in sets {
        cfg.apply_override(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig) -> RunResult<()> {
    let threads = cfg.effective_threads()?;
    let m = manifest::run_with_threads(cfg, threads)?;
    for o in &m.outputs {
        println!("{}", cfg.output.directory.join(&o.file).display());
    }
    println!("{}", cfg.output.directory.join(manifest::MANIFEST_FILE).display());
    Ok(())
}

fn dispatch(cli: Cli) -> RunResult<ExitCode> {
    match cli.command {
        Command::Run { config, set } => {
            execute(&build_config(config.as_ref(), &set)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Figure { name, out, list, set } => {
            if list {
                for r in figures::RECIPES {
                    println!("{:<18} {}", r.name, r.description);
                }
                return Ok(ExitCode::SUCCESS);
            }
            let name = name.ok_or_else(|| RunError::config("figure name required (see --list)"))?;
            let mut cfg = build_config(None, &set)?;
            cfg.method = Method::Figure(name.clone());
            cfg.output.directory = out.unwrap_or_else(|| PathBuf::from("figures").join(&name));
            execute(&cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { only } => {
            let threads = scramble::config::thread_cap(usize::MAX, std::env::var("SCRAMBLE_THREADS").ok().as_deref())?;
            let threads = if threads == usize::MAX { rayon::current_num_threads() } else { threads };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| RunError::config(format!("cannot start {threads} workers: {e}")))?;
            let reports = pool.install(|| verify::run_selected(&only, |r| println!("{}", r.render())));
            if reports.is_empty() {
                return Err(RunError::config(format!("no criteria match {only:?}")));
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed", reports.len() - failed, reports.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("scramble: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
