use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use qmem_cli::config::Format;
use qmem_cli::{run_experiment, CliError, Experiment, ExperimentConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    ClockVerify,
    DecodeTable,
    BpCurve,
    MemorySim,
    LifetimeScan,
    Ledger,
    OracleCheck,
}

impl Command {
    fn name(self) -> &'static str {
        qmem_cli::SUBCOMMANDS[self as usize]
    }
}

/// Quantum memory experiments under depolarizing noise.
#[derive(Debug, Parser)]
#[command(name = "qmem", version)]
struct Args {
    command: Command,
    /// JSON experiment config; its experiment must match the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Result file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Gnuplot-ready data file.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Ledger only: also run the feasibility search.
    #[arg(long)]
    search: bool,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn build_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let name = args.command.name();
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let c = ExperimentConfig::parse(&text)?;
            if c.experiment.name() != name {
                return Err(CliError::Invalid {
                    field: "experiment".into(),
                    reason: format!("config is for `{}`, subcommand is `{name}`", c.experiment.name()),
                });
            }
            c
        }
        None => ExperimentConfig {
            experiment: Experiment::default_for(name).expect("every subcommand has defaults"),
            master_seed: 0,
            out: None,
            format: Format::default(),
            plot: None,
        },
    };
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(n) = args.trials {
        match config.experiment.trials_mut() {
            Some(t) => *t = n,
            None => {
                return Err(CliError::Invalid {
                    field: "--trials".into(),
                    reason: format!("`{name}` takes no trial count"),
                })
            }
        }
    }
    if args.out.is_some() {
        config.out.clone_from(&args.out);
    }
    if let Some(f) = args.format {
        config.format = f;
    }
    if args.plot.is_some() {
        config.plot.clone_from(&args.plot);
    }
    if args.search {
        match &mut config.experiment {
            Experiment::Ledger(l) => l.search = true,
            _ => {
                return Err(CliError::Invalid {
                    field: "--search".into(),
                    reason: "only the ledger subcommand searches".into(),
                })
            }
        }
    }
    config.validate()?;
    Ok(config)
}

fn execute(args: &Args) -> Result<u8, CliError> {
    let config = build_config(args)?;
    let out = run_experiment(&config)?;
    match &config.out {
        Some(path) => write(path, &out.body)?,
        None => print!("{}", out.body),
    }
    if let (Some(path), Some(plot)) = (&config.plot, &out.plot) {
        write(path, plot)?;
    }
    println!("{}", out.summary);
    Ok(out.exit_code)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
