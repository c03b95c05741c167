use clap::{Parser, Subcommand};
use kerrcat_cli::config::{self, ConfigError};
use kerrcat_cli::experiments::{run_experiment, Experiment};
use kerrcat_cli::{acceptance, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Truncated-register simulator and closed-form companion sweeps for
/// cross-Kerr cat-state protocols.
#[derive(Parser)]
#[command(name = "kerrcat", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and write its CSV table.
    Run {
        /// Flat key = value config file.
        #[arg(long)]
        config: PathBuf,
        /// Override single keys, applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output CSV path; wins over the config's own `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria and report PASS or FAIL per criterion.
    Validate {
        /// Smaller grids where a criterion allows them.
        #[arg(long)]
        fast: bool,
    },
    /// List the experiment catalog.
    ListExperiments,
}

/// Exit codes: 0 success, 1 run or validation failure, 2 config error.
fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, set, out } => run(config, &set, out),
        Command::Validate { fast } => validate(fast),
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<18} {}", e.name(), e.summary());
            }
            ExitCode::SUCCESS
        }
    }
}

fn config_failure(err: &ConfigError) -> ExitCode {
    eprintln!("config error: {err}");
    ExitCode::from(2)
}

fn run(config_path: PathBuf, set: &[String], out: Option<PathBuf>) -> ExitCode {
    let text = match std::fs::read_to_string(&config_path) {
        Ok(text) => text,
        Err(source) => {
            return config_failure(&ConfigError::Unreadable {
                path: config_path.display().to_string(),
                source,
            })
        }
    };
    let cfg = match config::from_sources(&text, set) {
        Ok(cfg) => cfg,
        Err(err) => return config_failure(&err),
    };
    let out_path = match config::resolve_out(&cfg, out) {
        Ok(path) => path,
        Err(err) => return config_failure(&err),
    };
    let table = match run_experiment(&cfg) {
        Ok(table) => table,
        Err(err) => {
            eprintln!("run error: {err}");
            return ExitCode::from(1);
        }
    };
    if let Err(source) = std::fs::write(&out_path, table.to_csv()) {
        let err = RunError::Write {
            path: out_path.display().to_string(),
            source,
        };
        eprintln!("run error: {err}");
        return ExitCode::from(1);
    }
    println!(
        "wrote {} rows of {} to {}",
        table.n_rows(),
        cfg.experiment.name(),
        out_path.display()
    );
    ExitCode::SUCCESS
}

fn validate(fast: bool) -> ExitCode {
    let reports = acceptance::run_all(fast);
    for report in &reports {
        println!("{}", report.render());
    }
    println!("{}", acceptance::summary_line(&reports));
    if reports.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
