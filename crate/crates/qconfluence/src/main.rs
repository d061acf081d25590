use clap::{Parser, Subcommand};
use qconfluence::harness::commands::{self, CliOverrides, Outcome};
use qconfluence::harness::config::ExperimentConfig;
use qconfluence::solutions::ConnectionMode;
use qconfluence::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "qconfluence", version, about = "q-difference solutions and their confluence to summed differential solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated q values, replacing the config list.
    #[arg(long, global = true, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Pass threshold for residual and identity checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads for grid evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// pure | with-constants
    #[arg(long, global = true)]
    mode: Option<ConnectionMode>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run the invariant suite; exit status 1 on any failure.
    Verify,
    /// Print the admissible direction and the decay arcs.
    Directions,
    /// Print the deformed coefficients for each q.
    Deform,
    /// Evaluate q-functions and solutions at configured points.
    Eval,
    /// Compare q-side and differential solutions on a grid.
    Confluence,
}

fn load(cli: &Cli, overrides: &CliOverrides) -> Result<Option<ExperimentConfig>> {
    match &cli.config {
        None => Ok(None),
        Some(path) => {
            let mut cfg = ExperimentConfig::load(path)?;
            overrides.apply(&mut cfg)?;
            Ok(Some(cfg))
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let overrides = CliOverrides {
        q: cli.q.clone(),
        tol: cli.tol,
        mode: cli.mode,
    };
    let cfg = load(cli, &overrides)?;
    let out = cli.out.as_deref();
    if let Command::Verify = cli.command {
        return commands::verify(cfg.as_ref(), &overrides, out);
    }
    let cfg = cfg.ok_or_else(|| Error::Config("this command needs --config".into()))?;
    match cli.command {
        Command::Directions => commands::directions(&cfg, out),
        Command::Deform => commands::deform(&cfg, out),
        Command::Eval => commands::eval(&cfg, out),
        Command::Confluence => commands::confluence(&cfg, out),
        Command::Verify => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            print!("{}", o.text);
            if o.report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
