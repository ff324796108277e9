use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use renormlab_core::io::{read_any, AnyFile};
use renormlab_lab::{run_experiment, ExperimentConfig, LabError};

#[derive(Parser)]
#[command(name = "renormlab", version, about = "Numerical experiments on renormalized stochastic continuity equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Run the acceptance suite; an optional config supplies seed, member count and debug flags.
    Accept { config: Option<PathBuf> },
    /// Print the header of a .fld or .flo file.
    Inspect { file: PathBuf },
}

fn threads(cfg: Option<&ExperimentConfig>) -> Result<Option<usize>, LabError> {
    match std::env::var("RENORMLAB_THREADS") {
        Ok(v) => v.parse().map(Some).map_err(|_| LabError::Config(vec![format!("RENORMLAB_THREADS={v:?} is not a count")])),
        Err(_) => Ok(cfg.and_then(|c| c.threads)),
    }
}

fn execute(cli: Cli) -> Result<bool, LabError> {
    let cfg = match &cli.command {
        Command::Run { config } => Some(ExperimentConfig::load(config)?),
        Command::Accept { config: Some(p) } => {
            let mut c = ExperimentConfig::load(p)?;
            c.experiment = "acceptance_all".into();
            Some(c)
        }
        Command::Accept { config: None } => Some(ExperimentConfig::acceptance_default()),
        Command::Inspect { file } => {
            match read_any(file).map_err(|e| LabError::context(file.display().to_string(), e))? {
                AnyFile::Field(f) => println!("{}", serde_json::to_string_pretty(&f.header).unwrap_or_default()),
                AnyFile::Flow(f) => println!("{}", serde_json::to_string_pretty(&f.header).unwrap_or_default()),
            }
            return Ok(true);
        }
    };
    let cfg = cfg.expect("config for run and accept");
    if let Some(n) = threads(Some(&cfg))? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| LabError::Io(e.to_string()))?;
    }
    let out = run_experiment(&cfg)?;
    if let Some(r) = &out.report {
        for c in &r.checks {
            println!("{}", c.line());
        }
    }
    for f in &out.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(out.report.map_or(true, |r| r.all_passed()))
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
