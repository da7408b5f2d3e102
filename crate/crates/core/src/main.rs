use clap::{Parser, Subcommand};
use elastic_corner::cli::{default_output_dir, list_experiments, run, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "elastic-corner", version, about = "Corner scattering and transmission eigenfunction experiments for the Lame system")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key=value config (or a previous manifest.json).
    Run {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List experiments, what each verifies, and their parameters with defaults.
    List,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::List => {
            print!("{}", list_experiments());
            ExitCode::SUCCESS
        }
        Command::Run { config, output_dir, seed } => {
            let result = std::fs::read_to_string(&config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))
                .and_then(|text| ExperimentConfig::parse(&text).map_err(|e| e.to_string()))
                .and_then(|mut cfg| {
                    if let Some(s) = seed {
                        cfg.seed = s;
                    }
                    if output_dir.is_some() {
                        cfg.output_dir = output_dir;
                    }
                    let dir = default_output_dir(&cfg);
                    run(&cfg, &dir).map_err(|e| e.to_string()).map(|r| (r, dir))
                });
            match result {
                Ok((report, dir)) => {
                    print!("{}", report.summary());
                    println!("outputs written to {}", dir.display());
                    if report.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
