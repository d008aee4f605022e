use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use cosserat_mfe::experiments::{format_rates, rates_from_csv, run_experiment, ExperimentConfig, ExperimentKind};
use cosserat_mfe::properties;

#[derive(Parser)]
#[command(name = "cosserat-mfe", version, about = "Mixed finite element studies for Cosserat elasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a TOML config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the `jobs` entry of the config.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the invariant suite and print one line per property.
    Properties,
    /// Print convergence rates of a table written by `run`.
    Rates {
        #[arg(long)]
        csv: PathBuf,
    },
}

fn run_properties() -> ExitCode {
    let mut failed = 0;
    for p in properties::all() {
        let t = Instant::now();
        let o = (p.run)();
        failed += usize::from(!o.passed);
        println!(
            "{} {}::{} ({:.1}s) {}",
            if o.passed { "PASS" } else { "FAIL" },
            p.module,
            p.name,
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Properties => run_properties(),
        Command::Rates { csv } => match rates_from_csv(&csv) {
            Ok(r) => {
                print!("{}", format_rates(&r));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Run { config, jobs } => {
            let exp = ExperimentConfig::load(&config).and_then(|mut c| {
                if let Some(j) = jobs {
                    c.jobs = j;
                }
                c.validate()
            });
            let exp = match exp {
                Ok(e) => e,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            if exp.kind == ExperimentKind::Properties {
                return run_properties();
            }
            match run_experiment(&exp) {
                Ok(report) => {
                    println!("wrote {} and {}", report.csv_path.display(), report.plot_path.display());
                    print!("{}", format_rates(&cosserat_mfe::experiments::series_rates(&report.rows)));
                    for (key, chk) in &report.elastic_checks {
                        println!(
                            "{key} n={}: max |omega~_h| on the elastic block {:.3e}, global {:.3e}, ratio {:.2e}",
                            chk.n,
                            chk.elastic_max,
                            chk.global_max,
                            chk.ratio()
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
