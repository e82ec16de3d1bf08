use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use amsbq::experiment::{compare, run, RunConfig};
use amsbq::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "amsbq", version, about = "Active multi-source Bayesian quadrature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its convergence CSV.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run several configurations over their seeds and summarise them.
    Compare {
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Relative-error threshold for cost-to-tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, value_parser = ["mi", "ivr", "ip"])]
    acq: Option<String>,
    #[arg(long)]
    allow_pathological: bool,
    /// CSV destination (`run`) or summary CSV destination (`compare`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig, with_out: bool) -> Result<(), Error> {
        if let Some(s) = self.seed {
            c.seeds = vec![s];
        }
        if let Some(b) = self.budget {
            c.budget = b;
        }
        if let Some(a) = &self.acq {
            c.acquisition = a.parse()?;
        }
        if self.allow_pathological {
            c.allow_pathological = true;
        }
        if with_out {
            if let Some(o) = &self.out {
                c.out = Some(o.clone());
            }
        }
        Ok(())
    }
}

fn usage(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AMSBQ_LOG", "warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let mut c = match RunConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => return usage(e),
            };
            if let Err(e) = overrides.apply(&mut c, true) {
                return usage(e);
            }
            let result = match run(&c) {
                Ok(r) => r,
                Err(e @ Error::Config(_)) => return usage(e),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            if c.out.is_none() {
                print!("{}", result.csv);
            }
            if let Some(last) = result.rows.last() {
                eprintln!(
                    "{}: E[Z] = {:.8} (relative error {:.3e}) after cost {:.4}",
                    result.label, last.ez, last.rel_err, last.cum_cost
                );
            }
            if let Some(e) = result.error {
                eprintln!("error: run stopped early: {e}");
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Command::Compare { configs, overrides, tolerance } => {
            let mut parsed = Vec::new();
            for p in &configs {
                let mut c = match RunConfig::from_file(p) {
                    Ok(c) => c,
                    Err(e) => return usage(e),
                };
                if let Err(e) = overrides.apply(&mut c, false) {
                    return usage(e);
                }
                parsed.push(c);
            }
            let cmp = match compare(&parsed, tolerance) {
                Ok(c) => c,
                Err(e @ Error::Config(_)) => return usage(e),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            print!("{}", cmp.to_table());
            let _ = std::io::stdout().flush();
            if let Some(out) = &overrides.out {
                if let Err(e) = std::fs::write(out, cmp.to_csv()) {
                    eprintln!("error: {}: {e}", out.display());
                    return ExitCode::FAILURE;
                }
            }
            let failed: usize = cmp.summaries.iter().map(|s| s.failed).sum();
            if failed > 0 {
                eprintln!("error: {failed} run(s) stopped early");
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
    }
}
