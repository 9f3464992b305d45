use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use lem_cli::{acceptance, decay, parse_config, report, run_sweep};

#[derive(Parser)]
#[command(name = "lem", version, about = "Local exponential method benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every case of a configuration file and write a CSV report.
    Run {
        config: PathBuf,
        /// Report path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads per run for the subdomain loop.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        workers: u64,
        /// Skip timing; grid cells then run concurrently.
        #[arg(long)]
        no_timing: bool,
    },
    /// Tabulate the off-diagonal decay of exp(dt A) for a case.
    Decay {
        /// advection1d or a configuration case name.
        case: String,
        #[arg(long)]
        courant: f64,
        #[arg(long)]
        out: PathBuf,
        /// Unknowns per axis, overriding the case default.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Criteria to run; all when empty.
        #[arg(long = "only", value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, out, workers, no_timing } => {
            let cases = parse_config(&config)?;
            let mut rows = Vec::new();
            for case in &cases {
                log::info!("running {} ({} cells)", case.kind, case.cells.len());
                rows.extend(run_sweep(case, workers as usize, !no_timing)?);
            }
            let failed = rows.iter().filter(|r| r.failed()).count();
            if failed > 0 {
                log::warn!("{failed} of {} runs failed; see the warnings column", rows.len());
            }
            match out {
                Some(path) => report::emit_csv(&rows, &path)?,
                None => report::write_csv(&rows, io::stdout().lock())?,
            }
            Ok(true)
        }
        Command::Decay { case, courant, out, n } => {
            let profile = decay::decay_profile_for_case(&case, courant, n)?;
            std::fs::write(&out, profile.to_table()).with_context(|| format!("writing {}", out.display()))?;
            log::info!("rho = {:.3e}, bandwidth {}, {} bound violations", profile.rho, profile.bandwidth, profile.violations);
            Ok(true)
        }
        Command::Verify { only } => {
            let ids: Vec<u8> = if only.is_empty() { acceptance::CRITERIA.iter().map(|(id, _)| *id).collect() } else { only };
            let mut all = true;
            for id in ids {
                let outcome = acceptance::run_criterion(id);
                println!("{outcome}");
                all &= outcome.passed;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
