use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::{debug, error, info};

use bmean::cli::{
    report_table, run_forward, run_invert, run_spectral, run_suites, ExperimentConfig, Mode, RunError, Table, Verdict,
};

/// Weighted spherical means: forward evaluation, reconstruction and checks.
#[derive(Parser, Debug)]
#[command(name = "bmean", version)]
struct Args {
    /// forward, invert, verify or spectral
    #[arg(value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<Mode>()))]
    mode: Mode,
    /// Experiment file (flat `key = value`).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; overrides `output` in the config. Stdout when neither is set.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Reserved for noise injection; currently unused.
    #[arg(long)]
    seed: Option<u64>,
}

fn write(table: &Table, dest: Option<&PathBuf>) -> Result<(), RunError> {
    let csv = table.to_csv();
    match dest {
        Some(p) => std::fs::write(p, csv)
            .map_err(|e| RunError::Numerical(bmean::Error::Invalid(format!("writing {}: {e}", p.display())))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run(args: &Args) -> Result<ExitCode, RunError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Config(format!("reading {}: {e}", args.config.display())))?;
    let cfg = ExperimentConfig::parse_with_mode(&text, Some(args.mode)).map_err(|e| RunError::Config(e.to_string()))?;
    let dest = args.output.as_ref().or(cfg.output.as_ref());
    if let Some(seed) = args.seed {
        debug!("seed {seed} accepted; no stochastic path uses it");
    }
    let table = match cfg.mode {
        Mode::Forward => run_forward(&cfg)?,
        Mode::Invert => run_invert(&cfg)?,
        Mode::Spectral => run_spectral(&cfg)?,
        Mode::Verify => {
            let reports = run_suites(cfg.tol, cfg.verify_spectral);
            write(&report_table(&reports), dest)?;
            let failed = reports.iter().filter(|r| r.verdict == Verdict::Fail).count();
            info!("{failed} of {} suites failed", reports.len());
            return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    };
    write(&table, dest)?;
    let failed = table.failed_rows();
    if failed > 0 {
        error!("{failed} rows failed; see the status column");
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BMEAN_LOG", "error"))
        .format_timestamp(None)
        .init();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bmean: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
