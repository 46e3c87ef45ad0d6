//! Command-line front end: `run`, `decay-study`, `audit` and `sweep-mu`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nsvfp_core::harness::{
    cmd_audit, cmd_decay_study, cmd_run, cmd_sweep_mu, resolve_out_dir, write_failure, OUT_DIR_ENV,
};
use nsvfp_core::{Error, RunConfig};

#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nsvfp",
    version,
    about = "Hermite-Fourier simulator for the fluid-kinetic NS-VFP and Euler-VFP systems",
    after_help = format!("The output directory is taken from --out, then ${OUT_DIR_ENV}, then [output].directory.\nExit codes: 0 success, 2 configuration error, 3 numerical failure or failed audit, 1 other errors.")
)]
struct Cli {
    /// Print a complete configuration file with every default and exit.
    #[arg(long)]
    print_default_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one model and write its diagnostics time series.
    Run(Common),
    /// Run NS-VFP and Euler-VFP from the same data and fit their decay.
    DecayStudy(Common),
    /// Run the invariant battery and write pass/fail JSON.
    Audit(Common),
    /// Inviscid-limit sweep over the configured viscosities.
    SweepMu(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used for anything missing.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Overrides init.seed.
    #[arg(long, value_name = "K")]
    seed: Option<u64>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InfeasibleAmplitude(_) => EXIT_CONFIG,
        Error::AuditFailed(_) => EXIT_NUMERICAL,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_default_config {
        print!("{}", RunConfig::default().to_toml_string());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(EXIT_CONFIG);
    };
    let (name, common) = match &command {
        Command::Run(c) => ("run", c),
        Command::DecayStudy(c) => ("decay-study", c),
        Command::Audit(c) => ("audit", c),
        Command::SweepMu(c) => ("sweep-mu", c),
    };
    let mut cfg = match &common.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(exit_code(&e));
            }
        },
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.init.seed = seed;
    }
    let out = resolve_out_dir(common.out.as_deref(), &cfg);
    let jobs = common
        .jobs
        .map(|j| j as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let result = match command {
        Command::Run(_) => cmd_run(&cfg, &out, jobs).map(|sim| {
            println!(
                "run: {} samples to t = {} in {} steps, output in {}",
                sim.records.len(),
                sim.state.t,
                sim.log.steps.len(),
                out.display()
            );
        }),
        Command::DecayStudy(_) => cmd_decay_study(&cfg, &out, jobs).map(|r| {
            println!(
                "decay-study: rate ns-vfp {:.6}, euler-vfp {:.6}, ratio {:.4}, monotone {}/{}, {}",
                r.ns.rate,
                r.euler.rate,
                r.rate_ratio,
                r.ns.monotone,
                r.euler.monotone,
                if r.passed { "pass" } else { "FAIL" }
            );
        }),
        Command::Audit(_) => cmd_audit(&cfg, &out, jobs).map(|r| {
            println!("audit: {} checks passed", r.checks.len());
        }),
        Command::SweepMu(_) => cmd_sweep_mu(&cfg, &out, jobs).map(|r| {
            for row in &r.rows {
                println!("mu = {:<12} sup_uf = {:.6e}", row.mu, row.sup_uf);
            }
            println!(
                "sweep-mu: slope {:.4} (band [{}, {}]) {}",
                r.slope_uf,
                r.slope_band.0,
                r.slope_band.1,
                if r.passed { "pass" } else { "FAIL" }
            );
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                match write_failure(&out, name, &e) {
                    Ok(p) => eprintln!("failure report written to {}", p.display()),
                    Err(w) => eprintln!("could not write failure report: {w}"),
                }
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
