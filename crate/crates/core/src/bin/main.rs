use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phonon_entanglement::experiments::selftest::run_selftest;
use phonon_entanglement::experiments::{
    emit_figure_data, fit_negativity_surface, run_sweep, write_fit_files, write_sweep_files, FigureId, FigureOptions, SweepOutcome, SweepSpec,
};
use phonon_entanglement::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "phonon-entanglement", version, about = "Qubit-phonon entanglement sweeps and figure data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file with sweep settings; unspecified fields keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Largest environment basis per evaluation.
    #[arg(long, global = true)]
    dim_cap: Option<usize>,
    /// Sweep points evaluated concurrently.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Assert that no random numbers are used (none ever are).
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Coherence for several mode counts and the continuum limit.
    Fig2,
    /// Negativity against time at several temperatures.
    Fig3,
    /// Maximum Negativity against temperature.
    Fig4,
    /// Negativity against time for several mode counts.
    Fig5,
    /// Maximum Negativity against mode count, with the fitted surface.
    Fig6,
    /// Maximum Negativity over the configured (n, T) grid.
    Sweep,
    /// Sweep, then fit the N_max surface.
    Fit,
    /// Quick internal consistency checks.
    Selftest,
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

/// Exit code for a sweep: that of the first failure when no point succeeded.
fn report_skipped(outcome: &SweepOutcome) -> u8 {
    for s in &outcome.skipped {
        eprintln!("skipped n = {}, T = {}: {}", s.n, s.temperature, s.reason);
    }
    match (outcome.records.is_empty(), outcome.skipped.first()) {
        (true, Some(first)) => first.exit_code as u8,
        _ => 0,
    }
}

fn sweep_spec(cli: &Cli) -> Result<SweepSpec> {
    let mut spec = match &cli.config {
        Some(path) => SweepSpec::load(path)?,
        None => SweepSpec::default(),
    };
    if let Some(cap) = cli.dim_cap {
        spec.policy.dim_cap = cap;
    }
    if let Some(threads) = cli.threads {
        spec.threads = threads;
    }
    spec.validate()?;
    Ok(spec)
}

fn out_dir<'a>(cli: &'a Cli, spec: &'a SweepSpec) -> &'a Path {
    if cli.out.as_os_str() == "out" {
        spec.output.as_deref().unwrap_or(&cli.out)
    } else {
        &cli.out
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let figure = match cli.command {
        Command::Fig2 => Some(FigureId::Fig2),
        Command::Fig3 => Some(FigureId::Fig3),
        Command::Fig4 => Some(FigureId::Fig4),
        Command::Fig5 => Some(FigureId::Fig5),
        Command::Fig6 => Some(FigureId::Fig6),
        _ => None,
    };
    if let Some(figure) = figure {
        let config = cli.config.as_deref().map(SweepSpec::load).transpose()?;
        let out = match (&config, cli.out.as_os_str() == "out") {
            (Some(SweepSpec { output: Some(dir), .. }), true) => dir.clone(),
            _ => cli.out.clone(),
        };
        let options = FigureOptions { out_dir: out, config, dim_cap: cli.dim_cap, threads: cli.threads };
        print_paths(&emit_figure_data(figure, &options)?);
        return Ok(0);
    }
    match cli.command {
        Command::Sweep => {
            let spec = sweep_spec(cli)?;
            let outcome = run_sweep(&spec)?;
            print_paths(&write_sweep_files("sweep", &spec, &outcome, out_dir(cli, &spec))?);
            Ok(report_skipped(&outcome))
        }
        Command::Fit => {
            let spec = sweep_spec(cli)?;
            let outcome = run_sweep(&spec)?;
            print_paths(&write_fit_files("fit", &spec, &outcome, out_dir(cli, &spec))?);
            match report_skipped(&outcome) {
                0 => fit_negativity_surface(&outcome.records).map(|_| 0),
                code => Ok(code),
            }
        }
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                Ok(0)
            } else {
                Err(Error::Numerical("self-test failed".into()))
            }
        }
        _ => unreachable!("figure commands handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
