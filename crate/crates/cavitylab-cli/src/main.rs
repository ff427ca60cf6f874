mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use output::Format;

/// Numerical laboratory for coupled atom-cavity arrays: polariton qubits,
/// measurement-mediated gates, dissipation, and a native-gate compiler.
#[derive(Debug, Parser)]
#[command(name = "cavitylab", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration: JSON for analysis subcommands, circuit text for
    /// `compile`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// RNG seed (sampled measurement outcomes, selftest battery).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Tabular output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Forced measurement outcomes in schedule order, e.g. "0" or "0110".
    #[arg(long, global = true)]
    pub force_outcome: Option<String>,

    /// Hilbert-space dimension guard for the heavy subcommands.
    #[arg(long, global = true)]
    pub cap_dim: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Photonic band omega(k) of the cavity chain with a hopping-matrix
    /// eigenvalue cross-check.
    Dispersion,
    /// Single-site Jaynes-Cummings levels against the dressed-state formula.
    Spectrum,
    /// Polariton-to-spin reduction quality over a g/A sweep.
    Reduce,
    /// One mediated two-qubit gate on the three-site chain.
    Gate,
    /// Heralded-gate fidelity over a (kappa, gamma) grid.
    NoiseSweep,
    /// Lower a logical circuit to a native schedule.
    Compile,
    /// Run a native schedule and report every retained branch.
    Simulate,
    /// The three technology profiles as ratio-based configs.
    Presets,
    /// Built-in verification battery.
    Selftest,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
