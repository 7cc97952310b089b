// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use strobo_core::commands::{run, Command, CommandError, Context};

#[derive(Parser)]
#[command(name = "strobo", version, about = "Stroboscopic analysis of a periodically dephased resonator")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Bath-induced rate, drive and their integrals over time.
    Rates(Args),
    /// Observable time series, dense and stroboscopic.
    Evolve(Args),
    /// Monodromy multipliers and Floquet exponents.
    Spectrum(Args),
    /// Wigner function snapshots.
    Wigner(Args),
    /// Photon number and quadratures of individual bath modes.
    Bath(Args),
    /// Determinant and divisibility series of the monodromy.
    Divisibility(Args),
    /// Run the invariant checks for a configuration.
    Verify(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "STROBO_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the summary to stdout.
    #[arg(long, value_enum, default_value_t = Output::Quiet)]
    print: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Quiet,
    Summary,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Sub::Rates(a) => (Command::Rates, a),
        Sub::Evolve(a) => (Command::Evolve, a),
        Sub::Spectrum(a) => (Command::Spectrum, a),
        Sub::Wigner(a) => (Command::Wigner, a),
        Sub::Bath(a) => (Command::Bath, a),
        Sub::Divisibility(a) => (Command::Divisibility, a),
        Sub::Verify(a) => (Command::Verify, a),
    };
    if args.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global() {
            eprintln!("strobo: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = Context::load(&args.config, &args.out, args.seed).and_then(|ctx| run(cmd, &ctx));
    match result {
        Ok(summary) => {
            if args.print == Output::Summary {
                println!("{summary:#}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("strobo {}: {e}", cmd.name());
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &CommandError) -> u8 {
    e.exit_code() as u8
}
