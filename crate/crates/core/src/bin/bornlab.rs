use std::path::PathBuf;
use std::process::ExitCode;

use bornlab::cli::{self, Command, Evolution, Format, RunOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bornlab", version, about = "Seeded weight-exponent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the p-norm isometry generator dimension over an (n, p) grid.
    IsometryScan(Flags),
    /// Functional-equation residuals of x^p.
    CauchyCheck(Flags),
    /// Recover p from exact x^p samples.
    FitExponent(Flags),
    /// Max total-weight drift under Haar unitaries.
    Drift(Flags),
    /// Sample individual trajectories.
    Simulate(Flags),
    /// Chi-square test of outcome frequencies.
    BornTest(Flags),
}

#[derive(Args)]
struct Flags {
    /// Comma-separated dimensions.
    #[arg(long = "n", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Comma-separated weight exponents.
    #[arg(long = "p", value_delimiter = ',', allow_negative_numbers = true)]
    p: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Comma-separated squared magnitudes of the initial amplitudes.
    #[arg(long, value_delimiter = ',')]
    amps: Option<Vec<f64>>,
    /// Comma-separated phases in radians.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    phases: Option<Vec<f64>>,
    /// identity, hadamard or haar step before each record.
    #[arg(long)]
    evolution: Option<String>,
    #[arg(long)]
    stages: Option<usize>,
}

fn options(flags: Flags) -> bornlab::Result<RunOptions> {
    Ok(RunOptions {
        n_values: flags.n,
        p_values: flags.p,
        trials: flags.trials,
        seed: flags.seed,
        output_path: flags.output,
        format: flags.format.as_deref().map(str::parse::<Format>).transpose()?,
        amps: flags.amps,
        phases: flags.phases,
        evolution: flags.evolution.as_deref().map(str::parse::<Evolution>).transpose()?,
        stages: flags.stages,
    })
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (command, flags) = match args.command {
        Cmd::IsometryScan(f) => (Command::IsometryScan, f),
        Cmd::CauchyCheck(f) => (Command::CauchyCheck, f),
        Cmd::FitExponent(f) => (Command::FitExponent, f),
        Cmd::Drift(f) => (Command::Drift, f),
        Cmd::Simulate(f) => (Command::Simulate, f),
        Cmd::BornTest(f) => (Command::BornTest, f),
    };
    let result = options(flags)
        .and_then(|o| o.resolve(command))
        .and_then(|config| cli::run(&config, &mut std::io::stdout().lock()));
    match result {
        Ok(_) => ExitCode::from(cli::EXIT_OK as u8),
        Err(e) => {
            eprintln!("bornlab {command}: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
