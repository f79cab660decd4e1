use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualep_core::{Family, PauliIndex};

mod commands;
mod output;

use output::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "dualep",
    version,
    about = "Dual-unitary gate families with exceptional points: solve, correlate, diagnose",
    after_help = "Exit codes: 0 success, 2 invalid input or violated constraint, 3 numerical failure, 1 I/O error.\n\
                  Site labels: half-integer site x maps to qubit 2x mod 2L (so 0.5 -> 1, 1 -> 2)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive the gate family parameters and report the transfer-matrix Jordan structure.
    Solve(SolveArgs),
    /// Light-cone correlators: closed form, transfer-matrix power and circuit evolution.
    Correlate(CorrelateArgs),
    /// Z-transform and Fourier diagnostics below, at and above the exceptional point.
    Spectral(SpectralArgs),
    /// Kicked XXZ Floquet correlator with decay-model fits.
    Floquet(FloquetArgs),
    /// Randomized property checks on gates and transfer matrices.
    Check(CheckArgs),
}

#[derive(Args, Debug, Clone)]
#[group(id = "angle", required = true, multiple = false)]
struct AngleArgs {
    /// Phi in radians.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Phi as an exact multiple of pi, e.g. 5/48.
    #[arg(long = "pi-frac", value_name = "P/Q", allow_hyphen_values = true)]
    pi_frac: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    /// ep2 or ep3 (jordan2, jordan3 accepted).
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[command(flatten)]
    angle: AngleArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Detuning from the exceptional point.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    /// Write the JSON bundle here; without it the bundle goes to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long, default_value_t = 4)]
    t_max: u32,
    /// Ring size L (2L qubits).
    #[arg(long = "ring-l", short = 'L', default_value_t = 5)]
    ring_l: usize,
    /// Half-integer site label of the initial operator. Odd qubits follow the M+ edge.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    y: f64,
    /// Comma-separated channels such as xz,xy, or "all".
    #[arg(long, default_value = "all")]
    channels: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectralArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Detuning magnitude; blocks are written for -|delta|, 0 and +|delta|.
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    delta: f64,
    /// Truncation of the numeric Z-sum.
    #[arg(long, default_value_t = 200)]
    t_max: u32,
    #[arg(long, default_value_t = 1.5)]
    radius: f64,
    #[arg(long, default_value_t = 64)]
    points: usize,
    /// Number of Fourier frequencies on [0, pi).
    #[arg(long, default_value_t = 256)]
    omegas: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Data file; the pole report is written next to it as <output>.poles.json.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct FloquetArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long = "ring-l", short = 'L', default_value_t = 5)]
    ring_l: usize,
    #[arg(long, default_value_t = 10)]
    t_max: u32,
    #[arg(long, default_value = "x", value_parser = parse_pauli)]
    alpha: PauliIndex,
    #[arg(long, default_value = "z", value_parser = parse_pauli)]
    beta: PauliIndex,
    /// Drop the single-site kicks, leaving the bare XXZ layers.
    #[arg(long)]
    kicks_off: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Series file; fits are written next to it as <output>.fits.json.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random gates and family points to sample.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: dualep_core::Error| e.to_string())
}

fn parse_pauli(s: &str) -> Result<PauliIndex, String> {
    PauliIndex::parse(s).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Correlate(a) => commands::correlate(&a),
        Command::Spectral(a) => commands::spectral(&a),
        Command::Floquet(a) => commands::floquet(&a),
        Command::Check(a) => commands::check(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
