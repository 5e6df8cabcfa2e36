//! `fluxline`: spectra, flux-modulation averages, crosstalk budgets,
//! diplexer checks and characterization fits from a device config.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "fluxline",
    version,
    about = "Flux-tunable transmon and XYZ-line analysis"
)]
struct Cli {
    /// Print machine-readable JSON summaries on stdout.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// f01 against static flux, closed form and diagonalization.
    Spectrum(SpectrumArgs),
    /// Time-averaged frequency against flux-modulation amplitude.
    Modulate(ModulateArgs),
    /// Spurious flux and frequency shift from a microwave pulse.
    Crosstalk(CrosstalkArgs),
    /// Synthesize the diplexer, sweep it and check the band spec.
    Diplexer(DiplexerArgs),
    /// Fit a characterization model to CSV data.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Device config (JSON).
    #[arg(env = "FLUXLINE_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    qubit: String,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    phi_min: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    phi_max: f64,
    /// Grid points; 1 evaluates at --phi-min only.
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Charge-basis size (odd, ≥ 11).
    #[arg(long, default_value_t = fluxline::transmon::DEFAULT_BASIS_SIZE)]
    basis: usize,
    /// CSV destination instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    qubit: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi_dc: f64,
    #[arg(long, default_value_t = 0.0)]
    ac_min: f64,
    #[arg(long, default_value_t = 0.3)]
    ac_max: f64,
    #[arg(long, default_value_t = 31)]
    points: usize,
    /// Explicit amplitudes (Φ0); overrides the grid. Repeatable.
    #[arg(long = "phi-ac", value_delimiter = ',')]
    phi_ac: Vec<f64>,
    /// Harmonic-series order.
    #[arg(long, short = 'p', default_value_t = fluxline::modulation::DEFAULT_ORDER)]
    order: usize,
    /// Also evaluate the numerical time average.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 512)]
    oracle_steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CrosstalkArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    qubit: String,
    /// Line attenuation at the qubit frequency, dB.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "chain")]
    gamma_db: Option<f64>,
    /// Take the attenuation from a named chain of the config.
    #[arg(long)]
    chain: Option<String>,
    /// Room-temperature pulse amplitude, V.
    #[arg(long, allow_negative_numbers = true)]
    v_p: f64,
    #[arg(long, default_value_t = 50.0)]
    r_ohm: f64,
    /// Mutual inductance override, fH (default: the qubit's m_fH).
    #[arg(long)]
    m_fh: Option<f64>,
    #[arg(long, default_value_t = fluxline::signal_chain::DEFAULT_LINEWIDTH_HZ)]
    linewidth_hz: f64,
}

#[derive(Debug, Args)]
struct DiplexerArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    lp_order: Option<usize>,
    #[arg(long)]
    bp_order: Option<usize>,
    /// JSON file with spec overrides.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the spec-check report (JSON) here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitKind {
    T1,
    Ramsey,
    Rb,
    Tuning,
    Beta,
}

#[derive(Debug, Args)]
struct FitArgs {
    kind: FitKind,
    /// CSV with columns x, y[, sigma].
    data: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    /// Qubit whose parameters a beta fit uses.
    #[arg(long)]
    qubit: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi_dc: f64,
    /// Hold E_C fixed (MHz) in a tuning fit.
    #[arg(long)]
    fixed_e_c: Option<f64>,
    /// Refine a tuning fit by diagonalization.
    #[arg(long)]
    refine_exact: bool,
    /// Write x, y, model, residual CSV here.
    #[arg(long)]
    residuals: Option<PathBuf>,
}

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<fluxline::Error> for CliError {
    fn from(e: fluxline::Error) -> Self {
        use fluxline::Error::*;
        let code = match e {
            NonConvergence { .. } | SingularJacobian => EXIT_NONCONVERGENCE,
            _ => EXIT_INPUT,
        };
        let mut message = e.to_string();
        if matches!(e, SeriesBoundary) {
            message.push_str(" (pass --oracle for the numerical time average)");
        }
        Self { code, message }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => commands::spectrum(a, cli.json),
        Command::Modulate(a) => commands::modulate(a, cli.json),
        Command::Crosstalk(a) => commands::crosstalk(a, cli.json),
        Command::Diplexer(a) => commands::diplexer(a, cli.json),
        Command::Fit(a) => commands::fit(a, cli.json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
