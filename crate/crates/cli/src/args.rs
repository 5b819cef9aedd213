use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "selfpower",
    version,
    about = "Self-powered sensor node analysis"
)]
pub struct Cli {
    /// Built-in parameter set to start from.
    #[arg(long, global = true, default_value = "mica2")]
    pub preset: String,
    /// JSON scenario merged over the preset.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Directory receiving CSV/JSON/SVG artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot into the output directory.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Format of the report printed to stdout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Step response of the harvester plant, open or closed loop.
    StepResponse(StepArgs),
    /// Ziegler-Nichols PID gains from ultimate parameters or a search.
    Tune(TuneArgs),
    /// Routh-Hurwitz table and stability verdict.
    Stability(StabilityArgs),
    /// Energy consumed by one activity cycle.
    Energy(EnergyArgs),
    /// Duty-cycle simulation of the node.
    Simulate(SimulateArgs),
    /// Print the resolved scenario in its on-disk form.
    ShowPreset,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    /// Close the loop with the tuned PID controller.
    #[arg(long)]
    pub closed_loop: bool,
    /// Plant parameters as mass,damping,stiffness.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub plant: Option<Vec<f64>>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Ultimate gain.
    #[arg(long, requires = "tu", conflicts_with = "search")]
    pub ku: Option<f64>,
    /// Ultimate period in seconds.
    #[arg(long, requires = "ku")]
    pub tu: Option<f64>,
    /// Search for the ultimate gain on the sampled loop.
    #[arg(long)]
    pub search: bool,
    #[arg(long)]
    pub sample_period: Option<f64>,
    #[arg(long)]
    pub gain_lo: Option<f64>,
    #[arg(long)]
    pub gain_hi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Characteristic polynomial coefficients, highest power first.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with = "closed_loop"
    )]
    pub poly: Option<Vec<f64>>,
    /// Use the closed-loop characteristic polynomial of the tuned PID loop.
    #[arg(long)]
    pub closed_loop: bool,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    /// Radio link distance in metres.
    #[arg(long)]
    pub distance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Harvest passively without the PID loop.
    #[arg(long)]
    pub no_controller: bool,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Keep every n-th step in the trace CSV.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}
