//! Command-line flags. The parsed [`RunConfig`] is embedded in every JSON
//! report and round-trips through JSON.

use std::path::PathBuf;

use chromapart::{Engine, MoveOrder, Neighborhood, SolveOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "chromapart", version, about = "Piecewise-constant restoration of damaged color images")]
pub struct RunConfig {
    #[command(flatten)]
    pub global: GlobalOptions,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum NeighborhoodArg {
    #[value(name = "4")]
    Four,
    #[value(name = "8")]
    Eight,
}

impl From<NeighborhoodArg> for Neighborhood {
    fn from(n: NeighborhoodArg) -> Self {
        match n {
            NeighborhoodArg::Four => Neighborhood::N4,
            NeighborhoodArg::Eight => Neighborhood::N8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GlobalOptions {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value = "4")]
    pub neighborhood: NeighborhoodArg,
    /// Weight of the color fidelity outside the damage.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 1.0)]
    pub lambda: f64,
    /// Weight of the grey fidelity inside the damage.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 1.0)]
    pub mu: f64,
    /// Fidelity exponent.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 2.0)]
    pub p: f64,
    /// Pixel spacing.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 1.0)]
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
pub enum Command {
    /// Restore a damaged image.
    Restore(RestoreArgs),
    /// Evaluate the energy of a label map.
    Energy(EnergyArgs),
    /// Exhaustive minimization on a tiny instance.
    Oracle(OracleArgs),
    /// Regularity diagnostics of a label map.
    Diagnose(DiagnoseArgs),
    /// Fit the grey distortion from calibration pixels.
    Fit(FitArgs),
    /// Build a damaged instance from a clean image.
    Synth(SynthArgs),
    /// Classify a distortion table as trivial or not.
    CheckL(CheckLArgs),
}

/// Files describing an instance.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InstanceArgs {
    /// Observed color image (P6).
    #[arg(long)]
    pub image: PathBuf,
    /// Damage mask (P5, value >= 128 is damaged); no damage if omitted.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Grey observation (P5); computed from the image through the table if omitted.
    #[arg(long)]
    pub grey: Option<PathBuf>,
    /// Distortion table (CSV); identity along the direction if omitted.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Color direction, overriding the table's (comma-separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub e: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum EngineArg {
    Expansion,
    Icm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum OrderArg {
    Sequential,
    /// Shuffled every sweep from --seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "expansion")]
    pub engine: EngineArg,
    #[arg(long, value_enum, default_value = "sequential")]
    pub order: OrderArg,
    #[arg(long, default_value_t = 20)]
    pub max_sweeps: usize,
}

impl SolverArgs {
    pub fn options(&self, seed: u64) -> SolveOptions {
        SolveOptions {
            max_sweeps: self.max_sweeps,
            move_order: match self.order {
                OrderArg::Sequential => MoveOrder::Sequential,
                OrderArg::Random => MoveOrder::RandomSeeded(seed),
            },
            engine: match self.engine {
                EngineArg::Expansion => Engine::Expansion,
                EngineArg::Icm => Engine::Icm,
            },
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RestoreArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Fixed palette file; otherwise the palette is free, started by k-means.
    #[arg(long, conflicts_with = "k")]
    pub palette: Option<PathBuf>,
    /// Number of colors of a free palette.
    #[arg(long, required_unless_present = "palette")]
    pub k: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 30)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub merge_tol: f64,
    /// Restored image (P6).
    #[arg(long)]
    pub out_image: PathBuf,
    /// Label map (P5, 1-based).
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
    /// Final palette.
    #[arg(long)]
    pub out_palette: Option<PathBuf>,
    /// Energy trace and diagnostics (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long)]
    pub palette: PathBuf,
    /// Label map (P5, 1-based).
    #[arg(long)]
    pub labels: PathBuf,
    /// Also write the JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long)]
    pub palette: PathBuf,
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DiagnoseArgs {
    /// Label map (P5, 1-based).
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub palette: PathBuf,
    /// Density radii in pixels.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 8.0])]
    pub radii: Vec<f64>,
    /// Elimination radii in pixels.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 8.0])]
    pub elimination_radii: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.02, 0.05, 0.1, 0.2])]
    pub etas: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Color image (P6).
    #[arg(long)]
    pub image: PathBuf,
    /// Grey image of the same scene (P5).
    #[arg(long)]
    pub grey: PathBuf,
    /// Calibration pixels (P5, value >= 128); all pixels if omitted.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
    /// Fitted table (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Clean color image (P6).
    #[arg(long)]
    pub clean: PathBuf,
    /// Damage mask (P5); random blobs covering --damage if omitted.
    #[arg(long, conflicts_with = "damage")]
    pub mask: Option<PathBuf>,
    /// Damaged fraction of random blob damage.
    #[arg(long, default_value_t = 0.0)]
    pub damage: f64,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub e: Option<Vec<f64>>,
    /// Standard deviation of the added Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub out_image: PathBuf,
    #[arg(long)]
    pub out_mask: PathBuf,
    /// Grey observation; not written when nothing is damaged.
    #[arg(long)]
    pub out_grey: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CheckLArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
