//! Piecewise-constant restoration of damaged color images.
//!
//! An image is approximated by a labeling into `k` palette colors that
//! minimizes a weighted-perimeter Potts energy: interfaces cost their
//! length times the distance between the two colors, undamaged pixels are
//! pulled toward the observed color, and damaged pixels toward a grey
//! observation through a monotone distortion `L(a·e)`.
//!
//! Labels are 0-based in memory; files and reports use 1-based numbers.

pub mod diagnostics;
pub mod distortion;
pub mod energy;
pub mod error;
pub mod free_palette;
pub mod geometry;
pub mod mincut;
pub mod model;
pub mod oracle;
pub mod raster;
pub mod solver;
pub mod validate;

pub use distortion::{fit_distortion, random_blob_mask, synthesize_instance, DistortionTable, Extrapolation};
pub use energy::{total_energy, EnergyBreakdown};
pub use error::{Error, Result};
pub use free_palette::{solve_free_palette, FreePaletteOptions, PaletteSolveResult};
pub use geometry::{EdgeWeights, GridGeometry, Neighborhood};
pub use model::{Instance, ModelParams, Palette};
pub use raster::{ColorImage, DamageMask, GreyObservation, Labeling};
pub use solver::{solve_fixed_palette, Engine, MoveOrder, SolveOptions, SolveTrace};
pub use validate::{validate_instance, ValidationReport};
