//! Palettes, model weights and the assembled restoration instance.

use serde::{Deserialize, Serialize};

use crate::distortion::DistortionTable;
use crate::error::{Error, Result};
use crate::geometry::{EdgeWeights, GridGeometry};
use crate::raster::{ColorImage, DamageMask, GreyObservation, Labeling};

/// Ordered list of colors in `ℝ^M`; labels index into it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    channels: usize,
    colors: Vec<Vec<f64>>,
}

impl Palette {
    pub fn new(colors: Vec<Vec<f64>>) -> Result<Self> {
        let channels = colors.first().map(Vec::len).ok_or_else(|| Error::InvalidValue("palette is empty".into()))?;
        if channels == 0 {
            return Err(Error::InvalidValue("palette colors need at least one channel".into()));
        }
        for (i, c) in colors.iter().enumerate() {
            if c.len() != channels {
                return Err(Error::InvalidValue(format!(
                    "palette color {i} has {} channels, expected {channels}",
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidValue(format!("palette color {i} is not finite")));
            }
        }
        Ok(Self { channels, colors })
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn color(&self, i: usize) -> &[f64] {
        &self.colors[i]
    }

    pub fn colors(&self) -> &[Vec<f64>] {
        &self.colors
    }

    pub fn into_colors(self) -> Vec<Vec<f64>> {
        self.colors
    }

    /// Euclidean distance `|a_i − a_j|`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(&self.colors[i], &self.colors[j])
    }

    /// `|a_i − a_j| < |a_i − a_l| + |a_l − a_j|`, for distinct `i, j, l`.
    pub fn strict_triangle(&self, i: usize, j: usize, l: usize) -> bool {
        debug_assert!(i != j && j != l && i != l);
        self.distance(i, j) < self.distance(i, l) + self.distance(l, j)
    }

    /// Pairs `(i, j)`, `i < j`, of exactly equal colors.
    pub fn duplicate_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.colors[i] == self.colors[j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Row-major `k × k` table of color distances.
    pub fn distance_table(&self) -> Vec<f64> {
        let k = self.len();
        let mut d = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                d[i * k + j] = self.distance(i, j);
            }
        }
        d
    }

    /// Index of the nearest color to `v`, smallest index on ties.
    pub fn nearest(&self, v: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.colors.iter().enumerate() {
            let d = euclidean(c, v);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Projection `a_i · e` of every color.
    pub fn projections(&self, e: &[f64]) -> Vec<f64> {
        self.colors.iter().map(|c| dot(c, e)).collect()
    }

    /// Renders a labeling as an image, clamping colors to `[0, 1]`.
    pub fn render(&self, labeling: &Labeling) -> Result<ColorImage> {
        labeling.check_range(self.len())?;
        let data = labeling
            .as_slice()
            .iter()
            .flat_map(|&l| self.colors[l].iter().map(|v| v.clamp(0.0, 1.0)))
            .collect();
        ColorImage::new(*labeling.geometry(), self.channels, data)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weights `λ` (fidelity outside the damage), `μ` (grey fidelity inside)
/// and the fidelity exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lambda: f64,
    mu: f64,
    p: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: f64, p: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidValue(format!("lambda must be > 0, got {lambda}")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidValue(format!("mu must be > 0, got {mu}")));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidValue(format!("p must be >= 1, got {p}")));
        }
        Ok(Self { lambda, mu, p })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { lambda: 1.0, mu: 1.0, p: 2.0 }
    }
}

/// Everything except the palette: datum, damage, grey record, distortion
/// and weights. Geometry and neighborhood come from the image.
#[derive(Debug, Clone)]
pub struct Instance {
    image: ColorImage,
    mask: DamageMask,
    grey: GreyObservation,
    table: DistortionTable,
    params: ModelParams,
    weights: EdgeWeights,
}

impl Instance {
    pub fn new(
        image: ColorImage,
        mask: DamageMask,
        grey: GreyObservation,
        table: DistortionTable,
        params: ModelParams,
    ) -> Result<Self> {
        let geom = *image.geometry();
        if !geom.same_lattice(mask.geometry()) {
            return Err(Error::GeometryMismatch("mask and image lattices differ".into()));
        }
        if !geom.same_lattice(grey.geometry()) {
            return Err(Error::GeometryMismatch("grey observation and image lattices differ".into()));
        }
        if table.direction().len() != image.channels() {
            return Err(Error::GeometryMismatch(format!(
                "distortion direction has {} components, image has {} channels",
                table.direction().len(),
                image.channels()
            )));
        }
        if !mask.has_undamaged() {
            return Err(Error::InvalidInstance("every pixel is damaged (undamaged region is empty)".into()));
        }
        if let Some(pixel) = (0..geom.pixel_count()).find(|&p| mask.is_damaged(p) && grey.get(p).is_none()) {
            return Err(Error::MissingGrey { pixel });
        }
        let weights = EdgeWeights::for_geometry(&geom);
        Ok(Self { image, mask, grey, table, params, weights })
    }

    /// Replaces the default edge weights of the neighborhood.
    pub fn with_weights(mut self, weights: EdgeWeights) -> Result<Self> {
        if weights.as_slice().len() != self.geometry().neighborhood().directions().len() {
            return Err(Error::InvalidValue("one weight per neighborhood direction is required".into()));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn with_params(mut self, params: ModelParams) -> Self {
        self.params = params;
        self
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.image.geometry()
    }

    pub fn image(&self) -> &ColorImage {
        &self.image
    }

    pub fn mask(&self) -> &DamageMask {
        &self.mask
    }

    pub fn grey(&self) -> &GreyObservation {
        &self.grey
    }

    pub fn table(&self) -> &DistortionTable {
        &self.table
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn weights(&self) -> &EdgeWeights {
        &self.weights
    }

    pub fn channels(&self) -> usize {
        self.image.channels()
    }

    pub(crate) fn check_palette(&self, palette: &Palette) -> Result<()> {
        if palette.channels() != self.channels() {
            return Err(Error::GeometryMismatch(format!(
                "palette has {} channels, image has {}",
                palette.channels(),
                self.channels()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_labeling(&self, labeling: &Labeling, palette: &Palette) -> Result<()> {
        if !self.geometry().same_lattice(labeling.geometry()) {
            return Err(Error::GeometryMismatch("labeling and image lattices differ".into()));
        }
        labeling.check_range(palette.len())
    }
}
