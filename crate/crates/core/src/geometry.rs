//! Pixel lattice, neighborhood systems and edge weights.
//!
//! Pixels are unit cells of side `spacing_h`, indexed in row-major order
//! (`index = y * width + x`). Each unordered neighbor pair is visited exactly
//! once, always from the lower-index pixel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Neighborhood {
    N4,
    N8,
}

/// Forward edge directions `(dx, dy)`. The first two are axis directions,
/// the last two are diagonals (only used by `N8`).
const DIRECTIONS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];

impl Neighborhood {
    /// The forward offsets of this neighborhood, one per undirected direction.
    pub fn directions(self) -> &'static [(isize, isize)] {
        match self {
            Neighborhood::N4 => &DIRECTIONS[..2],
            Neighborhood::N8 => &DIRECTIONS[..],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    width: usize,
    height: usize,
    spacing_h: f64,
    neighborhood: Neighborhood,
}

// Spacing is finite after validation, so equality is total.
impl Eq for GridGeometry {}
impl std::hash::Hash for GridGeometry {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.width().hash(state);
        self.height().hash(state);
        self.spacing_h().to_bits().hash(state);
        self.neighborhood().hash(state);
    }
}

/// An undirected edge between two neighboring pixels, `p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub p: usize,
    pub q: usize,
    /// Index into [`Neighborhood::directions`].
    pub dir: usize,
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, spacing_h: f64, neighborhood: Neighborhood) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!("grid must be non-empty, got {width}x{height}")));
        }
        if !(spacing_h.is_finite() && spacing_h > 0.0) {
            return Err(Error::Geometry(format!("spacing must be positive and finite, got {spacing_h}")));
        }
        Ok(Self { width, height, spacing_h, neighborhood })
    }

    /// Unit spacing, 4-neighborhood.
    pub fn unit(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, 1.0, Neighborhood::N4)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing_h(&self) -> f64 {
        self.spacing_h
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    pub fn with_neighborhood(self, neighborhood: Neighborhood) -> Self {
        Self { neighborhood, ..self }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Area of one pixel, `h²`.
    pub fn pixel_area(&self) -> f64 {
        self.spacing_h * self.spacing_h
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// Pixel center in physical units.
    pub fn center(&self, index: usize) -> (f64, f64) {
        let (x, y) = self.coords(index);
        (x as f64 * self.spacing_h, y as f64 * self.spacing_h)
    }

    /// Same lattice (ignores the neighborhood choice).
    pub fn same_lattice(&self, other: &GridGeometry) -> bool {
        self.width == other.width && self.height == other.height && self.spacing_h == other.spacing_h
    }

    /// All undirected neighbor pairs, in row-major order of the lower pixel,
    /// then by direction.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let dirs = self.neighborhood.directions();
        (0..self.pixel_count()).flat_map(move |p| {
            let (x, y) = self.coords(p);
            dirs.iter().enumerate().filter_map(move |(dir, &(dx, dy))| {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
                    None
                } else {
                    Some(Edge { p, q: self.index(nx as usize, ny as usize), dir })
                }
            })
        })
    }

    /// Neighbors of a pixel together with the direction index of the edge.
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (x, y) = self.coords(index);
        self.neighborhood
            .directions()
            .iter()
            .enumerate()
            .flat_map(move |(dir, &(dx, dy))| [(dir, dx, dy), (dir, -dx, -dy)])
            .filter_map(move |(dir, dx, dy)| {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
                    None
                } else {
                    Some((self.index(nx as usize, ny as usize), dir))
                }
            })
    }
}

/// Length weight attached to each edge direction, a discretization of the
/// (N-1)-dimensional measure of an interface crossing the edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights {
    weights: Vec<f64>,
}

impl EdgeWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidValue(format!("edge weights must be positive, got {weights:?}")));
        }
        Ok(Self { weights })
    }

    /// Default weights for a geometry.
    ///
    /// `N4` uses `h` per edge, which measures axis-aligned interfaces exactly.
    /// `N8` uses Cauchy–Crofton weights `h²·Δφ / (2·|e|)` with `Δφ = π/4`
    /// for the four undirected directions, so that interface length is
    /// isotropic on average over orientations.
    pub fn for_geometry(geom: &GridGeometry) -> Self {
        let h = geom.spacing_h();
        let weights = match geom.neighborhood() {
            Neighborhood::N4 => vec![h, h],
            Neighborhood::N8 => Neighborhood::N8
                .directions()
                .iter()
                .map(|&(dx, dy)| {
                    let len = h * ((dx * dx + dy * dy) as f64).sqrt();
                    h * h * (PI / 4.0) / (2.0 * len)
                })
                .collect(),
        };
        Self { weights }
    }

    pub fn weight(&self, dir: usize) -> f64 {
        self.weights[dir]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}
