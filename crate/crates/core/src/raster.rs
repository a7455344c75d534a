//! Per-pixel rasters: the color datum, the damage mask, the grey record on
//! the damaged region and label maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GridGeometry;

/// An `M`-channel image with components in `[0, 1]`, stored pixel-interleaved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorImage {
    geometry: GridGeometry,
    channels: usize,
    data: Vec<f64>,
}

impl ColorImage {
    pub fn new(geometry: GridGeometry, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidValue("image needs at least one channel".into()));
        }
        let expected = geometry.pixel_count() * channels;
        if data.len() != expected {
            return Err(Error::GeometryMismatch(format!(
                "image data has {} values, expected {expected}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
            return Err(Error::InvalidValue(format!("image component {i} = {} not in [0, 1]", data[i])));
        }
        Ok(Self { geometry, channels, data })
    }

    /// Builds an image from 8-bit samples, normalized by 255.
    pub fn from_u8(geometry: GridGeometry, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(geometry, channels, bytes.iter().map(|&b| f64::from(b) / 255.0).collect())
    }

    /// Quantizes back to 8-bit samples (`round(v·255)`).
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect()
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Boolean raster, `true` marks a damaged pixel.
///
/// A mask with every pixel damaged can be constructed; it is rejected when
/// assembled into an [`Instance`](crate::model::Instance) and reported as
/// fatal by [`validate_instance`](crate::validate::validate_instance).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DamageMask {
    geometry: GridGeometry,
    damaged: Vec<bool>,
}

impl DamageMask {
    pub fn new(geometry: GridGeometry, damaged: Vec<bool>) -> Result<Self> {
        if damaged.len() != geometry.pixel_count() {
            return Err(Error::GeometryMismatch(format!(
                "mask has {} pixels, expected {}",
                damaged.len(),
                geometry.pixel_count()
            )));
        }
        Ok(Self { geometry, damaged })
    }

    pub fn empty(geometry: GridGeometry) -> Self {
        Self { damaged: vec![false; geometry.pixel_count()], geometry }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn is_damaged(&self, index: usize) -> bool {
        self.damaged[index]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.damaged
    }

    pub fn damaged_count(&self) -> usize {
        self.damaged.iter().filter(|&&d| d).count()
    }

    pub fn has_undamaged(&self) -> bool {
        self.damaged.iter().any(|&d| !d)
    }
}

/// Grey record `g`, defined on (at least) the damaged pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreyObservation {
    geometry: GridGeometry,
    values: Vec<Option<f64>>,
}

impl GreyObservation {
    pub fn new(geometry: GridGeometry, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != geometry.pixel_count() {
            return Err(Error::GeometryMismatch(format!(
                "grey observation has {} pixels, expected {}",
                values.len(),
                geometry.pixel_count()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find_map(|(i, v)| v.filter(|x| !(x.is_finite() && *x >= 0.0)).map(|x| (i, x)))
        {
            return Err(Error::InvalidValue(format!("grey value {v} at pixel {i} must be finite and >= 0")));
        }
        Ok(Self { geometry, values })
    }

    /// No observation anywhere (the damage region must then be empty).
    pub fn none(geometry: GridGeometry) -> Self {
        Self { values: vec![None; geometry.pixel_count()], geometry }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.values[index]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }
}

/// A partition of the grid: one palette index per pixel.
///
/// Labels are 0-based in memory. File formats and reports use 1-based
/// label numbers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Labeling {
    geometry: GridGeometry,
    labels: Vec<usize>,
}

impl Labeling {
    pub fn new(geometry: GridGeometry, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != geometry.pixel_count() {
            return Err(Error::GeometryMismatch(format!(
                "labeling has {} pixels, expected {}",
                labels.len(),
                geometry.pixel_count()
            )));
        }
        Ok(Self { geometry, labels })
    }

    pub fn constant(geometry: GridGeometry, label: usize) -> Self {
        Self { labels: vec![label; geometry.pixel_count()], geometry }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn get(&self, index: usize) -> usize {
        self.labels[index]
    }

    pub fn set(&mut self, index: usize, label: usize) {
        self.labels[index] = label;
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.labels
    }

    /// Largest label plus one (0 for an empty labeling, which cannot exist).
    pub fn label_bound(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn check_range(&self, k: usize) -> Result<()> {
        match self.labels.iter().find(|&&l| l >= k) {
            Some(&label) => Err(Error::LabelOutOfRange { label, k }),
            None => Ok(()),
        }
    }

    pub fn with_geometry(self, geometry: GridGeometry) -> Result<Self> {
        Self::new(geometry, self.labels)
    }

    pub fn is_constant(&self) -> bool {
        self.labels.windows(2).all(|w| w[0] == w[1])
    }
}
