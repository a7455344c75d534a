//! Exact evaluation of the piecewise-constant energy
//!
//! ```text
//! E(l) = Σ_{p~q, l(p)≠l(q)} w_pq |a_l(p) − a_l(q)|
//!      + λ h² Σ_{p∉D} |a_l(p) − f(p)|^p
//!      + μ h² Σ_{p∈D} |L(a_l(p)·e) − g(p)|^p
//! ```
//!
//! and the growth test on `L` that decides whether the energy can be finite
//! for every datum.

use serde::{Deserialize, Serialize};

use crate::distortion::DistortionTable;
use crate::error::{Error, Result};
use crate::geometry::EdgeWeights;
use crate::model::{Instance, Palette};
use crate::raster::Labeling;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub perimeter_term: f64,
    /// Already multiplied by `λ h²`.
    #[serde(rename = "fidelity_outside_D")]
    pub fidelity_outside_d: f64,
    /// Already multiplied by `μ h²`.
    #[serde(rename = "fidelity_inside_D")]
    pub fidelity_inside_d: f64,
    pub total: f64,
}

fn check_weights(labeling: &Labeling, weights: &EdgeWeights) -> Result<()> {
    let dirs = labeling.geometry().neighborhood().directions().len();
    if weights.as_slice().len() != dirs {
        return Err(Error::InvalidValue(format!(
            "{} edge weights supplied for a neighborhood with {dirs} directions",
            weights.as_slice().len()
        )));
    }
    Ok(())
}

/// Interface length weighted by color distance.
pub fn weighted_perimeter(labeling: &Labeling, palette: &Palette, weights: &EdgeWeights) -> Result<f64> {
    check_weights(labeling, weights)?;
    labeling.check_range(palette.len())?;
    let l = labeling.as_slice();
    let mut sum = 0.0;
    for e in labeling.geometry().edges() {
        let (a, b) = (l[e.p], l[e.q]);
        if a != b {
            sum += weights.weight(e.dir) * palette.distance(a, b);
        }
    }
    Ok(sum)
}

/// Sums edge weights over the edges selected by `cut`, counting per
/// direction first so the result is `Σ_dir count · w_dir`.
fn counted_length(labeling: &Labeling, weights: &EdgeWeights, cut: impl Fn(usize, usize) -> bool) -> f64 {
    let l = labeling.as_slice();
    let mut counts = [0u64; 4];
    for e in labeling.geometry().edges() {
        if cut(l[e.p], l[e.q]) {
            counts[e.dir] += 1;
        }
    }
    counts.iter().zip(weights.as_slice()).map(|(&c, &w)| c as f64 * w).sum()
}

/// Total interface length, every pair of distinct labels weighted 1.
pub fn unweighted_interface_length(labeling: &Labeling, weights: &EdgeWeights) -> Result<f64> {
    check_weights(labeling, weights)?;
    Ok(counted_length(labeling, weights, |a, b| a != b))
}

/// Boundary length of a single region: edges with exactly one endpoint
/// labeled `label`. `k` is the palette size used for the range check.
pub fn per_label_boundary_length(labeling: &Labeling, label: usize, k: usize, weights: &EdgeWeights) -> Result<f64> {
    check_weights(labeling, weights)?;
    if label >= k {
        return Err(Error::LabelOutOfRange { label, k });
    }
    labeling.check_range(k)?;
    Ok(counted_length(labeling, weights, |a, b| (a == label) != (b == label)))
}

/// Per-pixel fidelity cost of each label, row-major `pixel × label`.
///
/// Entry `(p, i)` is `λ h² |a_i − f(p)|^p` for undamaged pixels and
/// `μ h² |L(a_i·e) − g(p)|^p` for damaged ones.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryCosts {
    k: usize,
    costs: Vec<f64>,
}

impl UnaryCosts {
    pub fn new(instance: &Instance, palette: &Palette) -> Result<Self> {
        instance.check_palette(palette)?;
        let geom = instance.geometry();
        let k = palette.len();
        let params = instance.params();
        let area = geom.pixel_area();
        let (lam, mu, p) = (params.lambda() * area, params.mu() * area, params.p());
        let grey_levels: Vec<f64> = palette.colors().iter().map(|c| instance.table().eval_color(c)).collect();
        let mut costs = Vec::with_capacity(geom.pixel_count() * k);
        for px in 0..geom.pixel_count() {
            if instance.mask().is_damaged(px) {
                let g = instance.grey().get(px).ok_or(Error::MissingGrey { pixel: px })?;
                costs.extend(grey_levels.iter().map(|lv| mu * (lv - g).abs().powf(p)));
            } else {
                let f = instance.image().pixel(px);
                costs.extend(palette.colors().iter().map(|a| lam * norm_pow(a, f, p)));
            }
        }
        Ok(Self { k, costs })
    }

    pub fn labels(&self) -> usize {
        self.k
    }

    pub fn cost(&self, pixel: usize, label: usize) -> f64 {
        self.costs[pixel * self.k + label]
    }

    pub fn pixel_costs(&self, pixel: usize) -> &[f64] {
        &self.costs[pixel * self.k..(pixel + 1) * self.k]
    }
}

/// `|a − b|^p` with the Euclidean norm.
pub(crate) fn norm_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    if p == 2.0 {
        sq
    } else {
        sq.sqrt().powf(p)
    }
}

/// `(outside, inside)` fidelity sums, weights folded in.
pub fn fidelity_terms(instance: &Instance, palette: &Palette, labeling: &Labeling) -> Result<(f64, f64)> {
    instance.check_palette(palette)?;
    instance.check_labeling(labeling, palette)?;
    let costs = UnaryCosts::new(instance, palette)?;
    let mut outside = 0.0;
    let mut inside = 0.0;
    for (px, &l) in labeling.as_slice().iter().enumerate() {
        if instance.mask().is_damaged(px) {
            inside += costs.cost(px, l);
        } else {
            outside += costs.cost(px, l);
        }
    }
    Ok((outside, inside))
}

pub fn total_energy(instance: &Instance, palette: &Palette, labeling: &Labeling) -> Result<EnergyBreakdown> {
    let (outside, inside) = fidelity_terms(instance, palette, labeling)?;
    let labeling = labeling.clone().with_geometry(*instance.geometry())?;
    let perimeter = weighted_perimeter(&labeling, palette, instance.weights())?;
    Ok(EnergyBreakdown {
        perimeter_term: perimeter,
        fidelity_outside_d: outside,
        fidelity_inside_d: inside,
        total: perimeter + outside + inside,
    })
}

/// Absolute slack on the growth exponent: nontrivial iff `γ̂ ≤ 1 + GROWTH_TOLERANCE`.
pub const GROWTH_TOLERANCE: f64 = 0.05;
/// Minimum number of samples a tail needs to be used.
pub const MIN_TAIL_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Triviality {
    /// `L` grows at most linearly; finite-energy competitors exist.
    Nontrivial,
    /// `L` grows superlinearly; the energy can be infinite for every competitor.
    Trivial,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NontrivialityReport {
    pub classification: Triviality,
    /// Estimated growth exponent of `L` at infinity (largest over tails).
    pub gamma_hat: Option<f64>,
}

/// Estimates the growth exponent of the sampled `L` and classifies it.
///
/// Each tail is the outer quarter of the samples on one end of the table,
/// used only when it lies entirely on one side of `t = 0`. The exponent is
/// the least-squares slope of `log L` against `log |t|` on the tail. A
/// tail with fewer than [`MIN_TAIL_SAMPLES`] samples, or with a
/// non-positive value, makes the result inconclusive.
pub fn nontriviality_check(table: &DistortionTable) -> Result<NontrivialityReport> {
    let s = table.samples();
    if s.is_empty() {
        return Err(Error::InvalidTable("empty table".into()));
    }
    let inconclusive = NontrivialityReport { classification: Triviality::Inconclusive, gamma_hat: None };
    let tail_len = s.len().div_ceil(4);
    if tail_len < MIN_TAIL_SAMPLES {
        return Ok(inconclusive);
    }
    let left = &s[..tail_len];
    let right = &s[s.len() - tail_len..];
    let mut gamma: Option<f64> = None;
    for tail in [left, right] {
        let one_sided = tail.iter().all(|&(t, _)| t < 0.0) || tail.iter().all(|&(t, _)| t > 0.0);
        if !one_sided {
            continue;
        }
        if tail.iter().any(|&(_, l)| l <= 0.0) {
            return Ok(inconclusive);
        }
        let pts: Vec<(f64, f64)> = tail.iter().map(|&(t, l)| (t.abs().ln(), l.ln())).collect();
        let Some(slope) = least_squares_slope(&pts) else {
            return Ok(inconclusive);
        };
        gamma = Some(gamma.map_or(slope, |g| g.max(slope)));
    }
    Ok(match gamma {
        None => inconclusive,
        Some(g) => NontrivialityReport {
            classification: if g <= 1.0 + GROWTH_TOLERANCE { Triviality::Nontrivial } else { Triviality::Trivial },
            gamma_hat: Some(g),
        },
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
