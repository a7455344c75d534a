//! The grey distortion `L` along a unit color direction `e`.
//!
//! Inside the damaged region only `g = L(f·e)` is known. `L` is stored as a
//! sampled piecewise-linear function; it may be supplied directly or fitted
//! from calibration pixels where both the color and the grey value are known.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dot;
use crate::geometry::GridGeometry;
use crate::raster::{ColorImage, DamageMask, GreyObservation};

/// Fill value written into `f` on damaged pixels by [`synthesize_instance`].
pub const SENTINEL_GREY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Extrapolation {
    /// Constant continuation with the end values.
    #[default]
    ClampEnds,
    /// Continue the first and last segments linearly, floored at zero.
    LinearEnds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionTable {
    direction: Vec<f64>,
    samples: Vec<(f64, f64)>,
    extrapolation: Extrapolation,
}

impl DistortionTable {
    /// `direction` must have unit norm to 1e-12; sample abscissae must be
    /// strictly increasing and values finite and non-negative.
    pub fn new(direction: Vec<f64>, samples: Vec<(f64, f64)>, extrapolation: Extrapolation) -> Result<Self> {
        if direction.is_empty() || direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTable("direction must be a finite non-empty vector".into()));
        }
        let norm = dot(&direction, &direction).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidTable(format!("direction must have unit norm, got {norm}")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidTable("table has no samples".into()));
        }
        for (i, &(t, l)) in samples.iter().enumerate() {
            if !t.is_finite() || !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidTable(format!("sample {i} = ({t}, {l}) is invalid")));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidTable(format!("abscissae not strictly increasing at sample {}", i + 1)));
        }
        Ok(Self { direction, samples, extrapolation })
    }

    /// Normalizes `direction` before validation.
    pub fn with_unnormalized_direction(
        direction: Vec<f64>,
        samples: Vec<(f64, f64)>,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        let norm = dot(&direction, &direction).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidTable("direction must be non-zero".into()));
        }
        Self::new(direction.iter().map(|v| v / norm).collect(), samples, extrapolation)
    }

    /// `L(t) = t` on `[0, 1]` along `direction`.
    pub fn identity(direction: Vec<f64>) -> Result<Self> {
        Self::new(direction, vec![(0.0, 0.0), (1.0, 1.0)], Extrapolation::LinearEnds)
    }

    /// The unit direction `e`.
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    /// Piecewise-linear interpolation, exact at the knots.
    pub fn eval(&self, t: f64) -> f64 {
        let s = &self.samples;
        let n = s.len();
        if n == 1 {
            return s[0].1;
        }
        if t <= s[0].0 {
            return match self.extrapolation {
                Extrapolation::ClampEnds => s[0].1,
                Extrapolation::LinearEnds => lerp(s[0], s[1], t).max(0.0),
            };
        }
        if t >= s[n - 1].0 {
            return match self.extrapolation {
                Extrapolation::ClampEnds => s[n - 1].1,
                Extrapolation::LinearEnds => lerp(s[n - 2], s[n - 1], t).max(0.0),
            };
        }
        // first knot strictly greater than t; 1 <= hi <= n-1
        let hi = s.partition_point(|&(x, _)| x <= t);
        if s[hi - 1].0 == t {
            return s[hi - 1].1;
        }
        lerp(s[hi - 1], s[hi], t)
    }

    /// `L(v·e)`.
    pub fn eval_color(&self, color: &[f64]) -> f64 {
        self.eval(dot(color, &self.direction))
    }

    pub fn is_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

fn lerp((x0, y0): (f64, f64), (x1, y1): (f64, f64), t: f64) -> f64 {
    let s = (t - x0) / (x1 - x0);
    y0 + s * (y1 - y0)
}

/// Weighted pool-adjacent-violators: the non-decreasing sequence closest to
/// `values` in weighted least squares.
pub fn pool_adjacent_violators(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // blocks of (mean, weight, len)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m1, w1, n1) = blocks[blocks.len() - 1];
            let (m0, w0, n0) = blocks[blocks.len() - 2];
            if m0 <= m1 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w0 + w1;
            blocks.push(((m0 * w0 + m1 * w1) / w, w, n0 + n1));
        }
    }
    blocks.into_iter().flat_map(|(m, _, n)| std::iter::repeat_n(m, n)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub table: DistortionTable,
    pub warnings: Vec<String>,
}

/// Fits `e` and `L` from calibration pixels.
///
/// Calibration pixels are those with `calibration[p]` set and a grey value
/// present. `e` is the leading principal direction of their colors, signed
/// so that the mean projection is non-negative; it falls back to
/// `(1,…,1)/√M` for a degenerate color cloud. `L` is obtained by splitting
/// the projections into `bins` equal-count bins (bin mean of `t` as knot,
/// bin mean of `g` as value) and enforcing monotonicity by weighted PAV.
pub fn fit_distortion(
    image: &ColorImage,
    grey: &GreyObservation,
    calibration: &[bool],
    bins: usize,
) -> Result<FitOutcome> {
    let geom = image.geometry();
    if !geom.same_lattice(grey.geometry()) || calibration.len() != geom.pixel_count() {
        return Err(Error::GeometryMismatch("calibration inputs do not share the image lattice".into()));
    }
    if bins < 2 {
        return Err(Error::InvalidValue(format!("at least 2 bins are required, got {bins}")));
    }
    let pixels: Vec<(usize, f64)> = (0..geom.pixel_count())
        .filter(|&p| calibration[p])
        .filter_map(|p| grey.get(p).map(|g| (p, g)))
        .collect();
    if pixels.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} calibration pixel(s) with known color and grey value, need at least 2",
            pixels.len()
        )));
    }

    let m = image.channels();
    let mut warnings = Vec::new();
    let n = pixels.len() as f64;
    let mut mean = vec![0.0; m];
    for &(p, _) in &pixels {
        for (acc, v) in mean.iter_mut().zip(image.pixel(p)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut cov = DMatrix::<f64>::zeros(m, m);
    for &(p, _) in &pixels {
        let c = image.pixel(p);
        for i in 0..m {
            for j in 0..m {
                cov[(i, j)] += (c[i] - mean[i]) * (c[j] - mean[j]);
            }
        }
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    // lowest index wins among equal eigenvalues
    let lead = (0..m).fold(0, |best, i| if eig.eigenvalues[i] > eig.eigenvalues[best] { i } else { best });
    let mut direction: Vec<f64> = if eig.eigenvalues[lead] <= 1e-14 {
        warnings.push("calibration colors have zero variance; direction defaults to (1,...,1)/sqrt(M)".into());
        vec![1.0 / (m as f64).sqrt(); m]
    } else {
        eig.eigenvectors.column(lead).iter().copied().collect()
    };
    let norm = dot(&direction, &direction).sqrt();
    direction.iter_mut().for_each(|v| *v /= norm);
    if dot(&mean, &direction) < 0.0 {
        direction.iter_mut().for_each(|v| *v = -*v);
    }

    let mut points: Vec<(f64, f64)> = pixels.iter().map(|&(p, g)| (dot(image.pixel(p), &direction), g)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // equal-count bins; bins sharing the same mean abscissa are pooled
    let bins = bins.min(points.len());
    let mut knots: Vec<(f64, f64, f64)> = Vec::with_capacity(bins); // (t, g, weight)
    for b in 0..bins {
        let lo = b * points.len() / bins;
        let hi = (b + 1) * points.len() / bins;
        let chunk = &points[lo..hi];
        let w = chunk.len() as f64;
        let t = chunk.iter().map(|p| p.0).sum::<f64>() / w;
        let g = chunk.iter().map(|p| p.1).sum::<f64>() / w;
        match knots.last_mut() {
            Some(last) if t <= last.0 => {
                let total = last.2 + w;
                last.0 = (last.0 * last.2 + t * w) / total;
                last.1 = (last.1 * last.2 + g * w) / total;
                last.2 = total;
            }
            _ => knots.push((t, g, w)),
        }
    }
    let values: Vec<f64> = knots.iter().map(|k| k.1).collect();
    let weights: Vec<f64> = knots.iter().map(|k| k.2).collect();
    let monotone = pool_adjacent_violators(&values, &weights);
    let samples = knots.iter().zip(monotone).map(|(k, v)| (k.0, v.max(0.0))).collect();
    let table = DistortionTable::new(direction, samples, Extrapolation::ClampEnds)?;
    Ok(FitOutcome { table, warnings })
}

/// Builds a damaged observation from a clean image.
///
/// Outside the damage `f` is the clean color plus optional Gaussian noise,
/// clamped to `[0, 1]`. Inside, `f` is [`SENTINEL_GREY`] and
/// `g = L(clean·e)` plus noise, floored at 0. `g` is undefined outside the
/// damage. Deterministic for a given seed.
pub fn synthesize_instance(
    clean: &ColorImage,
    mask: &DamageMask,
    table: &DistortionTable,
    noise_sigma: f64,
    seed: u64,
) -> Result<(ColorImage, GreyObservation)> {
    let geom = *clean.geometry();
    if !geom.same_lattice(mask.geometry()) {
        return Err(Error::GeometryMismatch("mask and clean image lattices differ".into()));
    }
    if table.direction().len() != clean.channels() {
        return Err(Error::GeometryMismatch("distortion direction does not match channel count".into()));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidValue(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma).expect("sigma validated");
    let noise = |rng: &mut ChaCha8Rng| if noise_sigma > 0.0 { normal.sample(rng) } else { 0.0 };

    let m = clean.channels();
    let mut data = Vec::with_capacity(geom.pixel_count() * m);
    let mut grey = Vec::with_capacity(geom.pixel_count());
    for p in 0..geom.pixel_count() {
        let c = clean.pixel(p);
        if mask.is_damaged(p) {
            data.extend(std::iter::repeat_n(SENTINEL_GREY, m));
            grey.push(Some((table.eval_color(c) + noise(&mut rng)).max(0.0)));
        } else {
            for &v in c {
                data.push((v + noise(&mut rng)).clamp(0.0, 1.0));
            }
            grey.push(None);
        }
    }
    Ok((ColorImage::new(geom, m, data)?, GreyObservation::new(geom, grey)?))
}

/// Radius range, in pixels, of the disks drawn by [`random_blob_mask`].
pub const BLOB_RADII: (f64, f64) = (2.0, 6.0);

/// Damage made of random disks, added until at least `fraction` of the
/// pixels are covered. Deterministic for a given seed.
pub fn random_blob_mask(geometry: GridGeometry, fraction: f64, seed: u64) -> Result<DamageMask> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidValue(format!("damage fraction must be in [0, 1), got {fraction}")));
    }
    let (w, h) = (geometry.width(), geometry.height());
    let n = geometry.pixel_count();
    let target = (fraction * n as f64).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut damaged = vec![false; n];
    let mut count = 0;
    while count < target {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let r = rng.random_range(BLOB_RADII.0..BLOB_RADII.1);
        for (p, d) in damaged.iter_mut().enumerate() {
            let (x, y) = ((p % w) as f64 + 0.5, (p / w) as f64 + 0.5);
            if !*d && (x - cx).powi(2) + (y - cy).powi(2) <= r * r {
                *d = true;
                count += 1;
            }
        }
    }
    DamageMask::new(geometry, damaged)
}
