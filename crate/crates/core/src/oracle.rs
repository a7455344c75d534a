//! Exhaustive minimization on tiny instances.
//!
//! The energy here is evaluated by its own straight loops over rows,
//! columns and neighbor offsets and shares no code with [`crate::energy`],
//! so the two can check each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Neighborhood;
use crate::model::{Instance, Palette};
use crate::raster::Labeling;

/// Largest number of labelings [`brute_force_fixed_palette`] will enumerate.
pub const MAX_LABELINGS: u64 = 10_000_000;
/// Largest grid [`brute_force_binary_move`] accepts.
pub const MAX_BINARY_PIXELS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub labeling: Labeling,
    pub energy: f64,
}

/// Energy of `labels` evaluated by direct summation.
pub fn oracle_energy(instance: &Instance, palette: &Palette, labels: &[usize]) -> f64 {
    let geom = instance.geometry();
    let (w, h) = (geom.width(), geom.height());
    let area = geom.spacing_h() * geom.spacing_h();
    let params = instance.params();
    let e = instance.table().direction();
    let weights = instance.weights().as_slice();
    let mut offsets = vec![(1isize, 0isize, weights[0]), (0, 1, weights[1])];
    if geom.neighborhood() == Neighborhood::N8 {
        offsets.push((1, 1, weights[2]));
        offsets.push((-1, 1, weights[3]));
    }

    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let a = palette.color(labels[p]);
            if instance.mask().is_damaged(p) {
                let t: f64 = a.iter().zip(e).map(|(u, v)| u * v).sum();
                let g = instance.grey().get(p).unwrap_or(0.0);
                total += params.mu() * area * (instance.table().eval(t) - g).abs().powf(params.p());
            } else {
                let f = instance.image().pixel(p);
                let mut sq = 0.0;
                for c in 0..a.len() {
                    sq += (a[c] - f[c]) * (a[c] - f[c]);
                }
                total += params.lambda() * area * sq.sqrt().powf(params.p());
            }
            for &(dx, dy, weight) in &offsets {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                if labels[q] != labels[p] {
                    let b = palette.color(labels[q]);
                    let mut sq = 0.0;
                    for c in 0..a.len() {
                        sq += (a[c] - b[c]) * (a[c] - b[c]);
                    }
                    total += weight * sq.sqrt();
                }
            }
        }
    }
    total
}

/// Global minimum over all `k^n` labelings; the lexicographically first
/// minimizer wins ties.
pub fn brute_force_fixed_palette(instance: &Instance, palette: &Palette) -> Result<OracleResult> {
    instance.check_palette(palette)?;
    let n = instance.geometry().pixel_count();
    let k = palette.len();
    let count = (k as u64).checked_pow(n as u32).filter(|&c| c <= MAX_LABELINGS);
    if count.is_none() {
        return Err(Error::TooLarge(format!("{k}^{n} labelings exceed the limit of {MAX_LABELINGS}")));
    }
    let mut labels = vec![0usize; n];
    let mut best = labels.clone();
    let mut best_energy = oracle_energy(instance, palette, &labels);
    // odometer with the last pixel fastest: lexicographic order
    loop {
        let mut i = n;
        loop {
            if i == 0 {
                let labeling = Labeling::new(*instance.geometry(), best)?;
                return Ok(OracleResult { labeling, energy: best_energy });
            }
            i -= 1;
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
        }
        let e = oracle_energy(instance, palette, &labels);
        if e < best_energy {
            best_energy = e;
            best.copy_from_slice(&labels);
        }
    }
}

/// Exhaustive minimum over the `2^n` keep-or-switch-to-`alpha` labelings.
pub fn brute_force_binary_move(
    instance: &Instance,
    palette: &Palette,
    labeling: &Labeling,
    alpha: usize,
) -> Result<Labeling> {
    instance.check_palette(palette)?;
    instance.check_labeling(labeling, palette)?;
    if alpha >= palette.len() {
        return Err(Error::LabelOutOfRange { label: alpha, k: palette.len() });
    }
    let n = labeling.as_slice().len();
    if n > MAX_BINARY_PIXELS {
        return Err(Error::TooLarge(format!("{n} pixels exceed the binary move limit of {MAX_BINARY_PIXELS}")));
    }
    let base = labeling.as_slice();
    let mut best = base.to_vec();
    let mut best_energy = oracle_energy(instance, palette, base);
    let mut candidate = base.to_vec();
    for mask in 1u32..(1 << n) {
        for (i, slot) in candidate.iter_mut().enumerate() {
            // pixel 0 is the most significant bit
            *slot = if mask >> (n - 1 - i) & 1 == 1 { alpha } else { base[i] };
        }
        let e = oracle_energy(instance, palette, &candidate);
        if e < best_energy {
            best_energy = e;
            best.copy_from_slice(&candidate);
        }
    }
    Labeling::new(*labeling.geometry(), best)
}
