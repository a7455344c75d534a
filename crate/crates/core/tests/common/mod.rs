#![allow(dead_code)]

use chromapart::distortion::Extrapolation;
use chromapart::{
    ColorImage, DamageMask, DistortionTable, GreyObservation, GridGeometry, Instance, ModelParams, Neighborhood, Palette,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_color(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..3).map(|_| rng.random::<f64>()).collect()
}

/// A random monotone table along a random positive direction.
pub fn random_table(rng: &mut ChaCha8Rng) -> DistortionTable {
    let dir: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
    let mut level = 0.0;
    let samples = (0..6)
        .map(|i| {
            level += rng.random_range(0.0..0.4);
            (i as f64 * 0.4, level)
        })
        .collect();
    DistortionTable::with_unnormalized_direction(dir, samples, Extrapolation::ClampEnds).unwrap()
}

/// Random `w × h` instance: random colors, about a third of the pixels
/// damaged (at least one undamaged), random grey values.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    spacing: f64,
    nbhd: Neighborhood,
    params: ModelParams,
) -> Instance {
    let geom = GridGeometry::new(w, h, spacing, nbhd).unwrap();
    let n = w * h;
    let data = (0..n).flat_map(|_| random_color(rng)).collect();
    let mut damaged: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
    damaged[rng.random_range(0..n)] = false;
    let grey = damaged.iter().map(|&d| d.then(|| rng.random::<f64>())).collect();
    Instance::new(
        ColorImage::new(geom, 3, data).unwrap(),
        DamageMask::new(geom, damaged).unwrap(),
        GreyObservation::new(geom, grey).unwrap(),
        random_table(rng),
        params,
    )
    .unwrap()
}

pub fn random_palette(rng: &mut ChaCha8Rng, k: usize) -> Palette {
    Palette::new((0..k).map(|_| random_color(rng)).collect()).unwrap()
}
