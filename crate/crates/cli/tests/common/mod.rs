#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chromapart::distortion::Extrapolation;
use chromapart::{
    ColorImage, DamageMask, DistortionTable, GreyObservation, GridGeometry, Instance, ModelParams, Neighborhood, Palette,
};
use chromapart_cli::pnm::{self, Raster};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_chromapart")
}

/// Runs the binary with `args`, in `dir`.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).current_dir(dir).args(args).output().expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_ppm(path: &Path, width: usize, height: usize, pixels: impl IntoIterator<Item = [u8; 3]>) {
    let data = pixels.into_iter().flatten().collect();
    pnm::write(path, &Raster { width, height, channels: 3, data }).unwrap();
}

pub fn write_pgm(path: &Path, width: usize, height: usize, values: impl IntoIterator<Item = u8>) {
    pnm::write(path, &Raster { width, height, channels: 1, data: values.into_iter().collect() }).unwrap();
}

pub fn read_raster(path: &Path) -> Raster {
    pnm::decode(&std::fs::read(path).unwrap()).unwrap()
}

pub fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

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

/// Random instance: random colors, about 30% of the pixels damaged (at
/// least one undamaged) with random grey values.
pub fn random_instance(rng: &mut ChaCha8Rng, w: usize, h: usize, nbhd: Neighborhood, params: ModelParams) -> Instance {
    let geom = GridGeometry::new(w, h, 1.0, nbhd).unwrap();
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
