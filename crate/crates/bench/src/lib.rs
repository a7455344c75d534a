//! Deterministic fixtures for the benchmarks in `benches/`.

use chromapart::distortion::Extrapolation;
use chromapart::mincut::FlowNetwork;
use chromapart::{
    random_blob_mask, synthesize_instance, ColorImage, DistortionTable, GridGeometry, Instance, Labeling, ModelParams,
    Palette,
};

pub const COLORS: [[f64; 3]; 3] = [[0.6, 0.05, 0.05], [0.2, 0.7, 0.3], [0.7, 0.8, 0.95]];

/// Three-region `n × n` scene (band, disk, background), 30% blob damage.
pub fn scene(n: usize) -> Instance {
    let geom = GridGeometry::unit(n, n).unwrap();
    let r = n as f64 / 4.0;
    let truth = |p: usize| {
        let (x, y) = ((p % n) as f64, (p / n) as f64);
        if (x - 0.65 * n as f64).powi(2) + (y - 0.35 * n as f64).powi(2) <= r * r {
            2
        } else {
            usize::from(y >= 0.6 * n as f64)
        }
    };
    let clean = ColorImage::new(geom, 3, (0..n * n).flat_map(|p| COLORS[truth(p)]).collect()).unwrap();
    let mask = random_blob_mask(geom, 0.3, 1).unwrap();
    let table = DistortionTable::with_unnormalized_direction(
        vec![0.299, 0.587, 0.114],
        vec![(0.0, 0.0), (0.5, 0.35), (1.0, 0.75), (1.8, 1.0)],
        Extrapolation::ClampEnds,
    )
    .unwrap();
    let (f, g) = synthesize_instance(&clean, &mask, &table, 0.03, 1).unwrap();
    Instance::new(f, mask, g, table, ModelParams::new(10.0, 10.0, 2.0).unwrap()).unwrap()
}

pub fn scene_palette() -> Palette {
    Palette::new(COLORS.iter().map(|c| c.to_vec()).collect()).unwrap()
}

/// Stripes of all labels, a poor starting point with many interfaces.
pub fn stripes(instance: &Instance, k: usize) -> Labeling {
    let geom = *instance.geometry();
    Labeling::new(geom, (0..geom.pixel_count()).map(|p| (p % geom.width() / 3) % k).collect()).unwrap()
}

/// Grid network in the shape of one expansion move: terminal arcs to every
/// pixel node plus symmetric neighbor arcs, capacities from a fixed hash.
pub fn grid_network(n: usize) -> FlowNetwork {
    let nodes = n * n + 2;
    let (s, t) = (n * n, n * n + 1);
    let mut net = FlowNetwork::new(nodes, s, t).unwrap();
    let cap = |i: usize| ((i.wrapping_mul(2654435761) >> 7) % 1000) as f64 / 1000.0;
    for p in 0..n * n {
        net.add_arc(s, p, cap(3 * p)).unwrap();
        net.add_arc(p, t, cap(3 * p + 1)).unwrap();
        let (x, y) = (p % n, p / n);
        if x + 1 < n {
            net.add_arc(p, p + 1, 0.3 * cap(3 * p + 2)).unwrap();
            net.add_arc(p + 1, p, 0.3 * cap(3 * p + 2)).unwrap();
        }
        if y + 1 < n {
            net.add_arc(p, p + n, 0.3 * cap(7 * p)).unwrap();
            net.add_arc(p + n, p, 0.3 * cap(7 * p)).unwrap();
        }
    }
    net
}
