//! Restoration of synthetic damaged images with a free palette.

use chromapart::distortion::Extrapolation;
use chromapart::{
    solve_free_palette, synthesize_instance, ColorImage, DamageMask, DistortionTable, FreePaletteOptions, GridGeometry,
    Instance, ModelParams,
};

const COLORS: [[f64; 3]; 3] = [[0.85, 0.15, 0.1], [0.1, 0.6, 0.2], [0.15, 0.25, 0.9]];

fn truth(x: usize, y: usize) -> usize {
    if x < 12 {
        0
    } else if y < 14 {
        1
    } else {
        2
    }
}

#[test]
fn damaged_band_is_restored_from_grey() {
    let n = 28;
    let geom = GridGeometry::unit(n, n).unwrap();
    let clean = ColorImage::new(geom, 3, (0..n * n).flat_map(|p| COLORS[truth(p % n, p / n)]).collect()).unwrap();
    // a diagonal band of damage crossing every region and both interfaces
    let mask = DamageMask::new(geom, (0..n * n).map(|p| (p % n + p / n).abs_diff(n) < 5).collect()).unwrap();
    let table = DistortionTable::with_unnormalized_direction(
        vec![0.299, 0.587, 0.114],
        vec![(0.0, 0.0), (0.4, 0.3), (0.8, 0.9), (1.2, 1.0)],
        Extrapolation::ClampEnds,
    )
    .unwrap();
    let (f, g) = synthesize_instance(&clean, &mask, &table, 0.0, 1).unwrap();
    let inst = Instance::new(f, mask, g, table, ModelParams::new(10.0, 10.0, 2.0).unwrap()).unwrap();
    let out = solve_free_palette(&inst, 3, &FreePaletteOptions::default()).unwrap();

    for w in out.step_energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-9);
    }
    let wrong = (0..n * n)
        .filter(|&p| {
            let got = out.palette.color(out.labeling.get(p));
            got.iter().zip(COLORS[truth(p % n, p / n)]).any(|(a, b)| (a - b).abs() > 1e-2)
        })
        .count();
    assert!(wrong <= n * n / 100, "{wrong} wrong pixels");
}
