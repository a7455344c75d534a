//! Measurements of interface regularity on computed labelings.
//!
//! Nothing here asserts a theorem constant. Density ratios and elimination
//! violations are sampled over user-chosen radii and thresholds and
//! reported for inspection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Edge, EdgeWeights, GridGeometry};
use crate::model::Palette;
use crate::raster::Labeling;

/// Slack at or below this value counts as a violated strict triangle.
pub const H3_SLACK_TOL: f64 = 1e-12;
/// Width of a density-ratio histogram bin; the last bin is open-ended.
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.25;
pub const HISTOGRAM_BINS: usize = 17;

/// Neighbor pairs whose labels differ.
pub fn extract_jump_edges(labeling: &Labeling) -> Vec<Edge> {
    let l = labeling.as_slice();
    labeling.geometry().edges().filter(|e| l[e.p] != l[e.q]).collect()
}

/// Pixels incident to at least one jump edge.
pub fn jump_pixels(labeling: &Labeling) -> Vec<usize> {
    let mut on = vec![false; labeling.as_slice().len()];
    for e in extract_jump_edges(labeling) {
        on[e.p] = true;
        on[e.q] = true;
    }
    on.iter().enumerate().filter_map(|(p, &b)| b.then_some(p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRatio {
    pub value: f64,
    /// The ball leaves the image; such samples are excluded from minima.
    pub clipped: bool,
}

fn ball_clipped(geom: &GridGeometry, center: usize, radius: f64) -> bool {
    let h = geom.spacing_h();
    let (cx, cy) = geom.center(center);
    let (xmax, ymax) = ((geom.width() as f64 - 0.5) * h, (geom.height() as f64 - 0.5) * h);
    cx - radius < -0.5 * h || cy - radius < -0.5 * h || cx + radius > xmax || cy + radius > ymax
}

fn edge_midpoint(geom: &GridGeometry, e: &Edge) -> (f64, f64) {
    let (px, py) = geom.center(e.p);
    let (qx, qy) = geom.center(e.q);
    ((px + qx) / 2.0, (py + qy) / 2.0)
}

fn density_from_edges(geom: &GridGeometry, jumps: &[Edge], weights: &EdgeWeights, center: usize, rho: f64) -> DensityRatio {
    let (cx, cy) = geom.center(center);
    let length: f64 = jumps
        .iter()
        .filter(|e| {
            let (mx, my) = edge_midpoint(geom, e);
            (mx - cx).powi(2) + (my - cy).powi(2) <= rho * rho
        })
        .map(|e| weights.weight(e.dir))
        .sum();
    DensityRatio { value: length / rho, clipped: ball_clipped(geom, center, rho) }
}

/// Jump length inside `B_rho(center)` divided by `rho`: the sum of the
/// weights of jump edges whose midpoint lies in the ball.
pub fn density_ratio(labeling: &Labeling, weights: &EdgeWeights, center: usize, rho: f64) -> Result<DensityRatio> {
    let geom = labeling.geometry();
    if center >= geom.pixel_count() {
        return Err(Error::InvalidValue(format!("center {center} outside the grid")));
    }
    if !(rho.is_finite() && rho >= 2.0 * geom.spacing_h()) {
        return Err(Error::InvalidValue(format!("rho = {rho} must be at least twice the pixel spacing")));
    }
    if weights.as_slice().len() != geom.neighborhood().directions().len() {
        return Err(Error::InvalidValue("edge weights do not match the neighborhood".into()));
    }
    Ok(density_from_edges(geom, &extract_jump_edges(labeling), weights, center, rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EliminationViolation {
    pub center: usize,
    pub radius: f64,
    /// The two retained phases, as 1-based label numbers.
    pub retained: (usize, usize),
    /// Area of the remaining phases inside `B_r`.
    pub remaining_area: f64,
    /// `η r²`.
    pub threshold: f64,
}

fn ball_counts(labeling: &Labeling, k: usize, center: usize, radius: f64) -> Vec<usize> {
    let geom = labeling.geometry();
    let h = geom.spacing_h();
    let (cx, cy) = geom.coords(center);
    let reach = (radius / h).floor() as isize;
    let mut counts = vec![0usize; k];
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (x, y) = (cx as isize + dx, cy as isize + dy);
            if x < 0 || y < 0 || x >= geom.width() as isize || y >= geom.height() as isize {
                continue;
            }
            if ((dx * dx + dy * dy) as f64) * h * h <= radius * radius {
                counts[labeling.get(geom.index(x as usize, y as usize))] += 1;
            }
        }
    }
    counts
}

/// Records every interior ball `B_r(x)` and pair of retained phases where
/// the other phases occupy at most `η r²` of `B_r` yet still reach into
/// `B_{r/2}`.
pub fn elimination_scan(labeling: &Labeling, eta: f64, radii: &[f64]) -> Result<Vec<EliminationViolation>> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidValue(format!("eta must be > 0, got {eta}")));
    }
    let geom = labeling.geometry();
    let area = geom.pixel_area();
    let k = labeling.label_bound();
    let mut out = Vec::new();
    if k < 3 {
        return Ok(out);
    }
    for &r in radii {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidValue(format!("radius {r} must be > 0")));
        }
        let threshold = eta * r * r;
        for center in 0..geom.pixel_count() {
            if ball_clipped(geom, center, r) {
                continue;
            }
            let outer = ball_counts(labeling, k, center, r);
            let inner = ball_counts(labeling, k, center, r / 2.0);
            let (outer_total, inner_total): (usize, usize) = (outer.iter().sum(), inner.iter().sum());
            for i in 0..k {
                for j in i + 1..k {
                    let remaining = outer_total - outer[i] - outer[j];
                    let remaining_inner = inner_total - inner[i] - inner[j];
                    let remaining_area = remaining as f64 * area;
                    if remaining_area <= threshold && remaining_inner > 0 {
                        out.push(EliminationViolation { center, radius: r, retained: (i + 1, j + 1), remaining_area, threshold });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H3Triple {
    /// 1-based label numbers; the slack is `|a_i−a_l| + |a_l−a_j| − |a_i−a_j|`.
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H3Check {
    pub satisfied: bool,
    /// The triple with the smallest slack (first found on ties); `None`
    /// for fewer than three colors.
    pub worst: Option<H3Triple>,
}

/// Checks the strict triangle inequality over all distinct triples.
pub fn check_h3(palette: &Palette) -> H3Check {
    let k = palette.len();
    let mut worst: Option<H3Triple> = None;
    for i in 0..k {
        for j in i + 1..k {
            for l in (0..k).filter(|&l| l != i && l != j) {
                let slack = (palette.distance(i, l) + palette.distance(l, j) - palette.distance(i, j)).max(0.0);
                if worst.is_none_or(|w| slack < w.slack) {
                    worst = Some(H3Triple { i: i + 1, j: j + 1, l: l + 1, slack });
                }
            }
        }
    }
    H3Check { satisfied: worst.is_none_or(|w| w.slack > H3_SLACK_TOL), worst }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub rho: f64,
    pub bin_width: f64,
    /// Counts of unclipped jump-pixel centers per bin.
    pub counts: Vec<usize>,
    pub clipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationCurvePoint {
    pub eta: f64,
    pub violation_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub jump_pixel_count: usize,
    pub density_histograms: Vec<DensityHistogram>,
    /// Per radius, over unclipped jump pixels; `None` when there are none.
    pub min_density_ratio: Vec<Option<f64>>,
    pub elimination_curve: Vec<EliminationCurvePoint>,
    pub elimination_violations: Vec<EliminationViolation>,
    pub h3_satisfied: bool,
    pub h3_worst_triple: Option<H3Triple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOptions {
    pub density_radii: Vec<f64>,
    pub elimination_radii: Vec<f64>,
    pub etas: Vec<f64>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            density_radii: vec![2.0, 4.0, 8.0],
            elimination_radii: vec![2.0, 4.0, 8.0],
            etas: vec![0.01, 0.02, 0.05, 0.1, 0.2],
        }
    }
}

impl DiagnosticsOptions {
    /// Radii given in pixels are scaled by the spacing.
    pub fn scaled(&self, h: f64) -> Self {
        Self {
            density_radii: self.density_radii.iter().map(|r| r * h).collect(),
            elimination_radii: self.elimination_radii.iter().map(|r| r * h).collect(),
            etas: self.etas.clone(),
        }
    }
}

/// Collects all diagnostics for one labeling. Radii are in physical units.
pub fn regularity_report(
    labeling: &Labeling,
    palette: &Palette,
    weights: &EdgeWeights,
    opts: &DiagnosticsOptions,
) -> Result<RegularityReport> {
    labeling.check_range(palette.len())?;
    let geom = labeling.geometry();
    let jumps = extract_jump_edges(labeling);
    let centers = jump_pixels(labeling);
    let mut density_histograms = Vec::new();
    let mut min_density_ratio = Vec::new();
    for &rho in &opts.density_radii {
        if !(rho.is_finite() && rho >= 2.0 * geom.spacing_h()) {
            return Err(Error::InvalidValue(format!("rho = {rho} must be at least twice the pixel spacing")));
        }
        let mut counts = vec![0usize; HISTOGRAM_BINS];
        let mut clipped = 0;
        let mut min: Option<f64> = None;
        for &c in &centers {
            let d = density_from_edges(geom, &jumps, weights, c, rho);
            if d.clipped {
                clipped += 1;
                continue;
            }
            let bin = ((d.value / HISTOGRAM_BIN_WIDTH) as usize).min(HISTOGRAM_BINS - 1);
            counts[bin] += 1;
            min = Some(min.map_or(d.value, |m| m.min(d.value)));
        }
        density_histograms.push(DensityHistogram { rho, bin_width: HISTOGRAM_BIN_WIDTH, counts, clipped });
        min_density_ratio.push(min);
    }
    let mut elimination_curve = Vec::new();
    let mut elimination_violations = Vec::new();
    for &eta in &opts.etas {
        let v = elimination_scan(labeling, eta, &opts.elimination_radii)?;
        elimination_curve.push(EliminationCurvePoint { eta, violation_count: v.len() });
        elimination_violations.extend(v);
    }
    let h3 = check_h3(palette);
    Ok(RegularityReport {
        jump_pixel_count: centers.len(),
        density_histograms,
        min_density_ratio,
        elimination_curve,
        elimination_violations,
        h3_satisfied: h3.satisfied,
        h3_worst_triple: h3.worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::unweighted_interface_length;
    use proptest::prelude::*;

    fn labeling(w: usize, h: usize, f: impl Fn(usize, usize) -> usize) -> Labeling {
        let g = GridGeometry::unit(w, h).unwrap();
        Labeling::new(g, (0..w * h).map(|p| f(p % w, p / w)).collect()).unwrap()
    }

    #[test]
    fn jump_edges() {
        assert!(extract_jump_edges(&labeling(4, 4, |_, _| 2)).is_empty());
        let two = labeling(2, 1, |x, _| x);
        assert_eq!(extract_jump_edges(&two), vec![Edge { p: 0, q: 1, dir: 0 }]);
        let l = labeling(6, 5, |x, y| (x * y + x) % 3);
        let w = EdgeWeights::for_geometry(l.geometry());
        assert_eq!(extract_jump_edges(&l).len() as f64, unweighted_interface_length(&l, &w).unwrap());
    }

    #[test]
    fn straight_interface_density() {
        let l = labeling(40, 40, |x, _| usize::from(x > 20));
        let w = EdgeWeights::for_geometry(l.geometry());
        let center = l.geometry().index(20, 20);
        let d8 = density_ratio(&l, &w, center, 8.0).unwrap();
        assert!(!d8.clipped);
        assert!((d8.value - 2.0).abs() <= 0.2, "{}", d8.value);
        let d16 = density_ratio(&l, &w, center, 16.0).unwrap();
        assert!((d16.value - 2.0).abs() <= 0.16, "{}", d16.value);
        let far = density_ratio(&l, &w, l.geometry().index(5, 20), 3.0).unwrap();
        assert_eq!(far.value, 0.0);
        assert!(density_ratio(&l, &w, center, 1.5).is_err());
        assert!(density_ratio(&l, &w, l.geometry().index(1, 1), 4.0).unwrap().clipped);
    }

    #[test]
    fn corner_density() {
        let l = labeling(40, 40, |x, y| usize::from(x > 20 || y > 20));
        let w = EdgeWeights::for_geometry(l.geometry());
        let d = density_ratio(&l, &w, l.geometry().index(20, 20), 8.0).unwrap();
        assert!((d.value - 2.0).abs() <= 0.3, "{}", d.value);
    }

    #[test]
    fn elimination_examples() {
        let two = labeling(20, 20, |x, y| usize::from(x + y > 20));
        assert!(elimination_scan(&two, 10.0, &[2.0, 4.0]).unwrap().is_empty());
        let t_junction = labeling(21, 21, |x, y| if y < 10 { 0 } else if x < 10 { 1 } else { 2 });
        assert!(elimination_scan(&t_junction, 1e-6, &[2.0, 4.0, 6.0]).unwrap().is_empty());
        // a single stray pixel of a third phase is caught for a generous eta
        let stray = labeling(21, 21, |x, y| if (x, y) == (10, 10) { 2 } else { usize::from(x > 10) });
        let v = elimination_scan(&stray, 1.0, &[4.0]).unwrap();
        assert!(v.iter().any(|v| v.center == 10 * 21 + 10 && v.retained == (1, 2)));
        assert!(elimination_scan(&stray, 0.0, &[4.0]).is_err());
    }

    #[test]
    fn h3_examples() {
        let collinear = Palette::new(vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let c = check_h3(&collinear);
        assert!(!c.satisfied);
        let w = c.worst.unwrap();
        assert_eq!((w.i, w.j, w.l), (1, 3, 2));
        assert_eq!(w.slack, 0.0);

        let tri = Palette::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(check_h3(&tri).satisfied);
        let two = Palette::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let c2 = check_h3(&two);
        assert!(c2.satisfied && c2.worst.is_none());
    }

    #[test]
    fn report_on_straight_interface() {
        let l = labeling(40, 40, |x, _| usize::from(x > 20));
        let p = Palette::new(vec![vec![0.0; 3], vec![1.0; 3]]).unwrap();
        let w = EdgeWeights::for_geometry(l.geometry());
        let opts = DiagnosticsOptions { density_radii: vec![16.0], ..Default::default() };
        let r = regularity_report(&l, &p, &w, &opts).unwrap();
        assert_eq!(r.jump_pixel_count, 80);
        let m = r.min_density_ratio[0].unwrap();
        assert!((m - 2.0).abs() / 2.0 <= 0.08, "{m}");
        assert!(r.elimination_violations.is_empty());
        assert!(r.elimination_curve.iter().all(|c| c.violation_count == 0));
        assert!(r.h3_satisfied);
    }

    proptest! {
        #[test]
        fn h3_permutation_invariant(colors in proptest::collection::vec(0.0f64..1.0, 12), seed in 0usize..24) {
            let p = Palette::new(colors.chunks(3).map(|c| c.to_vec()).collect()).unwrap();
            // one of the 24 permutations of four elements
            let mut idx: Vec<usize> = (0..4).collect();
            let mut s = seed;
            let mut perm = Vec::new();
            for m in (1..=4).rev() {
                perm.push(idx.remove(s % m));
                s /= m;
            }
            let q = Palette::new(perm.iter().map(|&i| p.color(i).to_vec()).collect()).unwrap();
            let (a, b) = (check_h3(&p), check_h3(&q));
            prop_assert_eq!(a.satisfied, b.satisfied);
            prop_assert!((a.worst.unwrap().slack - b.worst.unwrap().slack).abs() < 1e-12);
        }

        #[test]
        fn two_labels_never_violate(labels in proptest::collection::vec(0usize..2, 100), eta in 0.001f64..100.0) {
            let l = Labeling::new(GridGeometry::unit(10, 10).unwrap(), labels).unwrap();
            prop_assert!(elimination_scan(&l, eta, &[2.0, 3.0]).unwrap().is_empty());
        }
    }
}
