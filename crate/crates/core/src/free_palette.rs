//! Free-palette minimization: the `k` colors are unknowns too.
//!
//! The outer loop alternates a fixed-palette solve with a per-label color
//! update, merging colors that become (numerically) equal and dropping
//! labels whose region is empty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distortion::DistortionTable;
use crate::energy::total_energy;
use crate::error::{Error, Result};
use crate::model::{dot, euclidean, Instance, Palette};
use crate::raster::{ColorImage, DamageMask, Labeling};
use crate::solver::{initial_labeling, solve_fixed_palette_from, SolveOptions};

/// Grid step of the 1-D search along `e`.
pub const SEARCH_STEP: f64 = 1e-3;
/// Final bracket width of the golden-section refinement.
pub const REFINE_TOL: f64 = 1e-8;
/// Relative margin added on both sides of the projected unit cube when
/// searching along `e`; `[-0.5, 1.5]` for an axis direction.
pub const SEARCH_MARGIN: f64 = 0.5;

/// Search interval for `t = a·e`: the projection of `[0,1]^M` onto `e`,
/// widened by [`SEARCH_MARGIN`] of its length on each side.
pub fn search_range(direction: &[f64]) -> (f64, f64) {
    let lo: f64 = direction.iter().map(|v| v.min(0.0)).sum();
    let hi: f64 = direction.iter().map(|v| v.max(0.0)).sum();
    let width = hi - lo;
    (lo - SEARCH_MARGIN * width, hi + SEARCH_MARGIN * width)
}

/// Global minimization of a 1-D function on `[lo, hi]`: a grid scan at
/// [`SEARCH_STEP`] followed by golden-section refinement around the best
/// grid point. Returns `(argmin, min)`.
pub fn grid_then_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let steps = ((hi - lo) / SEARCH_STEP).ceil() as usize;
    let mut best = (lo, f(lo));
    for i in 1..=steps {
        let t = (lo + i as f64 * SEARCH_STEP).min(hi);
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let (mut a, mut b) = ((best.0 - SEARCH_STEP).max(lo), (best.0 + SEARCH_STEP).min(hi));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > REFINE_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = (a + b) / 2.0;
    let v = f(t);
    if v < best.1 {
        (t, v)
    } else {
        best
    }
}

/// Data of one region for the color update.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionData<'a> {
    /// Colors `f(p)` of undamaged pixels in the region.
    pub outside: Vec<&'a [f64]>,
    /// Grey values `g(p)` of damaged pixels in the region.
    pub inside: Vec<f64>,
}

/// Weights of the two fidelity sums, pixel area folded in. Unlike
/// [`ModelParams`](crate::model::ModelParams) a zero weight is allowed,
/// which switches the corresponding sum off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityWeights {
    pub outside: f64,
    pub inside: f64,
    pub p: f64,
}

impl FidelityWeights {
    pub fn of(instance: &Instance) -> Self {
        let area = instance.geometry().pixel_area();
        let params = instance.params();
        Self { outside: params.lambda() * area, inside: params.mu() * area, p: params.p() }
    }
}

/// Fidelity of a single color on a region.
pub fn region_fidelity(color: &[f64], region: &RegionData<'_>, weights: FidelityWeights, table: &DistortionTable) -> f64 {
    let out: f64 = region.outside.iter().map(|f| crate::energy::norm_pow(color, f, weights.p)).sum();
    let level = table.eval_color(color);
    let ins: f64 = region.inside.iter().map(|g| (level - g).abs().powf(weights.p)).sum();
    weights.outside * out + weights.inside * ins
}

fn split(color: &[f64], e: &[f64]) -> (f64, Vec<f64>) {
    let t = dot(color, e);
    (t, color.iter().zip(e).map(|(c, ev)| c - t * ev).collect())
}

fn compose(t: f64, perp: &[f64], e: &[f64]) -> Vec<f64> {
    perp.iter().zip(e).map(|(p, ev)| p + t * ev).collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Minimizer of the region fidelity over `a ∈ ℝ^M`.
///
/// The color is split into `t = a·e` and the part orthogonal to `e`. For
/// `p = 2` the two decouple: the orthogonal part is the mean of `f` over
/// the undamaged pixels and `t` minimizes a 1-D (possibly nonconvex)
/// function, solved by [`grid_then_golden`] (or in closed form when the
/// grey term is absent). For other `p` the orthogonal part starts from the
/// component-wise median (`p = 1`) or mean and is refined by iteratively
/// reweighted least squares between two 1-D searches; the previous color
/// is returned if it is no worse. An empty region returns `previous`.
pub fn optimal_region_color(
    previous: &[f64],
    region: &RegionData<'_>,
    weights: FidelityWeights,
    table: &DistortionTable,
) -> Vec<f64> {
    let e = table.direction();
    let has_out = !region.outside.is_empty() && weights.outside > 0.0;
    let has_in = !region.inside.is_empty() && weights.inside > 0.0;
    if !has_out && !has_in {
        return previous.to_vec();
    }
    let perp_prev = split(previous, e).1;
    let (lo, hi) = search_range(e);
    let m = previous.len();

    if weights.p == 2.0 {
        let perp = if has_out {
            let mut acc = vec![0.0; m];
            for f in &region.outside {
                for (a, v) in acc.iter_mut().zip(*f) {
                    *a += v;
                }
            }
            let n = region.outside.len() as f64;
            let mean: Vec<f64> = acc.iter().map(|a| a / n).collect();
            split(&mean, e).1
        } else {
            perp_prev.clone()
        };
        let t = if !has_in {
            let n = region.outside.len() as f64;
            region.outside.iter().map(|f| dot(f, e)).sum::<f64>() / n
        } else {
            // sufficient statistics make each evaluation O(1)
            let n_o = if has_out { region.outside.len() as f64 } else { 0.0 };
            let (s1, s2) = region.outside.iter().map(|f| dot(f, e)).fold((0.0, 0.0), |(a, b), v| (a + v, b + v * v));
            let n_i = region.inside.len() as f64;
            let (g1, g2) = region.inside.iter().fold((0.0, 0.0), |(a, b), g| (a + g, b + g * g));
            let phi = |t: f64| {
                let l = table.eval(t);
                weights.outside * (n_o * t * t - 2.0 * t * s1 + if has_out { s2 } else { 0.0 })
                    + weights.inside * (n_i * l * l - 2.0 * l * g1 + g2)
            };
            grid_then_golden(phi, lo, hi).0
        };
        let candidate = compose(t, &perp, e);
        return if region_fidelity(&candidate, region, weights, table) <= region_fidelity(previous, region, weights, table) {
            candidate
        } else {
            previous.to_vec()
        };
    }

    let p = weights.p;
    let mut perp = if has_out {
        let start: Vec<f64> = (0..m)
            .map(|c| {
                let mut col: Vec<f64> = region.outside.iter().map(|f| f[c]).collect();
                if p == 1.0 {
                    median(&mut col)
                } else {
                    col.iter().sum::<f64>() / col.len() as f64
                }
            })
            .collect();
        split(&start, e).1
    } else {
        perp_prev.clone()
    };
    let objective = |t: f64, perp: &[f64]| region_fidelity(&compose(t, perp, e), region, weights, table);
    let mut t = grid_then_golden(|t| objective(t, &perp), lo, hi).0;
    if has_out {
        let outside_perp: Vec<Vec<f64>> = region.outside.iter().map(|f| split(f, e).1).collect();
        let outside_t: Vec<f64> = region.outside.iter().map(|f| dot(f, e)).collect();
        for _ in 0..50 {
            let mut num = vec![0.0; m];
            let mut den = 0.0;
            for (fp, ft) in outside_perp.iter().zip(&outside_t) {
                let r2 = (t - ft).powi(2) + fp.iter().zip(&perp).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                let w = r2.sqrt().max(1e-12).powf(p - 2.0);
                den += w;
                for (n, v) in num.iter_mut().zip(fp) {
                    *n += w * v;
                }
            }
            let next: Vec<f64> = num.iter().map(|n| n / den).collect();
            if objective(t, &next) > objective(t, &perp) {
                break;
            }
            let moved = euclidean(&next, &perp);
            perp = next;
            if moved < 1e-12 {
                break;
            }
        }
        t = grid_then_golden(|t| objective(t, &perp), lo, hi).0;
    }
    let candidate = compose(t, &perp, e);
    if region_fidelity(&candidate, region, weights, table) <= region_fidelity(previous, region, weights, table) {
        candidate
    } else {
        previous.to_vec()
    }
}

fn region_of<'a>(instance: &'a Instance, labeling: &Labeling, label: usize) -> RegionData<'a> {
    let mut region = RegionData { outside: Vec::new(), inside: Vec::new() };
    for (p, &l) in labeling.as_slice().iter().enumerate() {
        if l != label {
            continue;
        }
        if instance.mask().is_damaged(p) {
            region.inside.push(instance.grey().get(p).expect("instance guarantees grey on damage"));
        } else {
            region.outside.push(instance.image().pixel(p));
        }
    }
    region
}

/// The fidelity-optimal color for region `label` of `labeling`.
pub fn update_color(instance: &Instance, palette: &Palette, labeling: &Labeling, label: usize) -> Result<Vec<f64>> {
    instance.check_palette(palette)?;
    instance.check_labeling(labeling, palette)?;
    if label >= palette.len() {
        return Err(Error::LabelOutOfRange { label, k: palette.len() });
    }
    let region = region_of(instance, labeling, label);
    Ok(optimal_region_color(palette.color(label), &region, FidelityWeights::of(instance), instance.table()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub palette: Palette,
    pub labeling: Labeling,
    /// `(kept, removed)` pairs in the indices of the input palette.
    pub merged_pairs: Vec<(usize, usize)>,
}

/// Merges colors within `tol` (Euclidean) of an earlier representative
/// into it and remaps labels to the compacted palette.
pub fn merge_degenerate(palette: &Palette, labeling: &Labeling, tol: f64) -> Result<Merged> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidValue(format!("merge tolerance must be >= 0, got {tol}")));
    }
    labeling.check_range(palette.len())?;
    let k = palette.len();
    let mut rep: Vec<usize> = (0..k).collect();
    let mut merged_pairs = Vec::new();
    for j in 0..k {
        if let Some(i) = (0..j).find(|&i| rep[i] == i && palette.distance(i, j) <= tol) {
            rep[j] = i;
            merged_pairs.push((i, j));
        }
    }
    let mut new_index = vec![usize::MAX; k];
    let mut colors = Vec::new();
    for i in 0..k {
        if rep[i] == i {
            new_index[i] = colors.len();
            colors.push(palette.color(i).to_vec());
        }
    }
    let labels = labeling.as_slice().iter().map(|&l| new_index[rep[l]]).collect();
    Ok(Merged { palette: Palette::new(colors)?, labeling: Labeling::new(*labeling.geometry(), labels)?, merged_pairs })
}

/// Removes labels that no pixel uses (keeping at least one).
fn drop_empty_labels(palette: &Palette, labeling: &Labeling) -> Result<(Palette, Labeling, Vec<usize>)> {
    let k = palette.len();
    let mut used = vec![false; k];
    for &l in labeling.as_slice() {
        used[l] = true;
    }
    let dropped: Vec<usize> = (0..k).filter(|&i| !used[i]).collect();
    if dropped.is_empty() {
        return Ok((palette.clone(), labeling.clone(), dropped));
    }
    let mut new_index = vec![usize::MAX; k];
    let mut colors = Vec::new();
    for i in (0..k).filter(|&i| used[i]) {
        new_index[i] = colors.len();
        colors.push(palette.color(i).to_vec());
    }
    let labels = labeling.as_slice().iter().map(|&l| new_index[l]).collect();
    Ok((Palette::new(colors)?, Labeling::new(*labeling.geometry(), labels)?, dropped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansOutcome {
    pub palette: Palette,
    pub warnings: Vec<String>,
}

pub const KMEANS_MAX_ITERATIONS: usize = 50;

/// k-means++ seeding and Lloyd iterations on the undamaged pixel colors.
///
/// When there are at most `k` distinct colors they are returned directly
/// (in order of first appearance), padded by repeats with a warning if
/// there are fewer than `k`.
pub fn init_palette_kmeans(image: &ColorImage, mask: &DamageMask, k: usize, seed: u64) -> Result<KmeansOutcome> {
    if k == 0 {
        return Err(Error::InvalidValue("k must be >= 1".into()));
    }
    if !image.geometry().same_lattice(mask.geometry()) {
        return Err(Error::GeometryMismatch("mask and image lattices differ".into()));
    }
    let points: Vec<&[f64]> =
        (0..image.geometry().pixel_count()).filter(|&p| !mask.is_damaged(p)).map(|p| image.pixel(p)).collect();
    if points.is_empty() {
        return Err(Error::InsufficientData("no undamaged pixels to cluster".into()));
    }
    let mut distinct: Vec<&[f64]> = Vec::new();
    for &pt in &points {
        if !distinct.contains(&pt) {
            distinct.push(pt);
            if distinct.len() > k {
                break;
            }
        }
    }
    let mut warnings = Vec::new();
    if distinct.len() <= k {
        if distinct.len() < k {
            warnings.push(format!(
                "only {} distinct undamaged colors for k = {k}; palette padded with duplicates",
                distinct.len()
            ));
        }
        let colors = (0..k).map(|i| distinct[i % distinct.len()].to_vec()).collect();
        return Ok(KmeansOutcome { palette: Palette::new(colors)?, warnings });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[idx].to_vec());
        for (d, p) in d2.iter_mut().zip(&points) {
            *d = d.min(sq(p, centers.last().unwrap()));
        }
    }

    let m = image.channels();
    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = sq(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            if assign[i] != best.0 {
                assign[i] = best.0;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; m]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(*p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed from the point farthest from its own center
                let far = (0..points.len())
                    .fold((0, -1.0), |best, i| {
                        let d = sq(points[i], &centers[assign[i]]);
                        if d > best.1 { (i, d) } else { best }
                    })
                    .0;
                centers[c] = points[far].to_vec();
                assign[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(KmeansOutcome { palette: Palette::new(centers)?, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeKind {
    /// Two colors within the merge tolerance.
    Duplicate,
    /// A label with no pixels.
    EmptyRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub iteration: usize,
    pub kind: MergeKind,
    /// 1-based label numbers in the palette at the start of the iteration;
    /// `kept` is 0 for an empty-region removal.
    pub kept: usize,
    pub removed: usize,
    /// Energy after minus energy before the merge step of this iteration.
    pub energy_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreePaletteOptions {
    pub solve: SolveOptions,
    pub seed: u64,
    pub max_outer: usize,
    pub outer_tol: f64,
    pub merge_tol: f64,
}

impl Default for FreePaletteOptions {
    fn default() -> Self {
        Self { solve: SolveOptions::default(), seed: 0, max_outer: 30, outer_tol: 1e-10, merge_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteSolveResult {
    pub palette: Palette,
    pub labeling: Labeling,
    /// Energy at the end of every outer iteration.
    pub outer_energies: Vec<f64>,
    /// Every energy evaluated after a fixed-palette solve or an accepted
    /// color update, in order.
    pub step_energies: Vec<f64>,
    pub merge_events: Vec<MergeEvent>,
    pub warnings: Vec<String>,
}

/// Number of halvings tried when a fidelity-optimal color would raise the
/// total energy through the interface term.
const BACKTRACK_STEPS: usize = 20;

/// Alternates fixed-palette solves and color updates from a palette.
pub fn solve_free_palette_from(instance: &Instance, palette: Palette, opts: &FreePaletteOptions) -> Result<PaletteSolveResult> {
    instance.check_palette(&palette)?;
    if opts.max_outer == 0 {
        return Err(Error::InvalidValue("max_outer must be >= 1".into()));
    }
    let mut palette = palette;
    let mut labeling = initial_labeling(instance, &palette)?;
    let mut result = PaletteSolveResult {
        palette: palette.clone(),
        labeling: labeling.clone(),
        outer_energies: Vec::new(),
        step_energies: Vec::new(),
        merge_events: Vec::new(),
        warnings: Vec::new(),
    };
    let energy = |p: &Palette, l: &Labeling| total_energy(instance, p, l).map(|e| e.total);

    for iteration in 0..opts.max_outer {
        // degenerate colors and empty regions
        let before = energy(&palette, &labeling)?;
        let merged = merge_degenerate(&palette, &labeling, opts.merge_tol)?;
        let (p2, l2, dropped) = drop_empty_labels(&merged.palette, &merged.labeling)?;
        if !merged.merged_pairs.is_empty() || !dropped.is_empty() {
            let change = energy(&p2, &l2)? - before;
            for &(kept, removed) in &merged.merged_pairs {
                result.merge_events.push(MergeEvent {
                    iteration,
                    kind: MergeKind::Duplicate,
                    kept: kept + 1,
                    removed: removed + 1,
                    energy_change: change,
                });
            }
            // `dropped` indexes the merged palette; map back to the input palette
            let survivors: Vec<usize> = (0..palette.len()).filter(|&i| merged.merged_pairs.iter().all(|&(_, r)| r != i)).collect();
            for d in dropped {
                result.merge_events.push(MergeEvent {
                    iteration,
                    kind: MergeKind::EmptyRegion,
                    kept: 0,
                    removed: survivors[d] + 1,
                    energy_change: change,
                });
            }
            palette = p2;
            labeling = l2;
        }

        let (solved, _) = solve_fixed_palette_from(instance, &palette, labeling, &opts.solve)?;
        labeling = solved;
        let mut current = energy(&palette, &labeling)?;
        result.step_energies.push(current);

        for label in 0..palette.len() {
            let target = update_color(instance, &palette, &labeling, label)?;
            let old = palette.color(label).to_vec();
            let mut step = 1.0;
            for _ in 0..BACKTRACK_STEPS {
                let trial: Vec<f64> = old.iter().zip(&target).map(|(o, t)| o + step * (t - o)).collect();
                let mut colors = palette.colors().to_vec();
                colors[label] = trial;
                let candidate = Palette::new(colors)?;
                let e = energy(&candidate, &labeling)?;
                if e <= current {
                    if e < current || step == 1.0 {
                        palette = candidate;
                        current = e;
                        result.step_energies.push(current);
                    }
                    break;
                }
                step /= 2.0;
            }
        }
        let previous = result.outer_energies.last().copied();
        result.outer_energies.push(current);
        if previous.is_some_and(|prev| prev - current < opts.outer_tol) {
            break;
        }
    }
    result.palette = palette;
    result.labeling = labeling;
    Ok(result)
}

/// Free-palette solve from a k-means++ palette of the undamaged colors.
pub fn solve_free_palette(instance: &Instance, k: usize, opts: &FreePaletteOptions) -> Result<PaletteSolveResult> {
    let init = init_palette_kmeans(instance.image(), instance.mask(), k, opts.seed)?;
    let mut result = solve_free_palette_from(instance, init.palette, opts)?;
    result.warnings.splice(0..0, init.warnings);
    Ok(result)
}
