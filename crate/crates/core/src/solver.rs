//! Fixed-palette minimization by expansion moves (or ICM).
//!
//! An expansion move on label `α` lets every pixel either keep its label or
//! switch to `α`. Because color distances satisfy the triangle inequality,
//! the binary move energy is submodular and its exact minimizer is one
//! minimum cut.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::UnaryCosts;
use crate::error::{Error, Result};
use crate::mincut::{max_flow_min_cut, FlowNetwork};
use crate::model::{Instance, Palette};
use crate::raster::Labeling;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveOrder {
    /// Labels `0..k` (pixels in raster order for ICM).
    Sequential,
    /// A fresh seeded shuffle every sweep.
    RandomSeeded(u64),
    /// Labels in the given order every sweep. Must be a permutation of `0..k`.
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Engine {
    Expansion,
    Icm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_sweeps: usize,
    pub move_order: MoveOrder,
    pub engine: Engine,
    pub epsilon_improve: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_sweeps: 20, move_order: MoveOrder::Sequential, engine: Engine::Expansion, epsilon_improve: 1e-12 }
    }
}

impl SolveOptions {
    fn validate(&self, k: usize) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidValue("max_sweeps must be >= 1".into()));
        }
        if !(self.epsilon_improve.is_finite() && self.epsilon_improve >= 0.0) {
            return Err(Error::InvalidValue("epsilon_improve must be >= 0".into()));
        }
        if let MoveOrder::Explicit(order) = &self.move_order {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != (0..k).collect::<Vec<_>>() {
                return Err(Error::InvalidValue(format!("explicit move order {order:?} is not a permutation of 0..{k}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// A full sweep improved the energy by less than `epsilon_improve`.
    Converged,
    MaxSweeps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub initial_energy: f64,
    /// Energy after every move, accepted or not.
    pub energies: Vec<f64>,
    pub sweeps: usize,
    pub termination: Termination,
}

impl SolveTrace {
    pub fn final_energy(&self) -> f64 {
        self.energies.last().copied().unwrap_or(self.initial_energy)
    }

    /// Largest increase between consecutive recorded energies (0 if none).
    pub fn max_increase(&self) -> f64 {
        std::iter::once(self.initial_energy)
            .chain(self.energies.iter().copied())
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Precomputed unary and pairwise costs for a fixed palette.
pub(crate) struct CostModel {
    k: usize,
    unary: UnaryCosts,
    /// `(p, q, w_pq)` for every neighbor pair.
    edges: Vec<(usize, usize, f64)>,
    /// Per pixel: `(neighbor, w)`.
    adjacency: Vec<Vec<(usize, f64)>>,
    dist: Vec<f64>,
}

impl CostModel {
    pub(crate) fn new(instance: &Instance, palette: &Palette) -> Result<Self> {
        let geom = instance.geometry();
        let unary = UnaryCosts::new(instance, palette)?;
        let weights = instance.weights();
        let edges: Vec<(usize, usize, f64)> = geom.edges().map(|e| (e.p, e.q, weights.weight(e.dir))).collect();
        let mut adjacency = vec![Vec::new(); geom.pixel_count()];
        for &(p, q, w) in &edges {
            adjacency[p].push((q, w));
            adjacency[q].push((p, w));
        }
        Ok(Self { k: palette.len(), unary, edges, adjacency, dist: palette.distance_table() })
    }

    fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.k + j]
    }

    pub(crate) fn energy(&self, labels: &[usize]) -> f64 {
        let fidelity: f64 = labels.iter().enumerate().map(|(p, &l)| self.unary.cost(p, l)).sum();
        let perimeter: f64 = self.edges.iter().map(|&(p, q, w)| w * self.d(labels[p], labels[q])).sum();
        perimeter + fidelity
    }

    /// Energy of pixel `p` taking `label` with all neighbors fixed.
    fn local_cost(&self, labels: &[usize], p: usize, label: usize) -> f64 {
        self.unary.cost(p, label) + self.adjacency[p].iter().map(|&(q, w)| w * self.d(label, labels[q])).sum::<f64>()
    }

    /// Minimizer of the binary keep-or-switch-to-`alpha` move; returns the
    /// switch decision per pixel. Ties resolve to keeping the label.
    fn expansion_switches(&self, labels: &[usize], alpha: usize) -> Vec<bool> {
        let n = labels.len();
        let (source, sink) = (n, n + 1);
        // delta[p] = cost(switch) - cost(keep), linear part
        let mut delta: Vec<f64> = (0..n).map(|p| self.unary.cost(p, alpha) - self.unary.cost(p, labels[p])).collect();
        let mut pair_arcs = Vec::new();
        for &(p, q, w) in &self.edges {
            let (lp, lq) = (labels[p], labels[q]);
            let a = w * self.d(lp, lq);
            let b = w * self.d(lp, alpha);
            let c = w * self.d(alpha, lq);
            // E(x_p, x_q) = a + (c - a) x_p + (0 - c) x_q + (b + c - a)(1 - x_p) x_q
            delta[p] += c - a;
            delta[q] -= c;
            let coupling = b + c - a;
            if coupling > 0.0 {
                pair_arcs.push((p, q, coupling));
            }
        }
        let mut net = FlowNetwork::new(n + 2, source, sink).expect("terminals are distinct");
        for (p, &dl) in delta.iter().enumerate() {
            // source side = keep, sink side = switch
            if dl > 0.0 {
                net.add_arc(source, p, dl).expect("valid arc");
            } else if dl < 0.0 {
                net.add_arc(p, sink, -dl).expect("valid arc");
            }
        }
        for (p, q, c) in pair_arcs {
            net.add_arc(p, q, c).expect("valid arc");
        }
        let cut = max_flow_min_cut(&net);
        (0..n).map(|p| cut.sink_side[p]).collect()
    }

    /// Applies the optimal expansion on `alpha` if it lowers the energy.
    /// Returns the new energy.
    fn expand(&self, labels: &mut [usize], alpha: usize, energy: f64) -> f64 {
        let switches = self.expansion_switches(labels, alpha);
        let candidate: Vec<usize> =
            labels.iter().zip(&switches).map(|(&l, &s)| if s { alpha } else { l }).collect();
        let e = self.energy(&candidate);
        if e < energy {
            labels.copy_from_slice(&candidate);
            e
        } else {
            energy
        }
    }

    /// Best label for `p` given its neighbors; smallest index on ties.
    fn icm_choice(&self, labels: &[usize], p: usize) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for label in 0..self.k {
            let c = self.local_cost(labels, p, label);
            if c < best.1 {
                best = (label, c);
            }
        }
        best
    }
}

/// Nearest palette color outside the damage; inside, the color whose grey
/// level `L(a_i·e)` is closest to `g`. Smallest index on ties.
pub fn initial_labeling(instance: &Instance, palette: &Palette) -> Result<Labeling> {
    instance.check_palette(palette)?;
    let geom = *instance.geometry();
    let levels: Vec<f64> = palette.colors().iter().map(|c| instance.table().eval_color(c)).collect();
    let labels = (0..geom.pixel_count())
        .map(|p| {
            if instance.mask().is_damaged(p) {
                let g = instance.grey().get(p).ok_or(Error::MissingGrey { pixel: p })?;
                let mut best = (0, f64::INFINITY);
                for (i, lv) in levels.iter().enumerate() {
                    let d = (lv - g).abs();
                    if d < best.1 {
                        best = (i, d);
                    }
                }
                Ok(best.0)
            } else {
                Ok(palette.nearest(instance.image().pixel(p)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Labeling::new(geom, labels)
}

fn prepare(instance: &Instance, palette: &Palette, labeling: &Labeling) -> Result<CostModel> {
    instance.check_palette(palette)?;
    instance.check_labeling(labeling, palette)?;
    CostModel::new(instance, palette)
}

/// The minimum-energy labeling among those where every pixel keeps its
/// label or switches to `alpha`. Returns `labeling` itself when no switch
/// set lowers the energy.
pub fn expansion_move(instance: &Instance, palette: &Palette, labeling: &Labeling, alpha: usize) -> Result<Labeling> {
    let model = prepare(instance, palette, labeling)?;
    if alpha >= palette.len() {
        return Err(Error::LabelOutOfRange { label: alpha, k: palette.len() });
    }
    let mut labels = labeling.as_slice().to_vec();
    let e0 = model.energy(&labels);
    model.expand(&mut labels, alpha, e0);
    Labeling::new(*labeling.geometry(), labels)
}

/// Sets `pixel` to its energy-minimizing label with all other pixels fixed.
pub fn icm_move(instance: &Instance, palette: &Palette, labeling: &Labeling, pixel: usize) -> Result<Labeling> {
    let model = prepare(instance, palette, labeling)?;
    if pixel >= labeling.as_slice().len() {
        return Err(Error::InvalidValue(format!("pixel {pixel} outside the grid")));
    }
    let mut out = labeling.clone();
    let (label, _) = model.icm_choice(labeling.as_slice(), pixel);
    out.set(pixel, label);
    Ok(out)
}

/// Runs sweeps from [`initial_labeling`].
pub fn solve_fixed_palette(instance: &Instance, palette: &Palette, opts: &SolveOptions) -> Result<(Labeling, SolveTrace)> {
    let init = initial_labeling(instance, palette)?;
    solve_fixed_palette_from(instance, palette, init, opts)
}

/// Runs sweeps of moves from `initial` until a sweep improves the energy by
/// less than `epsilon_improve` or `max_sweeps` is reached.
pub fn solve_fixed_palette_from(
    instance: &Instance,
    palette: &Palette,
    initial: Labeling,
    opts: &SolveOptions,
) -> Result<(Labeling, SolveTrace)> {
    let model = prepare(instance, palette, &initial)?;
    opts.validate(palette.len())?;
    let k = palette.len();
    let geometry = *initial.geometry();
    let mut labels = initial.into_vec();
    let mut energy = model.energy(&labels);
    let mut trace = SolveTrace { initial_energy: energy, energies: Vec::new(), sweeps: 0, termination: Termination::MaxSweeps };
    let mut rng = match opts.move_order {
        MoveOrder::RandomSeeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let order_for = |len: usize, rng: &mut Option<ChaCha8Rng>| -> Vec<usize> {
        let mut order: Vec<usize> = (0..len).collect();
        if let Some(rng) = rng {
            order.shuffle(rng);
        }
        order
    };

    for _ in 0..opts.max_sweeps {
        let start = energy;
        match opts.engine {
            Engine::Expansion => {
                let order = match &opts.move_order {
                    MoveOrder::Explicit(order) => order.clone(),
                    _ => order_for(k, &mut rng),
                };
                for alpha in order {
                    energy = model.expand(&mut labels, alpha, energy);
                    trace.energies.push(energy);
                }
            }
            Engine::Icm => {
                for p in order_for(labels.len(), &mut rng) {
                    let current = model.local_cost(&labels, p, labels[p]);
                    let (label, cost) = model.icm_choice(&labels, p);
                    if cost < current {
                        labels[p] = label;
                        energy -= current - cost;
                    }
                    trace.energies.push(energy);
                }
                // drop accumulated rounding from the incremental updates
                energy = model.energy(&labels);
            }
        }
        trace.sweeps += 1;
        if start - energy < opts.epsilon_improve {
            trace.termination = Termination::Converged;
            break;
        }
    }
    Ok((Labeling::new(geometry, labels)?, trace))
}
