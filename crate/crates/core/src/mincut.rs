//! s-t maximum flow / minimum cut with floating-point capacities.
//!
//! Flow is pushed along shortest residual paths, phase by phase on the BFS
//! level graph (Dinic). A residual capacity at or below [`SATURATION_EPS`]
//! counts as saturated.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub const SATURATION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    nodes: usize,
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Result<Self> {
        if source >= nodes || sink >= nodes {
            return Err(Error::InvalidNetwork(format!("terminals ({source}, {sink}) outside {nodes} nodes")));
        }
        if source == sink {
            return Err(Error::InvalidNetwork("source and sink coincide".into()));
        }
        Ok(Self { nodes, source, sink, arcs: Vec::new() })
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64) -> Result<()> {
        if from >= self.nodes || to >= self.nodes {
            return Err(Error::InvalidNetwork(format!("arc ({from}, {to}) outside {} nodes", self.nodes)));
        }
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(Error::InvalidNetwork(format!("capacity {capacity} must be finite and >= 0")));
        }
        self.arcs.push(Arc { from, to, capacity });
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Total capacity of arcs leaving `side` (`side[v]` = on the source side).
    pub fn cut_capacity(&self, side: &[bool]) -> f64 {
        self.arcs.iter().filter(|a| side[a.from] && !side[a.to]).map(|a| a.capacity).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub flow_value: f64,
    /// Nodes reachable from the source in the final residual graph: the
    /// smallest minimum-cut source set.
    pub source_side: Vec<bool>,
    /// Nodes that can reach the sink in the final residual graph. Its
    /// complement is the largest minimum-cut source set.
    pub sink_side: Vec<bool>,
}

impl MinCut {
    pub fn largest_source_side(&self) -> Vec<bool> {
        self.sink_side.iter().map(|&b| !b).collect()
    }
}

struct Residual {
    head: Vec<usize>,
    // adjacency: for each node, list of residual edge ids
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl Residual {
    fn build(net: &FlowNetwork) -> Self {
        let mut adj = vec![Vec::new(); net.nodes];
        let mut to = Vec::with_capacity(2 * net.arcs.len());
        let mut cap = Vec::with_capacity(2 * net.arcs.len());
        for a in &net.arcs {
            // edge 2i is the arc, 2i+1 its reverse
            adj[a.from].push(to.len());
            to.push(a.to);
            cap.push(a.capacity);
            adj[a.to].push(to.len());
            to.push(a.from);
            cap.push(0.0);
        }
        Self { head: vec![0; net.nodes], adj, to, cap }
    }

    fn levels(&self, source: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > SATURATION_EPS && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    /// Saturates one blocking flow of the level graph; returns the flow pushed.
    fn blocking_flow(&mut self, source: usize, sink: usize, level: &mut [usize]) -> f64 {
        self.head.iter_mut().for_each(|h| *h = 0);
        let mut pushed = 0.0;
        let mut path: Vec<usize> = Vec::new();
        let mut u = source;
        loop {
            if u == sink {
                let bottleneck = path.iter().map(|&e| self.cap[e]).fold(f64::INFINITY, f64::min);
                for &e in &path {
                    self.cap[e] -= bottleneck;
                    self.cap[e ^ 1] += bottleneck;
                }
                pushed += bottleneck;
                path.clear();
                u = source;
                continue;
            }
            let mut advanced = false;
            while self.head[u] < self.adj[u].len() {
                let e = self.adj[u][self.head[u]];
                let v = self.to[e];
                if self.cap[e] > SATURATION_EPS && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                self.head[u] += 1;
            }
            if !advanced {
                // dead end: remove u from the level graph and retreat
                level[u] = usize::MAX;
                match path.pop() {
                    Some(e) => {
                        u = self.to[e ^ 1];
                        self.head[u] += 1;
                    }
                    None => return pushed,
                }
            }
        }
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        self.search(start, |e| e)
    }

    fn reaching(&self, target: usize) -> Vec<bool> {
        // v reaches target iff the residual arc v->w is usable; from w we
        // look at edge e (w->v) whose partner e^1 is v->w
        self.search(target, |e| e ^ 1)
    }

    fn search(&self, start: usize, usable: impl Fn(usize) -> usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if !seen[v] && self.cap[usable(e)] > SATURATION_EPS {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// Maximum flow value and minimum cut of `net`. Deterministic for a given
/// arc insertion order.
pub fn max_flow_min_cut(net: &FlowNetwork) -> MinCut {
    let mut residual = Residual::build(net);
    let mut flow_value = 0.0;
    loop {
        let mut level = residual.levels(net.source);
        if level[net.sink] == usize::MAX {
            break;
        }
        let pushed = residual.blocking_flow(net.source, net.sink, &mut level);
        if pushed <= 0.0 {
            break;
        }
        flow_value += pushed;
    }
    MinCut {
        flow_value,
        source_side: residual.reachable_from(net.source),
        sink_side: residual.reaching(net.sink),
    }
}
