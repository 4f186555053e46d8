//! Offline optimum: exhaustive enumeration and a min-cost-flow solver.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::ledger::Decision;

/// Largest `(|U| + 1)^|V|` the exhaustive search accepts.
pub const EXHAUSTIVE_LIMIT: f64 = 1e7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub value: f64,
    pub assignment: Vec<Decision>,
}

fn assignment_value(instance: &ProblemInstance, assignment: &[Decision]) -> f64 {
    assignment
        .iter()
        .zip(&instance.arrivals)
        .map(|(d, row)| d.weight_in(row))
        .sum()
}

/// Exact optimum by depth-first enumeration of every arrival's choice, with
/// capacity pruning and a bound on the best reward still obtainable.
pub fn opt_exhaustive(instance: &ProblemInstance) -> Result<OptResult> {
    let n_on = instance.num_online();
    let combinations = (instance.num_offline as f64 + 1.0).powi(n_on as i32);
    if combinations > EXHAUSTIVE_LIMIT {
        return Err(Error::Size {
            combinations,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    // suffix_best[v] = sum of row maxima from arrival v on
    let mut suffix_best = vec![0.0; n_on + 1];
    for v in (0..n_on).rev() {
        let row_max = instance.arrivals[v].iter().copied().fold(0.0, f64::max);
        suffix_best[v] = suffix_best[v + 1] + row_max;
    }

    struct Search<'a> {
        inst: &'a ProblemInstance,
        suffix_best: Vec<f64>,
        remaining: Vec<u32>,
        current: Vec<Decision>,
        best_value: f64,
        best: Vec<Decision>,
    }

    impl Search<'_> {
        fn visit(&mut self, v: usize, value: f64) {
            if v == self.inst.num_online() {
                if value > self.best_value {
                    self.best_value = value;
                    self.best.clone_from(&self.current);
                }
                return;
            }
            if value + self.suffix_best[v] <= self.best_value {
                return;
            }
            let inst = self.inst;
            for (u, &w) in inst.arrivals[v].iter().enumerate() {
                if self.remaining[u] == 0 || w <= 0.0 {
                    continue;
                }
                self.remaining[u] -= 1;
                self.current[v] = Decision::Assign(u);
                self.visit(v + 1, value + w);
                self.remaining[u] += 1;
            }
            self.current[v] = Decision::Skip;
            self.visit(v + 1, value);
        }
    }

    let mut search = Search {
        inst: instance,
        suffix_best,
        remaining: instance.capacities.clone(),
        current: vec![Decision::Skip; n_on],
        best_value: 0.0,
        best: vec![Decision::Skip; n_on],
    };
    search.visit(0, 0.0);
    let assignment = search.best;
    Ok(OptResult {
        value: assignment_value(instance, &assignment),
        assignment,
    })
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: usize,
    cap: i64,
    cost: f64,
}

struct FlowGraph {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        FlowGraph {
            arcs: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    /// Adds an arc and its residual twin; returns the forward arc id.
    fn add(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc { to: from, cap: 0, cost: -cost });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }
}

#[derive(PartialEq)]
struct Label(f64, usize);

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const PATH_EPS: f64 = 1e-12;

/// Exact optimum via successive shortest augmenting paths on
/// source → arrivals (cap 1) → offline items (cap 1, cost −w) → sink (cap
/// `c_u`), augmenting while the cheapest path has negative cost.
///
/// Dijkstra runs on reduced costs; initial potentials come from one
/// Bellman-Ford pass over the acyclic network.
pub fn opt_flow(instance: &ProblemInstance) -> OptResult {
    let n_on = instance.num_online();
    let n_off = instance.num_offline;
    let source = 0;
    let online = |v: usize| 1 + v;
    let offline = |u: usize| 1 + n_on + u;
    let sink = 1 + n_on + n_off;
    let n_nodes = sink + 1;

    let mut g = FlowGraph::new(n_nodes);
    for v in 0..n_on {
        g.add(source, online(v), 1, 0.0);
    }
    let mut match_arcs = Vec::new();
    for (v, row) in instance.arrivals.iter().enumerate() {
        for (u, &w) in row.iter().enumerate() {
            if w > 0.0 {
                match_arcs.push((v, u, g.add(online(v), offline(u), 1, -w)));
            }
        }
    }
    for (u, &c) in instance.capacities.iter().enumerate() {
        g.add(offline(u), sink, i64::from(c), 0.0);
    }

    // Bellman-Ford potentials
    let mut potential = vec![f64::INFINITY; n_nodes];
    potential[source] = 0.0;
    for _ in 0..n_nodes {
        let mut changed = false;
        for from in 0..n_nodes {
            if potential[from].is_infinite() {
                continue;
            }
            for &id in &g.adj[from] {
                let arc = g.arcs[id];
                if arc.cap > 0 && potential[from] + arc.cost < potential[arc.to] {
                    potential[arc.to] = potential[from] + arc.cost;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for p in potential.iter_mut() {
        if p.is_infinite() {
            *p = 0.0;
        }
    }

    let mut dist = vec![f64::INFINITY; n_nodes];
    let mut via = vec![usize::MAX; n_nodes];
    loop {
        dist.fill(f64::INFINITY);
        via.fill(usize::MAX);
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Label(0.0, source));
        while let Some(Label(d, node)) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            for &id in &g.adj[node] {
                let arc = g.arcs[id];
                if arc.cap <= 0 {
                    continue;
                }
                let reduced = (arc.cost + potential[node] - potential[arc.to]).max(0.0);
                let nd = d + reduced;
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    via[arc.to] = id;
                    heap.push(Label(nd, arc.to));
                }
            }
        }
        if dist[sink].is_infinite() {
            break;
        }
        let path_cost = dist[sink] - potential[source] + potential[sink];
        if path_cost >= -PATH_EPS {
            break;
        }
        for node in 0..n_nodes {
            if dist[node].is_finite() {
                potential[node] += dist[node];
            }
        }
        let mut node = sink;
        while node != source {
            let id = via[node];
            g.arcs[id].cap -= 1;
            g.arcs[id ^ 1].cap += 1;
            node = g.arcs[id ^ 1].to;
        }
    }

    let mut assignment = vec![Decision::Skip; n_on];
    for (v, u, id) in match_arcs {
        if g.arcs[id].cap == 0 {
            assignment[v] = Decision::Assign(u);
        }
    }
    OptResult {
        value: assignment_value(instance, &assignment),
        assignment,
    }
}
