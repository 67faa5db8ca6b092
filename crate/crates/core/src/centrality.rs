//! Node rankings and community detection used by the baseline selectors.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::metrics::UNREACHED;
use crate::graph::{Direction, Graph, NodeId};
use crate::rng::CounterRng;

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

const SOURCE_CHUNK: usize = 64;
const MAX_PROPAGATION_SWEEPS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    PageRank,
    Closeness,
    Betweenness,
    InDegree,
    OutDegree,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::PageRank,
        Measure::Closeness,
        Measure::Betweenness,
        Measure::InDegree,
        Measure::OutDegree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::PageRank => "pagerank",
            Measure::Closeness => "closeness",
            Measure::Betweenness => "betweenness",
            Measure::InDegree => "indegree",
            Measure::OutDegree => "outdegree",
        }
    }

    /// Computes the measure with default parameters.
    pub fn compute(self, graph: &Graph) -> Result<ScoreVector> {
        match self {
            Measure::PageRank => pagerank(graph, DEFAULT_DAMPING, DEFAULT_TOL, DEFAULT_MAX_ITER),
            Measure::Closeness => Ok(closeness(graph)),
            Measure::Betweenness => Ok(betweenness(graph)),
            Measure::InDegree => Ok(degree_scores(graph, Direction::In)),
            Measure::OutDegree => Ok(degree_scores(graph, Direction::Out)),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown measure {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub measure: Measure,
    pub scores: Vec<f64>,
}

impl ScoreVector {
    /// Nodes by descending score, lower id first on ties.
    pub fn ranking(&self) -> Vec<NodeId> {
        let mut order: Vec<NodeId> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "node,{}", self.measure)?;
        for (v, s) in self.scores.iter().enumerate() {
            writeln!(out, "{v},{s}")?;
        }
        Ok(())
    }
}

/// Power iteration for the random surfer following out-edges. Mass at
/// nodes without out-edges is spread uniformly.
pub fn pagerank(graph: &Graph, damping: f64, tol: f64, max_iter: usize) -> Result<ScoreVector> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidParameter(format!("damping {damping} outside (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let n = graph.n();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        let dangling: f64 = graph.nodes().filter(|&v| graph.out_degree(v) == 0).map(|v| x[v]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        for v in graph.nodes() {
            let inflow: f64 = graph
                .in_neighbors(v)
                .iter()
                .map(|&u| x[u] / graph.out_degree(u) as f64)
                .sum();
            next[v] = base + damping * inflow;
        }
        let change: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if change < tol {
            return Ok(ScoreVector { measure: Measure::PageRank, scores: x });
        }
    }
    Err(Error::NonConvergence { what: "pagerank", iterations: max_iter })
}

/// Component-scaled closeness: `(r - 1)^2 / ((n - 1) * Σ d(v, u))` over
/// the `r` nodes reachable from `v` (itself included); 0 if `r = 1`.
pub fn closeness(graph: &Graph) -> ScoreVector {
    let n = graph.n();
    let scores = graph
        .nodes()
        .into_par_iter()
        .map_init(
            || (Vec::new(), VecDeque::new()),
            |(dist, queue), v| {
                graph.bfs_from(v, dist, queue);
                let (reach, total) = dist
                    .iter()
                    .filter(|&&d| d != UNREACHED)
                    .fold((0usize, 0usize), |(r, t), &d| (r + 1, t + d));
                if reach <= 1 {
                    0.0
                } else {
                    let r = (reach - 1) as f64;
                    r * r / ((n - 1) as f64 * total as f64)
                }
            },
        )
        .collect();
    ScoreVector { measure: Measure::Closeness, scores }
}

/// Shortest-path betweenness over ordered source/target pairs, by
/// dependency accumulation on each source's BFS DAG.
pub fn betweenness(graph: &Graph) -> ScoreVector {
    let n = graph.n();
    // Fixed chunks summed in order keep the float result independent of
    // the thread count.
    let partials: Vec<Vec<f64>> = (0..n.div_ceil(SOURCE_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut ws = Workspace::new(n);
            for s in chunk * SOURCE_CHUNK..((chunk + 1) * SOURCE_CHUNK).min(n) {
                ws.accumulate(graph, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut scores = vec![0.0; n];
    for p in partials {
        for (a, b) in scores.iter_mut().zip(p) {
            *a += b;
        }
    }
    ScoreVector { measure: Measure::Betweenness, scores }
}

struct Workspace {
    dist: Vec<usize>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    order: Vec<NodeId>,
    queue: VecDeque<NodeId>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![UNREACHED; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    fn accumulate(&mut self, graph: &Graph, s: NodeId, acc: &mut [f64]) {
        self.dist.fill(UNREACHED);
        self.sigma.fill(0.0);
        self.delta.fill(0.0);
        self.order.clear();
        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.queue.push_back(s);
        while let Some(u) = self.queue.pop_front() {
            self.order.push(u);
            for &w in graph.out_neighbors(u) {
                if self.dist[w] == UNREACHED {
                    self.dist[w] = self.dist[u] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[u] + 1 {
                    self.sigma[w] += self.sigma[u];
                }
            }
        }
        for &w in self.order.iter().rev() {
            for &u in graph.out_neighbors(w) {
                if self.dist[u] == self.dist[w] + 1 {
                    self.delta[w] += self.sigma[w] / self.sigma[u] * (1.0 + self.delta[u]);
                }
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

pub fn degree_scores(graph: &Graph, direction: Direction) -> ScoreVector {
    let (measure, scores) = match direction {
        Direction::Out => (Measure::OutDegree, graph.nodes().map(|v| graph.out_degree(v) as f64).collect()),
        Direction::In => (Measure::InDegree, graph.nodes().map(|v| graph.in_degree(v) as f64).collect()),
    };
    ScoreVector { measure, scores }
}

/// Asynchronous label propagation on the undirected view of `graph`.
///
/// Labels are numbered `0..c` in order of first appearance by node id. If
/// fewer than `min_communities` come out, the largest community is split by
/// propagating again inside it; when no community splits, the highest-id
/// node of the largest community becomes a singleton.
pub fn label_propagation_communities(graph: &Graph, seed: u64, min_communities: usize) -> Result<Vec<usize>> {
    let n = graph.n();
    if min_communities > n {
        return Err(Error::InvalidParameter(format!(
            "cannot form {min_communities} communities from {n} nodes"
        )));
    }
    let neighbors: Vec<Vec<NodeId>> = graph
        .nodes()
        .map(|v| {
            let mut nb: Vec<NodeId> = graph.out_neighbors(v).iter().chain(graph.in_neighbors(v)).copied().collect();
            nb.sort_unstable();
            nb.dedup();
            nb
        })
        .collect();
    let rng = CounterRng::new(seed);
    let all: Vec<NodeId> = graph.nodes().collect();
    let mut labels = vec![0usize; n];
    propagate(&neighbors, &all, &mut labels, &rng.derive(0));
    let mut count = normalize(&mut labels);

    let mut unsplittable = vec![false; n];
    let mut attempt = 1u64;
    while count < min_communities {
        let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); count];
        for v in graph.nodes() {
            members[labels[v]].push(v);
        }
        let largest = |allow: &dyn Fn(usize) -> bool| {
            (0..count)
                .filter(|&c| members[c].len() >= 2 && allow(c))
                .max_by(|&a, &b| members[a].len().cmp(&members[b].len()).then(b.cmp(&a)))
        };
        if let Some(c) = largest(&|c| !unsplittable[c]) {
            let mut sub = labels.clone();
            propagate(&neighbors, &members[c], &mut sub, &rng.derive(attempt));
            attempt += 1;
            let first = sub[members[c][0]];
            if members[c].iter().any(|&v| sub[v] != first) {
                for &v in &members[c] {
                    if sub[v] != first {
                        labels[v] = count + sub[v];
                    }
                }
                count = normalize(&mut labels);
                unsplittable = vec![false; n];
            } else {
                unsplittable[c] = true;
            }
        } else {
            let c = largest(&|_| true).expect("a community with two nodes exists while count < n");
            let v = *members[c].last().expect("nonempty community");
            labels[v] = count;
            count = normalize(&mut labels);
            unsplittable = vec![false; n];
        }
    }
    Ok(labels)
}

/// Propagation restricted to `nodes`: each starts with its own id as label
/// and only neighbors inside `nodes` vote.
fn propagate(neighbors: &[Vec<NodeId>], nodes: &[NodeId], labels: &mut [usize], rng: &CounterRng) {
    let n = labels.len();
    let mut inside = vec![false; n];
    for &v in nodes {
        inside[v] = true;
        labels[v] = v;
    }
    let mut order = nodes.to_vec();
    let mut seq = rng.seq();
    let mut votes = vec![0usize; n];
    let mut touched = Vec::new();
    for _ in 0..MAX_PROPAGATION_SWEEPS {
        order.shuffle(&mut seq);
        let mut changed = false;
        for &v in &order {
            touched.clear();
            for &u in &neighbors[v] {
                if inside[u] {
                    if votes[labels[u]] == 0 {
                        touched.push(labels[u]);
                    }
                    votes[labels[u]] += 1;
                }
            }
            if touched.is_empty() {
                continue;
            }
            let top = touched.iter().map(|&l| votes[l]).max().unwrap_or(0);
            if votes[labels[v]] != top {
                let best = touched.iter().copied().filter(|&l| votes[l] == top).min().unwrap_or(labels[v]);
                labels[v] = best;
                changed = true;
            }
            for &l in &touched {
                votes[l] = 0;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Renumbers labels by first appearance; returns the number of labels.
fn normalize(labels: &mut [usize]) -> usize {
    let mut map = std::collections::HashMap::new();
    for l in labels.iter_mut() {
        let next = map.len();
        *l = *map.entry(*l).or_insert(next);
    }
    map.len()
}
