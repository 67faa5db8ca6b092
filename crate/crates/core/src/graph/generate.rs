//! Synthetic graphs: preferential attachment, the worst-case constructions
//! used to show the convergence bounds are tight, and the Maximum Coverage
//! reduction.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;

use super::{Graph, NodeId};
use crate::dynamics::{Color, ColorState};
use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Undirected preferential-attachment graph on `n` nodes.
///
/// Starts from `m_attach` isolated nodes; every later node attaches to
/// `m_attach` distinct earlier nodes sampled proportionally to degree
/// without replacement (the first one necessarily takes all of them). The
/// result has exactly `m_attach * (n - m_attach)` undirected edges.
pub fn generate_ba(n: usize, m_attach: usize, seed: u64) -> Result<Graph> {
    if m_attach == 0 || n <= m_attach {
        return Err(Error::InvalidParameter(format!(
            "preferential attachment needs n > m_attach >= 1, got n={n}, m_attach={m_attach}"
        )));
    }
    let mut rng = CounterRng::new(seed).seq();
    let mut edges = Vec::with_capacity(m_attach * (n - m_attach));
    // Every edge endpoint once: uniform draws from this are degree-proportional.
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * m_attach * (n - m_attach));
    let mut targets: Vec<NodeId> = (0..m_attach).collect();
    let mut chosen = HashSet::with_capacity(m_attach);
    for source in m_attach..n {
        for &t in &targets {
            edges.push((source, t));
            endpoints.push(t);
            endpoints.push(source);
        }
        chosen.clear();
        targets.clear();
        while targets.len() < m_attach {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            if chosen.insert(t) {
                targets.push(t);
            }
        }
    }
    Graph::build(edges, n, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstructionKind {
    /// Undirected star; `floor(n/2) - 1` random leaves blue.
    Star,
    /// `V1` (n/2 nodes) points at every node of `V2` (n/2 - 1 nodes) and at
    /// one colored node `v`.
    BipartiteTightness,
    /// Path `v1 -> v2 -> ... -> vn` where each node also points at every
    /// earlier node. All uncolored; meant for q-random initial states.
    PathBackedges,
    /// Chain `w_{n/2} -> ... -> w_0` with every `w_i` also pointing at a
    /// sink set of `n/2 - 1` nodes; only `w_0` colored.
    MTightness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Construction {
    pub kind: ConstructionKind,
    pub n: usize,
}

impl Construction {
    pub fn new(kind: ConstructionKind, n: usize) -> Self {
        Self { kind, n }
    }

    /// Node ids of the traversal chain `w_0, ..., w_{n/2}` of
    /// [`ConstructionKind::MTightness`]; empty for other kinds.
    pub fn chain(&self) -> Vec<NodeId> {
        match self.kind {
            ConstructionKind::MTightness => (0..=self.n / 2).collect(),
            _ => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        let ok = match self.kind {
            ConstructionKind::Star | ConstructionKind::PathBackedges => n >= 2,
            ConstructionKind::BipartiteTightness | ConstructionKind::MTightness => {
                n >= 2 && n % 2 == 0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{:?} needs {} (got n={n})",
                self.kind,
                match self.kind {
                    ConstructionKind::Star | ConstructionKind::PathBackedges => "n >= 2",
                    _ => "even n >= 2",
                }
            )))
        }
    }
}

/// Builds a construction and its initial state. Colored nodes are red.
///
/// Node layout:
/// * `Star`: center 0, leaves `1..n`.
/// * `BipartiteTightness`: `V1 = 0..n/2`, `V2 = n/2..n-1`, `v = n-1`.
/// * `PathBackedges`: `v_i` is node `i - 1`.
/// * `MTightness`: `w_i` is node `i` for `i <= n/2`; the sink set follows.
///
/// `seed` only matters for `Star` (which leaves are blue).
pub fn generate_construction(c: Construction, seed: u64) -> Result<(Graph, ColorState)> {
    c.validate()?;
    let n = c.n;
    let mut state = ColorState::uncolored(n);
    let graph = match c.kind {
        ConstructionKind::Star => {
            let leaves = n - 1;
            let blue = n / 2 - 1;
            let mut rng = CounterRng::new(seed).seq();
            for i in sample(&mut rng, leaves, blue) {
                state.set(1 + i, Color::Blue);
            }
            Graph::build((1..n).map(|l| (0, l)), n, true)?
        }
        ConstructionKind::BipartiteTightness => {
            let half = n / 2;
            let v = n - 1;
            state.set(v, Color::Red);
            Graph::build(
                (0..half).flat_map(|a| (half..n).map(move |b| (a, b))),
                n,
                false,
            )?
        }
        ConstructionKind::PathBackedges => {
            let forward = (0..n - 1).map(|i| (i, i + 1));
            let backward = (1..n).flat_map(|i| (0..i).map(move |j| (i, j)));
            Graph::build(forward.chain(backward), n, false)?
        }
        ConstructionKind::MTightness => {
            let half = n / 2;
            state.set(0, Color::Red);
            let chain = (1..=half).map(|i| (i, i - 1));
            let sinks = (0..=half).flat_map(|i| (half + 1..n).map(move |s| (i, s)));
            Graph::build(chain.chain(sinks), n, false)?
        }
    };
    Ok((graph, state))
}

/// Output of [`max_coverage_transform`].
#[derive(Debug, Clone)]
pub struct MaxCoverageInstance {
    pub graph: Graph,
    pub budget: usize,
    /// Subset `S_j` is node `j`.
    pub subset_nodes: std::ops::Range<NodeId>,
    /// Element `O_i` is node `subset_count + i`.
    pub element_nodes: std::ops::Range<NodeId>,
    /// `ceil(1/eps)`: each element node plus its leaves.
    pub block: usize,
}

/// Maximum Coverage to seed-selection reduction.
///
/// `subsets[j]` lists the element indices (in `0..h`) of subset `S_j`. The
/// graph has an edge `o_i -> s_j` whenever `O_i` is in `S_j`, and each `o_i`
/// receives `ceil(1/eps) - 1` private leaves pointing at it. All nodes are
/// uncolored.
pub fn max_coverage_transform(
    subsets: &[Vec<usize>],
    h: usize,
    k: usize,
    eps: f64,
) -> Result<MaxCoverageInstance> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    let l = subsets.len();
    let block = (1.0 / eps - 1e-9).ceil() as usize;
    let mut covered = vec![false; h];
    let mut edges = Vec::new();
    for (j, s) in subsets.iter().enumerate() {
        for &e in s {
            if e >= h {
                return Err(Error::InvalidParameter(format!(
                    "subset {j} names element {e}, only {h} elements exist"
                )));
            }
            covered[e] = true;
            edges.push((l + e, j));
        }
    }
    if let Some(e) = covered.iter().position(|&c| !c) {
        return Err(Error::InvalidParameter(format!("element {e} is in no subset")));
    }
    let mut next = l + h;
    for i in 0..h {
        for _ in 1..block {
            edges.push((next, l + i));
            next += 1;
        }
    }
    let n = next;
    Ok(MaxCoverageInstance {
        graph: Graph::build(edges, n, false)?,
        budget: k,
        subset_nodes: 0..l,
        element_nodes: l..l + h,
        block,
    })
}
