//! Immutable directed graphs in compressed adjacency form.
//!
//! Out-neighbor lists are sorted and duplicate-free and self-loops are
//! dropped at build time. The reverse adjacency is built on the first
//! in-neighbor query and shared between threads afterwards.

mod generate;
mod io;
pub(crate) mod metrics;

use std::sync::OnceLock;

pub use generate::{
    generate_ba, generate_construction, max_coverage_transform, Construction, ConstructionKind,
    MaxCoverageInstance,
};
pub use io::{read_edge_list, read_edge_list_file, write_edge_list, LoadedGraph};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Out,
    In,
}

#[derive(Debug, Clone)]
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Adjacency {
    /// Builds from `(source, target)` pairs that are already sorted and unique.
    fn from_sorted_pairs(n: usize, pairs: &[(NodeId, NodeId)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in pairs {
            offsets[u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.iter().map(|&(_, v)| v).collect();
        Self { offsets, targets }
    }

    #[inline]
    fn row(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    out: Adjacency,
    reverse: OnceLock<Adjacency>,
    undirected: bool,
    max_out_degree: usize,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.undirected == other.undirected
            && self.out.offsets == other.out.offsets
            && self.out.targets == other.out.targets
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph on nodes `0..n`. Repeated pairs collapse into one edge
    /// and self-loops are dropped; with `undirected` every edge is mirrored.
    ///
    /// The undirected flag is also set when the (deduplicated) edge set
    /// happens to be symmetric, so rebuilding from [`Graph::edges`] yields
    /// an identical graph.
    pub fn build<I>(edge_pairs: I, n: usize, undirected: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut pairs = Vec::new();
        for (u, v) in edge_pairs {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                continue;
            }
            pairs.push((u, v));
            if undirected {
                pairs.push((v, u));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let out = Adjacency::from_sorted_pairs(n, &pairs);
        let max_out_degree = (0..n)
            .map(|v| out.offsets[v + 1] - out.offsets[v])
            .max()
            .unwrap_or(0);
        let mut graph = Self {
            n,
            out,
            reverse: OnceLock::new(),
            undirected: false,
            max_out_degree,
        };
        graph.undirected = undirected || graph.is_symmetric();
        Ok(graph)
    }

    fn is_symmetric(&self) -> bool {
        self.edges().all(|(u, v)| self.has_edge(v, u))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of directed edges; an undirected edge counts twice.
    #[inline]
    pub fn m(&self) -> usize {
        self.out.targets.len()
    }

    #[inline]
    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    #[inline]
    pub fn max_out_degree(&self) -> usize {
        self.max_out_degree
    }

    /// Out-neighbors of `v`, sorted ascending. Panics if `v >= n`.
    #[inline]
    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        self.out.row(v)
    }

    #[inline]
    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out.offsets[v + 1] - self.out.offsets[v]
    }

    /// In-neighbors of `v`, sorted ascending. The first call builds the
    /// reverse adjacency.
    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        self.reverse().row(v)
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        let rev = self.reverse();
        rev.offsets[v + 1] - rev.offsets[v]
    }

    /// Offsets and sources of the reverse adjacency.
    pub(crate) fn reverse_csr(&self) -> (&[usize], &[NodeId]) {
        let rev = self.reverse();
        (&rev.offsets, &rev.targets)
    }

    fn reverse(&self) -> &Adjacency {
        self.reverse.get_or_init(|| {
            let mut pairs: Vec<(NodeId, NodeId)> = self.edges().map(|(u, v)| (v, u)).collect();
            pairs.sort_unstable();
            Adjacency::from_sorted_pairs(self.n, &pairs)
        })
    }

    /// Checked neighborhood lookup.
    pub fn neighborhood(&self, v: NodeId, direction: Direction) -> Result<&[NodeId]> {
        self.check_node(v)?;
        Ok(match direction {
            Direction::Out => self.out_neighbors(v),
            Direction::In => self.in_neighbors(v),
        })
    }

    /// Checked degree lookup.
    pub fn degree(&self, v: NodeId, direction: Direction) -> Result<usize> {
        Ok(self.neighborhood(v, direction)?.len())
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.n && self.out_neighbors(u).binary_search(&v).is_ok()
    }

    /// All directed edges in `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.n).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.n
    }

    pub(crate) fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: v, n: self.n })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_edge_set() {
        let g = Graph::build([], 3, false).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.m(), 0);
        assert_eq!(g.max_out_degree(), 0);
    }

    #[test]
    fn duplicates_and_loops_dropped() {
        let g = Graph::build([(0, 1), (1, 2), (0, 1), (2, 2)], 3, false).unwrap();
        assert_eq!(g.m(), 2);
        assert!(!g.is_undirected());
    }

    #[test]
    fn undirected_mirrors() {
        let g = Graph::build([(0, 1)], 2, true).unwrap();
        assert_eq!(g.m(), 2);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert!(g.is_undirected());
    }

    #[test]
    fn errors() {
        assert!(matches!(Graph::build([], 0, false), Err(Error::EmptyGraph)));
        assert!(matches!(
            Graph::build([(0, 3)], 3, false),
            Err(Error::NodeOutOfRange { node: 3, n: 3 })
        ));
        let g = Graph::build([(0, 1)], 2, false).unwrap();
        assert!(g.neighborhood(2, Direction::Out).is_err());
        assert!(g.degree(5, Direction::In).is_err());
    }

    #[test]
    fn path_degrees() {
        let g = Graph::build([(0, 1), (1, 2)], 3, false).unwrap();
        assert_eq!(g.degree(1, Direction::In).unwrap(), 1);
        assert_eq!(g.degree(1, Direction::Out).unwrap(), 1);
        assert_eq!(g.in_neighbors(2), &[1]);
        assert_eq!(g.in_neighbors(0), &[] as &[usize]);
    }

    #[test]
    fn star_center_degree() {
        let n = 6;
        let g = Graph::build((1..n).map(|l| (0, l)), n, true).unwrap();
        assert_eq!(g.degree(0, Direction::Out).unwrap(), n - 1);
        assert_eq!(g.max_out_degree(), n - 1);
    }

    #[test]
    fn rebuild_is_identical() {
        let g = Graph::build([(3, 0), (0, 1), (1, 0), (2, 3), (3, 0)], 4, false).unwrap();
        let again = Graph::build(g.edges(), g.n(), false).unwrap();
        assert_eq!(g, again);
        let sym = Graph::build([(0, 1), (1, 2)], 3, true).unwrap();
        assert_eq!(sym, Graph::build(sym.edges(), 3, false).unwrap());
    }

    #[test]
    fn reverse_is_shareable_across_threads() {
        let g = Graph::build([(0, 2), (1, 2), (2, 0)], 3, false).unwrap();
        std::thread::scope(|s| {
            let hs: Vec<_> = (0..4).map(|_| s.spawn(|| g.in_neighbors(2).to_vec())).collect();
            for h in hs {
                assert_eq!(h.join().unwrap(), vec![0, 1]);
            }
        });
    }
}
