use std::collections::VecDeque;

use rayon::prelude::*;

use super::{Graph, NodeId};
use crate::dynamics::ColorState;
use crate::error::{Error, Result};

pub(crate) const UNREACHED: usize = usize::MAX;

impl Graph {
    /// BFS distances from `source` along out-edges; `usize::MAX` marks
    /// unreachable nodes.
    pub(crate) fn bfs_from(&self, source: NodeId, dist: &mut Vec<usize>, queue: &mut VecDeque<NodeId>) {
        dist.clear();
        dist.resize(self.n(), UNREACHED);
        queue.clear();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u] + 1;
            for &w in self.out_neighbors(u) {
                if dist[w] == UNREACHED {
                    dist[w] = du;
                    queue.push_back(w);
                }
            }
        }
    }

    /// Shortest-path distances from `source`; `None` for unreachable nodes.
    pub fn distances_from(&self, source: NodeId) -> Result<Vec<Option<usize>>> {
        self.check_node(source)?;
        let mut dist = Vec::new();
        self.bfs_from(source, &mut dist, &mut VecDeque::new());
        Ok(dist
            .into_iter()
            .map(|d| (d != UNREACHED).then_some(d))
            .collect())
    }

    /// Largest finite distance over ordered pairs. Unreachable pairs are
    /// ignored, and a graph without any reachable pair `(v, u)`, `v != u`,
    /// has diameter 0.
    pub fn diameter(&self) -> usize {
        (0..self.n())
            .into_par_iter()
            .map_init(
                || (Vec::new(), VecDeque::new()),
                |(dist, queue), s| {
                    self.bfs_from(s, dist, queue);
                    dist.iter().filter(|&&d| d != UNREACHED).max().copied().unwrap_or(0)
                },
            )
            .max()
            .unwrap_or(0)
    }

    /// `|{w : d(v, w) <= s}|`, counting `v` itself.
    pub fn s_out_neighborhood_size(&self, v: NodeId, s: usize) -> Result<usize> {
        self.check_node(v)?;
        let mut seen = vec![false; self.n()];
        let mut frontier = vec![v];
        seen[v] = true;
        let mut count = 1;
        for _ in 0..s {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in self.out_neighbors(u) {
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            count += next.len();
            frontier = next;
        }
        Ok(count)
    }

    /// Uncolored nodes with a directed path to some colored node, ascending.
    /// Exactly these nodes get colored eventually.
    pub fn eventually_colorable(&self, state: &ColorState) -> Result<Vec<NodeId>> {
        if state.len() != self.n() {
            return Err(Error::InvalidParameter(format!(
                "state has {} nodes, graph has {}",
                state.len(),
                self.n()
            )));
        }
        let mut reached = vec![false; self.n()];
        let mut queue: VecDeque<NodeId> = VecDeque::new();
        for v in self.nodes() {
            if state.get(v).is_colored() {
                reached[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &w in self.in_neighbors(u) {
                if !reached[w] {
                    reached[w] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok(self
            .nodes()
            .filter(|&v| reached[v] && !state.get(v).is_colored())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Color;

    fn path(len: usize) -> Graph {
        Graph::build((0..len).map(|i| (i, i + 1)), len + 1, false).unwrap()
    }

    /// Floyd–Warshall reference for the diameter.
    fn diameter_oracle(g: &Graph) -> usize {
        let n = g.n();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for v in 0..n {
            d[v][v] = 0;
        }
        for (u, v) in g.edges() {
            d[u][v] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d.iter().flatten().filter(|&&x| x < inf).max().copied().unwrap_or(0)
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(path(2).diameter(), 2);
        assert_eq!(Graph::build([], 2, false).unwrap().diameter(), 0);
        for len in 1..=20 {
            let g = path(len);
            assert_eq!(g.diameter(), len);
            assert_eq!(diameter_oracle(&g), len);
        }
    }

    #[test]
    fn diameter_matches_oracle_on_small_random_graphs() {
        let rng = crate::CounterRng::new(11);
        for case in 0..200u64 {
            let n = 1 + rng.below(case, 0, 7);
            let edges: Vec<_> = (0..n)
                .flat_map(|u| (0..n).map(move |v| (u, v)))
                .filter(|&(u, v)| rng.unit(case, (u * 8 + v) as u64 + 1) < 0.3)
                .collect();
            let g = Graph::build(edges, n, false).unwrap();
            assert_eq!(g.diameter(), diameter_oracle(&g), "case {case}");
        }
    }

    #[test]
    fn s_neighborhoods() {
        let g = path(2);
        assert_eq!(g.s_out_neighborhood_size(0, 0).unwrap(), 1);
        assert_eq!(g.s_out_neighborhood_size(0, 1).unwrap(), 2);
        assert_eq!(g.s_out_neighborhood_size(0, 5).unwrap(), 3);
        assert_eq!(g.s_out_neighborhood_size(2, 5).unwrap(), 1);
        assert!(g.s_out_neighborhood_size(3, 1).is_err());
    }

    #[test]
    fn eventually_colorable_examples() {
        let g = Graph::build([(0, 1)], 2, false).unwrap();
        let all = ColorState::from_sets(2, &[0, 1], &[]).unwrap();
        assert!(g.eventually_colorable(&all).unwrap().is_empty());
        let one_red = ColorState::from_sets(2, &[1], &[]).unwrap();
        assert_eq!(g.eventually_colorable(&one_red).unwrap(), vec![0]);

        let back = Graph::build([(1, 0)], 2, false).unwrap();
        assert!(back.eventually_colorable(&one_red).unwrap().is_empty());
        assert_eq!(one_red.get(0), Color::Uncolored);
    }

    #[test]
    fn distances() {
        let g = path(3);
        assert_eq!(
            g.distances_from(1).unwrap(),
            vec![None, Some(0), Some(1), Some(2)]
        );
    }
}
