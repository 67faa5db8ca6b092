use std::io::{BufRead, Write};

use super::process::{step_with_picks, is_stable, RunResult, ColorEvent};
use super::state::{Color, ColorState};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::CounterRng;

/// Longest extended sequence we are willing to materialize (2^26 entries).
const MAX_ES_DEPTH: usize = 26;

/// Recorded picks of every node for rounds `1..=horizon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PickProfile {
    n: usize,
    horizon: usize,
    // Row-major by node; `None` for nodes without out-neighbors.
    picks: Vec<Option<NodeId>>,
}

impl PickProfile {
    /// Builds a profile from per-node rows, each of length `horizon`.
    pub fn from_rows(graph: &Graph, rows: Vec<Vec<Option<NodeId>>>) -> Result<Self> {
        if rows.len() != graph.n() {
            return Err(Error::InvalidParameter(format!(
                "profile has {} rows, graph has {} nodes",
                rows.len(),
                graph.n()
            )));
        }
        let horizon = rows.first().map_or(0, Vec::len);
        let mut picks = Vec::with_capacity(graph.n() * horizon);
        for (v, row) in rows.into_iter().enumerate() {
            if row.len() != horizon {
                return Err(Error::InvalidParameter(format!(
                    "row {v} has {} picks, expected {horizon}",
                    row.len()
                )));
            }
            for (t, p) in row.into_iter().enumerate() {
                match p {
                    Some(w) if !graph.has_edge(v, w) => {
                        return Err(Error::NotOutNeighbor { node: v, pick: w })
                    }
                    None if graph.out_degree(v) > 0 => {
                        return Err(Error::MissingPick { node: v, round: t + 1 })
                    }
                    _ => picks.push(p),
                }
            }
        }
        Ok(Self { n: graph.n(), horizon, picks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Pick of `v` in round `t` (1-based).
    #[inline]
    pub fn pick(&self, v: NodeId, t: usize) -> Option<NodeId> {
        assert!(t >= 1 && t <= self.horizon, "round {t} outside 1..={}", self.horizon);
        self.picks[v * self.horizon + t - 1]
    }

    /// Picks of `v` over the whole horizon.
    pub fn sequence(&self, v: NodeId) -> &[Option<NodeId>] {
        &self.picks[v * self.horizon..(v + 1) * self.horizon]
    }

    fn round(&self, t: usize) -> Vec<Option<NodeId>> {
        (0..self.n).map(|v| self.pick(v, t)).collect()
    }
}

/// Draws picks for all nodes and rounds `1..=horizon`.
///
/// Uses the same counter positions as the simulator, so replaying the
/// profile reproduces a [`run`](super::run) with the same `rng`.
pub fn sample_profile(graph: &Graph, horizon: usize, rng: &CounterRng) -> PickProfile {
    let mut picks = Vec::with_capacity(graph.n() * horizon);
    for v in graph.nodes() {
        let out = graph.out_neighbors(v);
        for t in 1..=horizon {
            picks.push(if out.is_empty() {
                None
            } else {
                Some(out[rng.below(t as u64, v as u64, out.len())])
            });
        }
    }
    PickProfile { n: graph.n(), horizon, picks }
}

/// Runs the process with recorded picks until stable or the profile ends.
pub fn replay(graph: &Graph, state: &ColorState, profile: &PickProfile) -> Result<RunResult> {
    if profile.n != graph.n() {
        return Err(Error::InvalidParameter(format!(
            "profile for {} nodes, graph has {}",
            profile.n,
            graph.n()
        )));
    }
    let mut cur = state.clone();
    let mut trajectory = vec![cur.counts()];
    let mut events = Vec::new();
    let mut rounds = 0;
    while !is_stable(graph, &cur) && (rounds as usize) < profile.horizon {
        rounds += 1;
        let next = step_with_picks(graph, &cur, &profile.round(rounds as usize))?;
        for v in graph.nodes() {
            if next.get(v) != cur.get(v) {
                events.push(ColorEvent { round: rounds, node: v, color: next.get(v) });
            }
        }
        cur = next;
        trajectory.push(cur.counts());
    }
    Ok(RunResult {
        converged: is_stable(graph, &cur),
        final_state: cur,
        rounds,
        trajectory,
        events,
    })
}

/// `es^t(v)`: `es^0(v) = [v]` and `es^t(v) = es^{t-1}(v) ++ es^{t-1}(p)`
/// where `p` is the pick of `v` in round `t`. Nodes without picks keep `[v]`.
pub fn extended_sequence(
    graph: &Graph,
    profile: &PickProfile,
    v: NodeId,
    t: usize,
) -> Result<Vec<NodeId>> {
    graph.check_node(v)?;
    if t > profile.horizon {
        return Err(Error::HorizonExceeded { requested: t, available: profile.horizon });
    }
    if t > MAX_ES_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "extended sequence depth {t} exceeds {MAX_ES_DEPTH}"
        )));
    }
    let mut out = Vec::new();
    push_es(profile, v, t, &mut out);
    Ok(out)
}

fn push_es(profile: &PickProfile, v: NodeId, t: usize, out: &mut Vec<NodeId>) {
    if t == 0 {
        out.push(v);
        return;
    }
    push_es(profile, v, t - 1, out);
    if let Some(p) = profile.pick(v, t) {
        push_es(profile, p, t - 1, out);
    }
}

/// Color of the first initially colored node in `es^t(v)`.
pub fn final_color_via_es(
    graph: &Graph,
    state0: &ColorState,
    profile: &PickProfile,
    v: NodeId,
    t: usize,
) -> Result<Color> {
    let es = extended_sequence(graph, profile, v, t)?;
    Ok(es
        .iter()
        .map(|&w| state0.get(w))
        .find(|c| c.is_colored())
        .unwrap_or(Color::Uncolored))
}

/// Header `n horizon`, then one line per node of space-separated picks
/// (`-1` for no pick).
pub fn write_profile<W: Write>(profile: &PickProfile, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", profile.n, profile.horizon)?;
    for v in 0..profile.n {
        let line: Vec<String> = profile
            .sequence(v)
            .iter()
            .map(|p| p.map_or_else(|| "-1".to_string(), |x| x.to_string()))
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_profile<R: BufRead>(graph: &Graph, reader: R) -> Result<PickProfile> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#')));
    let (hline, header) = match lines.next() {
        Some((i, l)) => (i, l?),
        None => return Err(Error::parse(0, "empty profile")),
    };
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|x| x.parse().map_err(|_| Error::parse(hline, "bad header")))
        .collect::<Result<_>>()?;
    let [n, horizon] = head[..] else {
        return Err(Error::parse(hline, "header must be `n horizon`"));
    };
    if n != graph.n() {
        return Err(Error::parse(hline, format!("profile has {n} nodes, graph has {}", graph.n())));
    }
    let mut rows = Vec::with_capacity(n);
    for (i, line) in lines {
        let line = line?;
        let row: Vec<Option<NodeId>> = line
            .split_whitespace()
            .map(|x| match x.parse::<i64>() {
                Ok(-1) => Ok(None),
                Ok(p) if p >= 0 => Ok(Some(p as NodeId)),
                _ => Err(Error::parse(i, format!("bad pick `{x}`"))),
            })
            .collect::<Result<_>>()?;
        if row.len() != horizon {
            return Err(Error::parse(i, format!("expected {horizon} picks, found {}", row.len())));
        }
        rows.push(row);
    }
    // Rows of a zero-round profile are blank and were skipped above.
    if rows.len() != n && !(horizon == 0 && rows.is_empty()) {
        return Err(Error::parse(0, format!("expected {n} rows, found {}", rows.len())));
    }
    if horizon == 0 {
        return Ok(PickProfile { n, horizon, picks: Vec::new() });
    }
    PickProfile::from_rows(graph, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::run;
    use crate::graph::generate_ba;

    // v1..v5 as 0..4.
    fn example() -> (Graph, ColorState, PickProfile) {
        let g = Graph::build([(0, 1), (0, 2), (1, 0), (1, 3), (2, 3), (3, 4)], 5, false).unwrap();
        let s = ColorState::from_sets(5, &[3], &[]).unwrap();
        let rows = vec![
            vec![Some(2), Some(1), Some(1)],
            vec![Some(0), Some(3), Some(0)],
            vec![Some(3); 3],
            vec![Some(4); 3],
            vec![None; 3],
        ];
        let p = PickProfile::from_rows(&g, rows).unwrap();
        (g, s, p)
    }

    #[test]
    fn example_replay() {
        let (g, s, p) = example();
        let r = replay(&g, &s, &p).unwrap();
        let at = |node| r.events.iter().find(|e| e.node == node).map(|e| e.round);
        assert_eq!(at(2), Some(1));
        assert_eq!(at(1), Some(2));
        assert_eq!(at(0), Some(3));
        assert!(r.converged);
        assert_eq!(r.final_state.red_count(), 4);
    }

    #[test]
    fn example_extended_sequence() {
        let (g, s, p) = example();
        assert_eq!(extended_sequence(&g, &p, 1, 2).unwrap(), vec![1, 0, 3, 4]);
        assert_eq!(final_color_via_es(&g, &s, &p, 1, 2).unwrap(), Color::Red);
        assert_eq!(final_color_via_es(&g, &s, &p, 1, 1).unwrap(), Color::Uncolored);
        assert_eq!(final_color_via_es(&g, &s, &p, 0, 3).unwrap(), Color::Red);
        assert_eq!(extended_sequence(&g, &p, 1, 0).unwrap(), vec![1]);
        assert_eq!(extended_sequence(&g, &p, 4, 3).unwrap(), vec![4]);
        assert!(matches!(
            extended_sequence(&g, &p, 0, 4),
            Err(Error::HorizonExceeded { requested: 4, available: 3 })
        ));
        assert_eq!(extended_sequence(&g, &p, 0, 3).unwrap().len(), 8);
    }

    #[test]
    fn colored_node_keeps_color_via_es() {
        let (g, s, p) = example();
        for t in 0..=3 {
            assert_eq!(final_color_via_es(&g, &s, &p, 3, t).unwrap(), Color::Red);
        }
    }

    #[test]
    fn from_rows_validates() {
        let (g, _, _) = example();
        let mut rows = vec![vec![Some(1)], vec![Some(0)], vec![Some(3)], vec![Some(4)], vec![None]];
        assert!(PickProfile::from_rows(&g, rows.clone()).is_ok());
        rows[2] = vec![Some(0)];
        assert!(matches!(
            PickProfile::from_rows(&g, rows.clone()),
            Err(Error::NotOutNeighbor { node: 2, pick: 0 })
        ));
        rows[2] = vec![None];
        assert!(PickProfile::from_rows(&g, rows).is_err());
    }

    #[test]
    fn sample_profile_examples() {
        let (g, _, _) = example();
        let rng = CounterRng::new(1);
        let empty = sample_profile(&g, 0, &rng);
        assert_eq!(empty.horizon(), 0);
        let p = sample_profile(&g, 50, &rng);
        assert!(p.sequence(2).iter().all(|&x| x == Some(3)));
        assert!(p.sequence(4).iter().all(Option::is_none));
        assert_eq!(p, sample_profile(&g, 50, &rng));
    }

    #[test]
    fn sample_profile_frequencies() {
        let star = Graph::build((1..5).map(|l| (0, l)), 5, false).unwrap();
        let t = 10_000;
        let p = sample_profile(&star, t, &CounterRng::new(99));
        let mut freq = [0usize; 5];
        for x in p.sequence(0) {
            freq[x.unwrap()] += 1;
        }
        let sigma = (t as f64 * 0.25 * 0.75).sqrt();
        for &f in &freq[1..] {
            assert!((f as f64 - t as f64 / 4.0).abs() <= 5.0 * sigma);
        }
    }

    #[test]
    fn replay_matches_run() {
        let g = generate_ba(80, 2, 5).unwrap();
        let rng = CounterRng::new(21);
        let s = ColorState::from_sets(80, &[1, 2], &[40]).unwrap();
        let r = run(&g, &s, &rng, 10_000);
        let p = sample_profile(&g, r.rounds as usize, &rng);
        let rep = replay(&g, &s, &p).unwrap();
        assert_eq!(rep, r);
    }

    #[test]
    fn profile_round_trip() {
        let (g, _, p) = example();
        let mut buf = Vec::new();
        write_profile(&p, &mut buf).unwrap();
        let back = read_profile(&g, &buf[..]).unwrap();
        assert_eq!(back, p);
        assert!(read_profile(&g, &b"5 1\n1\n0\n3\n4\n"[..]).is_err());
        assert!(read_profile(&g, &b"5 1\n1\n0\n0\n4\n-1\n"[..]).is_err());
    }
}
