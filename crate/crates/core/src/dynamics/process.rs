use super::state::{Color, ColorState, Counts};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::CounterRng;

/// One synchronous round over the whole node set, numbered `round`.
///
/// Every uncolored node with out-neighbors draws its pick from `rng` at
/// position `(round, v)` and adopts the pick's pre-round color. Returns the
/// new state and whether anything changed.
pub fn step(graph: &Graph, state: &ColorState, rng: &CounterRng, round: u64) -> (ColorState, bool) {
    let mut next = state.clone();
    let mut changed = false;
    for v in graph.nodes() {
        if state.get(v).is_colored() {
            continue;
        }
        let out = graph.out_neighbors(v);
        if out.is_empty() {
            continue;
        }
        let w = out[rng.below(round, v as u64, out.len())];
        let c = state.get(w);
        if c.is_colored() {
            next.set(v, c);
            changed = true;
        }
    }
    (next, changed)
}

/// Deterministic round driven by explicit picks (`None` only for nodes
/// without out-neighbors).
pub fn step_with_picks(
    graph: &Graph,
    state: &ColorState,
    round_picks: &[Option<NodeId>],
) -> Result<ColorState> {
    if round_picks.len() != graph.n() || state.len() != graph.n() {
        return Err(Error::InvalidParameter(format!(
            "picks for {} nodes and state of {} nodes on a graph of {}",
            round_picks.len(),
            state.len(),
            graph.n()
        )));
    }
    let mut next = state.clone();
    for v in graph.nodes() {
        let pick = match round_picks[v] {
            Some(w) if graph.has_edge(v, w) => w,
            Some(w) => return Err(Error::NotOutNeighbor { node: v, pick: w }),
            None if graph.out_degree(v) == 0 => continue,
            None => return Err(Error::MissingPick { node: v, round: 0 }),
        };
        if !state.get(v).is_colored() && state.get(pick).is_colored() {
            next.set(v, state.get(pick));
        }
    }
    Ok(next)
}

/// True iff no uncolored node has a colored out-neighbor.
pub fn is_stable(graph: &Graph, state: &ColorState) -> bool {
    graph.nodes().all(|v| {
        state.get(v).is_colored()
            || !graph
                .out_neighbors(v)
                .iter()
                .any(|&w| state.get(w).is_colored())
    })
}

/// `10 * (4 * D * Δ+ * log2(n) + 1)`, rounded up.
pub fn round_cap(n: usize, diameter: usize, max_out_degree: usize) -> u64 {
    let log_n = (n.max(1) as f64).log2();
    (10.0 * (4.0 * diameter as f64 * max_out_degree as f64 * log_n + 1.0)).ceil() as u64
}

/// [`round_cap`] for `graph`. Computes the diameter, so callers running many
/// simulations should compute it once.
pub fn default_round_cap(graph: &Graph) -> u64 {
    round_cap(graph.n(), graph.diameter(), graph.max_out_degree())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorEvent {
    pub round: u64,
    pub node: NodeId,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub final_state: ColorState,
    pub rounds: u64,
    pub converged: bool,
    /// Counts after each round, starting with the initial state.
    pub trajectory: Vec<Counts>,
    /// Every coloring, in round order and ascending node order within a round.
    pub events: Vec<ColorEvent>,
}

/// Runs until stable or until `max_rounds` rounds have executed.
pub fn run(graph: &Graph, state: &ColorState, rng: &CounterRng, max_rounds: u64) -> RunResult {
    let mut sim = Simulator::new(graph);
    sim.load(state);
    let mut trajectory = vec![sim.counts()];
    let mut events = Vec::new();
    let mut rounds = 0;
    while !sim.is_stable() && rounds < max_rounds {
        rounds += 1;
        let start = events.len();
        sim.step(rng, rounds);
        events.extend(sim.last_changes().iter().map(|&(node, color)| ColorEvent {
            round: rounds,
            node,
            color,
        }));
        events[start..].sort_by_key(|e| e.node);
        trajectory.push(sim.counts());
    }
    RunResult {
        final_state: sim.to_state(),
        rounds,
        converged: sim.is_stable(),
        trajectory,
        events,
    }
}

/// Reusable frontier simulator.
///
/// Only *active* nodes (uncolored with at least one colored out-neighbor)
/// are visited each round; the others cannot change, so skipping their
/// picks leaves the outcome unchanged.
#[derive(Debug, Clone)]
pub struct Simulator<'g> {
    graph: &'g Graph,
    reverse: (&'g [usize], &'g [NodeId]),
    // Color in the low bits, ACTIVE flag on top.
    status: Vec<u8>,
    // Fixed-size buffers with explicit lengths; rounds write them without
    // data-dependent branches.
    active: Vec<NodeId>,
    active_len: usize,
    next_active: Vec<NodeId>,
    next_len: usize,
    changes: Vec<(NodeId, Color)>,
    changes_len: usize,
    red: usize,
    blue: usize,
}

const COLOR_MASK: u8 = 0b11;
const ACTIVE: u8 = 0b100;

#[inline]
fn color_of(status: u8) -> Color {
    match status & COLOR_MASK {
        0 => Color::Uncolored,
        1 => Color::Red,
        _ => Color::Blue,
    }
}

impl<'g> Simulator<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        let n = graph.n();
        Self {
            graph,
            reverse: graph.reverse_csr(),
            status: vec![0; n],
            active: vec![0; n],
            active_len: 0,
            next_active: vec![0; n],
            next_len: 0,
            changes: vec![(0, Color::Uncolored); n],
            changes_len: 0,
            red: 0,
            blue: 0,
        }
    }

    pub fn load(&mut self, state: &ColorState) {
        assert_eq!(state.len(), self.graph.n(), "state size mismatch");
        for (s, &c) in self.status.iter_mut().zip(state.colors()) {
            *s = c as u8;
        }
        self.red = state.red_count();
        self.blue = state.blue_count();
        self.next_len = 0;
        self.changes_len = 0;
        for v in self.graph.nodes() {
            if self.status[v] & COLOR_MASK != 0 {
                self.activate_in_neighbors(v);
            }
        }
        self.swap_buffers();
    }

    #[inline]
    fn swap_buffers(&mut self) {
        std::mem::swap(&mut self.active, &mut self.next_active);
        self.active_len = self.next_len;
        self.next_len = 0;
    }

    #[inline]
    fn activate_in_neighbors(&mut self, v: NodeId) {
        let mut len = self.next_len;
        let (offsets, sources) = self.reverse;
        for &u in &sources[offsets[v]..offsets[v + 1]] {
            let s = self.status[u];
            let fresh = s == 0;
            self.next_active[len] = u;
            len += fresh as usize;
            self.status[u] = s | (ACTIVE * fresh as u8);
        }
        self.next_len = len;
    }

    /// Executes round number `round` and returns how many nodes got colored.
    pub fn step(&mut self, rng: &CounterRng, round: u64) -> usize {
        let graph = self.graph;
        let (mut keep, mut changed) = (0, 0);
        for i in 0..self.active_len {
            let v = self.active[i];
            let out = graph.out_neighbors(v);
            let w = out[rng.below(round, v as u64, out.len())];
            let c = self.status[w] & COLOR_MASK;
            self.next_active[keep] = v;
            keep += (c == 0) as usize;
            self.changes[changed] = (v, color_of(c));
            changed += (c != 0) as usize;
        }
        self.next_len = keep;
        self.changes_len = changed;
        let mut reds = 0;
        for i in 0..changed {
            let (v, c) = self.changes[i];
            self.status[v] = c as u8;
            reds += (c == Color::Red) as usize;
        }
        self.red += reds;
        self.blue += changed - reds;
        for i in 0..changed {
            let v = self.changes[i].0;
            self.activate_in_neighbors(v);
        }
        self.swap_buffers();
        changed
    }

    /// Runs to stability or the cap; returns `(rounds, converged)`.
    pub fn run(&mut self, rng: &CounterRng, max_rounds: u64) -> (u64, bool) {
        let mut rounds = 0;
        while self.active_len > 0 {
            if rounds == max_rounds {
                return (rounds, false);
            }
            rounds += 1;
            self.step(rng, rounds);
        }
        (rounds, true)
    }

    /// Number of uncolored nodes with a colored out-neighbor.
    #[inline]
    pub fn active_len(&self) -> usize {
        self.active_len
    }

    #[inline]
    pub fn is_stable(&self) -> bool {
        self.active_len == 0
    }

    #[inline]
    pub fn red(&self) -> usize {
        self.red
    }

    pub fn counts(&self) -> Counts {
        Counts {
            red: self.red,
            blue: self.blue,
            uncolored: self.status.len() - self.red - self.blue,
        }
    }

    pub fn last_changes(&self) -> &[(NodeId, Color)] {
        &self.changes[..self.changes_len]
    }

    pub fn to_state(&self) -> ColorState {
        ColorState::from_colors(self.status.iter().map(|&s| color_of(s)).collect())
    }
}
