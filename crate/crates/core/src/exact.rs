//! Exact expectations on small graphs by solving the absorbing Markov chain
//! over reachable color states.

use std::collections::HashMap;

use crate::dynamics::{is_stable, Color, ColorState};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Largest graph the exact oracles accept.
pub const MAX_EXACT_NODES: usize = 13;

const RESIDUAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;
const TIE_TOL: f64 = 1e-9;

/// Base-3 packing of a color state; digit `v` is 0, 1 or 2 for
/// uncolored, red, blue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateIndex(pub u32);

impl StateIndex {
    pub fn encode(state: &ColorState) -> Result<Self> {
        check_size(state.len())?;
        let mut code = 0u32;
        for &c in state.colors().iter().rev() {
            code = code * 3 + c as u32;
        }
        Ok(Self(code))
    }

    pub fn decode(self, n: usize) -> ColorState {
        let mut code = self.0;
        let colors = (0..n)
            .map(|_| {
                let d = code % 3;
                code /= 3;
                match d {
                    0 => Color::Uncolored,
                    1 => Color::Red,
                    _ => Color::Blue,
                }
            })
            .collect();
        ColorState::from_colors(colors)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_EXACT_NODES {
        Err(Error::TooLarge { n, max: MAX_EXACT_NODES })
    } else {
        Ok(())
    }
}

fn check_inputs(graph: &Graph, state: &ColorState) -> Result<()> {
    check_size(graph.n())?;
    if state.len() != graph.n() {
        return Err(Error::InvalidParameter(format!(
            "state has {} nodes, graph has {}",
            state.len(),
            graph.n()
        )));
    }
    Ok(())
}

fn pow3(v: usize) -> u32 {
    3u32.pow(v as u32)
}

/// Successor codes with probabilities. Outcomes of distinct nodes are
/// independent, so the joint law is the product of per-node laws.
fn successors(graph: &Graph, colors: &[Color], code: u32) -> Vec<(u32, f64)> {
    let mut dist = vec![(code, 1.0)];
    for v in graph.nodes() {
        if colors[v].is_colored() {
            continue;
        }
        let out = graph.out_neighbors(v);
        let (mut red, mut blue) = (0usize, 0usize);
        for &w in out {
            match colors[w] {
                Color::Red => red += 1,
                Color::Blue => blue += 1,
                Color::Uncolored => {}
            }
        }
        if red + blue == 0 {
            continue;
        }
        let d = out.len() as f64;
        let stay = out.len() - red - blue;
        let unit = pow3(v);
        let mut next = Vec::with_capacity(dist.len() * 3);
        for &(c, p) in &dist {
            if red > 0 {
                next.push((c + unit, p * red as f64 / d));
            }
            if blue > 0 {
                next.push((c + 2 * unit, p * blue as f64 / d));
            }
            if stay > 0 {
                next.push((c, p * stay as f64 / d));
            }
        }
        dist = next;
    }
    dist
}

/// One-round successor distribution of `state`. A stable state maps to
/// itself with probability 1.
pub fn transition_distribution(graph: &Graph, state: &ColorState) -> Result<Vec<(ColorState, f64)>> {
    check_inputs(graph, state)?;
    let code = StateIndex::encode(state)?.0;
    Ok(successors(graph, state.colors(), code)
        .into_iter()
        .map(|(c, p)| (StateIndex(c).decode(graph.n()), p))
        .collect())
}

/// Reachable state space of the chain started at one state.
#[derive(Debug, Clone)]
pub struct MarkovModel {
    n: usize,
    states: Vec<StateIndex>,
    colored: Vec<usize>,
    reds: Vec<usize>,
    // Transitions to other states; the self-loop probability is kept apart.
    transitions: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
    stable: Vec<bool>,
}

impl MarkovModel {
    pub fn build(graph: &Graph, state: &ColorState) -> Result<Self> {
        check_inputs(graph, state)?;
        let n = graph.n();
        let start = StateIndex::encode(state)?;
        let mut index: HashMap<u32, usize> = HashMap::new();
        let mut model = MarkovModel {
            n,
            states: vec![start],
            colored: Vec::new(),
            reds: Vec::new(),
            transitions: Vec::new(),
            self_loop: Vec::new(),
            stable: Vec::new(),
        };
        index.insert(start.0, 0);
        let mut i = 0;
        while i < model.states.len() {
            let code = model.states[i].0;
            let s = model.states[i].decode(n);
            let mut out = Vec::new();
            let mut stay = 0.0;
            for (c, p) in successors(graph, s.colors(), code) {
                if c == code {
                    stay += p;
                    continue;
                }
                let next = *index.entry(c).or_insert_with(|| {
                    model.states.push(StateIndex(c));
                    model.states.len() - 1
                });
                out.push((next, p));
            }
            let counts = s.counts();
            model.colored.push(counts.red + counts.blue);
            model.reds.push(counts.red);
            model.stable.push(is_stable(graph, &s));
            model.transitions.push(out);
            model.self_loop.push(stay);
            i += 1;
        }
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateIndex] {
        &self.states
    }

    pub fn is_stable_state(&self, i: usize) -> bool {
        self.stable[i]
    }

    /// Outgoing distribution of state `i`, self-loop included.
    pub fn distribution(&self, i: usize) -> Vec<(usize, f64)> {
        let mut d = self.transitions[i].clone();
        if self.self_loop[i] > 0.0 {
            d.push((i, self.self_loop[i]));
        }
        d
    }

    /// Solves `x(s) = base(s) + Σ P(s, s') x(s')` for transient `s` and
    /// `x(s) = terminal(s)` for stable `s`, by Gauss–Seidel sweeps.
    ///
    /// Colored counts only grow along transitions, so sweeping in
    /// decreasing colored count settles the values almost immediately.
    fn solve(&self, base: impl Fn(usize) -> f64, terminal: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
        let m = self.states.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(self.colored[i]));
        let mut x: Vec<f64> = (0..m)
            .map(|i| if self.stable[i] { terminal(i) } else { 0.0 })
            .collect();
        for _ in 0..MAX_SWEEPS {
            let mut residual: f64 = 0.0;
            for &i in &order {
                if self.stable[i] {
                    continue;
                }
                let rhs = base(i) + self.transitions[i].iter().map(|&(j, p)| p * x[j]).sum::<f64>();
                let new = rhs / (1.0 - self.self_loop[i]);
                residual = residual.max((new - x[i]).abs());
                x[i] = new;
            }
            if residual < RESIDUAL_TOL {
                return Ok(x);
            }
        }
        Err(Error::NonConvergence { what: "absorption solve", iterations: MAX_SWEEPS })
    }

    /// Expected red count at absorption, from the start state.
    pub fn expected_red(&self) -> Result<f64> {
        Ok(self.solve(|_| 0.0, |i| self.reds[i] as f64)?[0])
    }

    /// Expected rounds until a stable state, from the start state.
    pub fn expected_convergence_time(&self) -> Result<f64> {
        Ok(self.solve(|_| 1.0, |_| 0.0)?[0])
    }
}

pub fn exact_expected_red(graph: &Graph, state: &ColorState) -> Result<f64> {
    MarkovModel::build(graph, state)?.expected_red()
}

pub fn exact_expected_convergence_time(graph: &Graph, state: &ColorState) -> Result<f64> {
    MarkovModel::build(graph, state)?.expected_convergence_time()
}

/// Expected final red count after coloring `seeds` red.
pub fn exact_f(graph: &Graph, state: &ColorState, seeds: &[NodeId]) -> Result<f64> {
    check_inputs(graph, state)?;
    exact_expected_red(graph, &state.with_red(seeds)?)
}

/// Best seed set of size `min(k, #uncolored)` among uncolored nodes, with
/// ties going to the lexicographically smallest set.
pub fn exact_best_seed(graph: &Graph, state: &ColorState, k: usize) -> Result<(Vec<NodeId>, f64)> {
    check_inputs(graph, state)?;
    let pool = state.nodes_with(Color::Uncolored);
    let size = k.min(pool.len());
    let mut best: Option<(Vec<NodeId>, f64)> = None;
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        let set: Vec<NodeId> = idx.iter().map(|&i| pool[i]).collect();
        let value = exact_f(graph, state, &set)?;
        if best.as_ref().map_or(true, |(_, b)| value > b + TIE_TOL) {
            best = Some((set, value));
        }
        if !next_combination(&mut idx, pool.len()) {
            break;
        }
    }
    Ok(best.expect("at least one candidate set"))
}

/// Advances `idx` to the next `idx.len()`-subset of `0..n` in
/// lexicographic order.
pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_construction, Construction, ConstructionKind};
    use crate::rng::CounterRng;
    use proptest::prelude::*;
    use rand::Rng;

    fn g(edges: &[(usize, usize)], n: usize) -> Graph {
        Graph::build(edges.iter().copied(), n, false).unwrap()
    }

    fn st(n: usize, red: &[usize], blue: &[usize]) -> ColorState {
        ColorState::from_sets(n, red, blue).unwrap()
    }

    /// Pushes the full state distribution forward round by round, which
    /// needs no linear solve.
    fn iterate_distribution(graph: &Graph, state: &ColorState, rounds: usize) -> (f64, f64) {
        let mut dist: HashMap<Vec<Color>, f64> = HashMap::new();
        dist.insert(state.colors().to_vec(), 1.0);
        let mut time = 0.0;
        for _ in 0..rounds {
            let mut next: HashMap<Vec<Color>, f64> = HashMap::new();
            for (colors, p) in dist {
                let s = ColorState::from_colors(colors);
                if !is_stable(graph, &s) {
                    time += p;
                }
                for (t, q) in transition_distribution(graph, &s).unwrap() {
                    *next.entry(t.colors().to_vec()).or_default() += p * q;
                }
            }
            dist = next;
        }
        let red = dist
            .iter()
            .map(|(c, p)| p * c.iter().filter(|&&x| x == Color::Red).count() as f64)
            .sum();
        (red, time)
    }

    fn random_instance(seed: u64, max_n: usize) -> (Graph, ColorState) {
        let mut rng = CounterRng::new(seed).seq();
        let n = rng.gen_range(2..=max_n);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.gen_bool(0.4) {
                    edges.push((u, v));
                }
            }
        }
        let colors = (0..n)
            .map(|_| match rng.gen_range(0..4) {
                0 => Color::Red,
                1 => Color::Blue,
                _ => Color::Uncolored,
            })
            .collect();
        (Graph::build(edges, n, false).unwrap(), ColorState::from_colors(colors))
    }

    #[test]
    fn state_index_round_trip() {
        let s = st(13, &[0, 5, 12], &[3, 4]);
        let code = StateIndex::encode(&s).unwrap();
        assert_eq!(code.decode(13), s);
        assert_eq!(StateIndex::encode(&st(3, &[0], &[2])).unwrap().0, 1 + 2 * 9);
        assert!(matches!(
            StateIndex::encode(&ColorState::uncolored(14)),
            Err(Error::TooLarge { n: 14, max: 13 })
        ));
    }

    #[test]
    fn transition_examples() {
        let graph = g(&[(0, 1)], 2);
        let s = st(2, &[0, 1], &[]);
        assert_eq!(transition_distribution(&graph, &s).unwrap(), vec![(s.clone(), 1.0)]);

        let fork = g(&[(0, 1), (0, 2)], 3);
        let d = transition_distribution(&fork, &st(3, &[1], &[2])).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.contains(&(st(3, &[0, 1], &[2]), 0.5)));
        assert!(d.contains(&(st(3, &[1], &[0, 2]), 0.5)));

        // Nodes 0 and 1 each point at red 2 and uncolored 3.
        let pair = g(&[(0, 2), (0, 3), (1, 2), (1, 3)], 4);
        let d = transition_distribution(&pair, &st(4, &[2], &[])).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.iter().all(|&(_, p)| p == 0.25));
        let total: f64 = d.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-12);

        let big = Graph::build(Vec::new(), 14, false).unwrap();
        assert!(transition_distribution(&big, &ColorState::uncolored(14)).is_err());
    }

    #[test]
    fn expected_red_examples() {
        let graph = g(&[(0, 1), (1, 2)], 3);
        assert_eq!(exact_expected_red(&graph, &st(3, &[0, 1, 2], &[])).unwrap(), 3.0);
        assert_eq!(exact_expected_red(&g(&[(0, 1)], 2), &st(2, &[1], &[])).unwrap(), 2.0);
        let fork = g(&[(0, 1), (0, 2)], 3);
        let v = exact_expected_red(&fork, &st(3, &[1], &[2])).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
        assert!((iterate_distribution(&fork, &st(3, &[1], &[2]), 5).0 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn convergence_time_examples() {
        let fork = g(&[(0, 1), (0, 2)], 3);
        assert_eq!(exact_expected_convergence_time(&fork, &st(3, &[0], &[])).unwrap(), 0.0);
        let t = exact_expected_convergence_time(&fork, &st(3, &[1], &[])).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        // Triangle with a vertex cover colored: one round.
        let tri = Graph::build([(0, 1), (1, 2), (0, 2)], 3, true).unwrap();
        let t = exact_expected_convergence_time(&tri, &st(3, &[0, 1], &[])).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let t = exact_expected_convergence_time(&tri, &st(3, &[0], &[])).unwrap();
        assert!(t > 1.0);
    }

    #[test]
    fn star_examples() {
        let (graph, s) = generate_construction(Construction::new(ConstructionKind::Star, 7), 3).unwrap();
        assert_eq!(exact_f(&graph, &s, &[]).unwrap(), 0.0);
        assert_eq!(exact_f(&graph, &ColorState::uncolored(7), &[]).unwrap(), 0.0);
        assert!((exact_f(&graph, &s, &[0]).unwrap() - 5.0).abs() < 1e-12);
        let leaf = s.nodes_with(Color::Uncolored)[1];
        assert!((exact_f(&graph, &s, &[leaf]).unwrap() - 7.0 / 3.0).abs() < 1e-12);
        let blue = s.nodes_with(Color::Blue)[0];
        assert!(matches!(exact_f(&graph, &s, &[blue]), Err(Error::BlueOverlap(b)) if b == blue));

        let (best, value) = exact_best_seed(&graph, &s, 1).unwrap();
        assert_eq!(best, vec![0]);
        assert!((value - 5.0).abs() < 1e-12);
        let (none, value) = exact_best_seed(&graph, &s, 0).unwrap();
        assert!(none.is_empty());
        assert_eq!(value, exact_expected_red(&graph, &s).unwrap());
        let (all, value) = exact_best_seed(&graph, &s, 10).unwrap();
        assert_eq!(all, s.nodes_with(Color::Uncolored));
        assert!((value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn best_seed_tie_break_is_lexicographic() {
        // Two symmetric isolated uncolored nodes: all single seeds tie.
        let graph = Graph::build(Vec::new(), 3, false).unwrap();
        let (best, value) = exact_best_seed(&graph, &ColorState::uncolored(3), 1).unwrap();
        assert_eq!(best, vec![0]);
        assert_eq!(value, 1.0);
    }

    #[test]
    fn combinations_in_order() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut empty: Vec<usize> = Vec::new();
        assert!(!next_combination(&mut empty, 3));
    }

    #[test]
    fn solver_matches_distribution_iteration() {
        for seed in 0..40 {
            let (graph, s) = random_instance(seed, 5);
            let model = MarkovModel::build(&graph, &s).unwrap();
            let (red, time) = iterate_distribution(&graph, &s, 400);
            assert!((model.expected_red().unwrap() - red).abs() < 1e-8, "seed {seed}");
            assert!((model.expected_convergence_time().unwrap() - time).abs() < 1e-6, "seed {seed}");
        }
    }

    #[test]
    fn model_invariants() {
        for seed in 0..30 {
            let (graph, s) = random_instance(seed + 100, 7);
            let model = MarkovModel::build(&graph, &s).unwrap();
            for i in 0..model.num_states() {
                let total: f64 = model.distribution(i).iter().map(|x| x.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
                let state = model.states()[i].decode(graph.n());
                assert_eq!(model.is_stable_state(i), is_stable(&graph, &state));
                if model.is_stable_state(i) {
                    assert_eq!(model.distribution(i), vec![(i, 1.0)]);
                }
            }
        }
    }

    #[test]
    fn eventual_coloring_matches_reachability() {
        for seed in 0..40 {
            let (graph, s) = random_instance(seed + 500, 6);
            let model = MarkovModel::build(&graph, &s).unwrap();
            let mut expected = s.nodes_with(Color::Red);
            expected.extend(s.nodes_with(Color::Blue));
            expected.extend(graph.eventually_colorable(&s).unwrap());
            expected.sort_unstable();
            for i in (0..model.num_states()).filter(|&i| model.is_stable_state(i)) {
                let end = model.states()[i].decode(graph.n());
                let mut colored = end.nodes_with(Color::Red);
                colored.extend(end.nodes_with(Color::Blue));
                colored.sort_unstable();
                assert_eq!(colored, expected, "seed {seed}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn f_is_monotone_and_submodular(seed in any::<u64>(), picks in proptest::collection::vec(any::<u8>(), 4)) {
            let (graph, s) = random_instance(seed, 6);
            let pool = s.nodes_with(Color::Uncolored);
            prop_assume!(!pool.is_empty());
            let a_small: Vec<NodeId> = pool.iter().copied().filter(|v| picks[0] as usize % 3 == v % 3).take(1).collect();
            let mut a_big = a_small.clone();
            for &v in &pool {
                if (picks[1] as usize >> (v % 8)) & 1 == 1 && !a_big.contains(&v) {
                    a_big.push(v);
                }
            }
            let v = pool[picks[2] as usize % pool.len()];
            let with = |set: &Vec<NodeId>| {
                let mut x = set.clone();
                x.push(v);
                exact_f(&graph, &s, &x).unwrap()
            };
            let f_small = exact_f(&graph, &s, &a_small).unwrap();
            let f_big = exact_f(&graph, &s, &a_big).unwrap();
            prop_assert!(with(&a_small) >= f_small - 1e-9);
            prop_assert!(with(&a_big) - f_big <= with(&a_small) - f_small + 1e-9);
        }
    }
}
