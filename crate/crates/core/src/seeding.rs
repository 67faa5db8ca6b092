//! Seed selection: Monte Carlo greedy, centrality and community baselines,
//! and the paired comparison experiment.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::centrality::{label_propagation_communities, Measure, ScoreVector};
use crate::dynamics::{default_round_cap, Color, ColorState, Simulator};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::CounterRng;

/// Replications used by the experiments.
pub const DEFAULT_REPLICATIONS: usize = 300;

/// How many simulations back each spread estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replications {
    Fixed(usize),
    /// `⌈27 n k² ln(n³) / ε²⌉`, the count carrying the approximation
    /// guarantee.
    Guaranteed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyConfig {
    pub k: usize,
    pub epsilon: f64,
    pub replications: Replications,
    /// Round cap per simulation; `None` uses the default cap for the graph.
    pub round_cap: Option<u64>,
    pub seed: u64,
}

impl GreedyConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            epsilon: 0.1,
            replications: Replications::Fixed(DEFAULT_REPLICATIONS),
            round_cap: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.replications == Replications::Fixed(0) {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        Ok(())
    }

    /// Replications per estimate on a graph with `n` nodes.
    pub fn replications_for(&self, n: usize) -> usize {
        match self.replications {
            Replications::Fixed(r) => r,
            Replications::Guaranteed => guaranteed_replications(n, self.k, self.epsilon),
        }
    }
}

pub fn guaranteed_replications(n: usize, k: usize, epsilon: f64) -> usize {
    let n = n as f64;
    let r = 27.0 * n * (k * k) as f64 * (n * n * n).ln() / (epsilon * epsilon);
    (r.ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadEstimate {
    /// Mean final red count.
    pub mean: f64,
    /// Sample standard deviation of the final red count.
    pub std: f64,
    pub replications: usize,
    /// Runs stopped by the round cap; they count with their red count at
    /// the cap.
    pub unconverged: usize,
}

impl SpreadEstimate {
    pub fn std_error(&self) -> f64 {
        self.std / (self.replications as f64).sqrt()
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    sum: u64,
    sum_sq: u64,
    unconverged: usize,
}

impl Tally {
    fn add(self, o: Tally) -> Tally {
        Tally {
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
            unconverged: self.unconverged + o.unconverged,
        }
    }

    fn estimate(self, reps: usize) -> SpreadEstimate {
        let r = reps as f64;
        let mean = self.sum as f64 / r;
        let var = if reps > 1 {
            ((self.sum_sq as f64 - r * mean * mean) / (r - 1.0)).max(0.0)
        } else {
            0.0
        };
        SpreadEstimate { mean, std: var.sqrt(), replications: reps, unconverged: self.unconverged }
    }
}

fn simulate_into(sim: &mut Simulator<'_>, start: &ColorState, rng: &CounterRng, cap: u64) -> Tally {
    sim.load(start);
    let (_, converged) = sim.run(rng, cap);
    let red = sim.red() as u64;
    Tally { sum: red, sum_sq: red * red, unconverged: usize::from(!converged) }
}

fn sequential_tally(sim: &mut Simulator<'_>, start: &ColorState, reps: usize, rng: &CounterRng, cap: u64) -> Tally {
    if sim_is_stable(sim, start) {
        let red = start.red_count() as u64;
        return Tally { sum: red * reps as u64, sum_sq: red * red * reps as u64, unconverged: 0 };
    }
    (0..reps as u64).fold(Tally::default(), |t, r| t.add(simulate_into(sim, start, &rng.derive(r), cap)))
}

fn sim_is_stable(sim: &mut Simulator<'_>, start: &ColorState) -> bool {
    sim.load(start);
    sim.is_stable()
}

/// Mean final red count over `reps` runs from `state` with `seeds` made red.
/// Replicate `r` uses `rng.derive(r)`.
pub fn estimate_spread(
    graph: &Graph,
    state: &ColorState,
    seeds: &[NodeId],
    reps: usize,
    rng: &CounterRng,
    cap: u64,
) -> Result<SpreadEstimate> {
    if reps == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    let start = state.with_red(seeds)?;
    let mut probe = Simulator::new(graph);
    if sim_is_stable(&mut probe, &start) {
        return Ok(sequential_tally(&mut probe, &start, reps, rng, cap).estimate(reps));
    }
    let tally = (0..reps as u64)
        .into_par_iter()
        .map_init(|| Simulator::new(graph), |sim, r| simulate_into(sim, &start, &rng.derive(r), cap))
        .reduce(Tally::default, Tally::add);
    Ok(tally.estimate(reps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSelection {
    pub seeds: Vec<NodeId>,
    /// Estimated spread after each insertion.
    pub estimates: Vec<f64>,
    pub simulations: u64,
    pub unconverged: u64,
    pub elapsed: Duration,
}

/// Hill climbing on estimated spread: `k` times, adds the uncolored
/// candidate with the largest estimate (lower id on ties).
///
/// Every candidate at step `i` is estimated on the same replicate streams
/// `derive(i).derive(r)` of the master seed (common random numbers), so
/// differences between candidates are not drowned in simulation noise, and
/// a run with budget `k` is a prefix of any run with a larger budget.
pub fn greedy_select(graph: &Graph, state: &ColorState, config: &GreedyConfig) -> Result<SeedSelection> {
    config.validate()?;
    check_state(graph, state)?;
    let started = Instant::now();
    let pool = state.nodes_with(Color::Uncolored);
    if config.k > pool.len() {
        return Err(Error::Infeasible(format!(
            "k = {} exceeds the {} uncolored nodes",
            config.k,
            pool.len()
        )));
    }
    let reps = config.replications_for(graph.n());
    let cap = config.round_cap.unwrap_or_else(|| default_round_cap(graph));
    let master = CounterRng::new(config.seed);
    let mut current = state.clone();
    let mut selection = SeedSelection {
        seeds: Vec::with_capacity(config.k),
        estimates: Vec::with_capacity(config.k),
        simulations: 0,
        unconverged: 0,
        elapsed: Duration::ZERO,
    };
    for step in 0..config.k {
        let step_rng = master.derive(step as u64);
        let candidates: Vec<NodeId> = pool.iter().copied().filter(|&v| current.get(v) == Color::Uncolored).collect();
        let results: Vec<(NodeId, Tally)> = candidates
            .par_iter()
            .map_init(
                || Simulator::new(graph),
                |sim, &w| {
                    let mut start = current.clone();
                    start.set(w, Color::Red);
                    (w, sequential_tally(sim, &start, reps, &step_rng, cap))
                },
            )
            .collect();
        let mut best: Option<(NodeId, Tally)> = None;
        for &(w, t) in &results {
            selection.simulations += reps as u64;
            selection.unconverged += t.unconverged as u64;
            if best.map_or(true, |(_, b)| t.sum > b.sum) {
                best = Some((w, t));
            }
        }
        let (w, t) = best.expect("candidate pool is nonempty");
        current.set(w, Color::Red);
        selection.seeds.push(w);
        selection.estimates.push(t.estimate(reps).mean);
    }
    selection.elapsed = started.elapsed();
    Ok(selection)
}

fn check_state(graph: &Graph, state: &ColorState) -> Result<()> {
    if state.len() != graph.n() {
        return Err(Error::InvalidParameter(format!(
            "state has {} nodes, graph has {}",
            state.len(),
            graph.n()
        )));
    }
    Ok(())
}

/// Whether a centrality baseline is meaningful on `graph`; in-degree adds
/// nothing over out-degree on undirected graphs.
pub fn baseline_applicable(graph: &Graph, measure: Measure) -> bool {
    !(measure == Measure::InDegree && graph.is_undirected())
}

/// Top-`k` uncolored nodes by a precomputed score vector.
pub fn top_k_uncolored(scores: &ScoreVector, state: &ColorState, k: usize) -> Result<Vec<NodeId>> {
    let picked: Vec<NodeId> = scores
        .ranking()
        .into_iter()
        .filter(|&v| state.get(v) == Color::Uncolored)
        .take(k)
        .collect();
    if picked.len() < k {
        return Err(Error::Infeasible(format!("k = {k} exceeds the {} uncolored nodes", picked.len())));
    }
    Ok(picked)
}

pub fn baseline_select(graph: &Graph, state: &ColorState, k: usize, measure: Measure) -> Result<Vec<NodeId>> {
    check_state(graph, state)?;
    top_k_uncolored(&measure.compute(graph)?, state, k)
}

/// Picks one random uncolored node from each of the `k` communities with
/// the fewest blue nodes (lower community id on ties), skipping
/// communities without uncolored nodes. Communities come from label
/// propagation asked for at least `2k` of them.
pub fn community_select(graph: &Graph, state: &ColorState, k: usize, seed: u64) -> Result<Vec<NodeId>> {
    check_state(graph, state)?;
    let labels = label_propagation_communities(graph, seed, (2 * k).min(graph.n()))?;
    pick_from_communities(&labels, state, k, &CounterRng::new(seed).derive(1))
}

fn pick_from_communities(labels: &[usize], state: &ColorState, k: usize, rng: &CounterRng) -> Result<Vec<NodeId>> {
    let count = labels.iter().max().map_or(0, |&m| m + 1);
    let mut blue = vec![0usize; count];
    let mut free: Vec<Vec<NodeId>> = vec![Vec::new(); count];
    for (v, &l) in labels.iter().enumerate() {
        match state.get(v) {
            Color::Blue => blue[l] += 1,
            Color::Uncolored => free[l].push(v),
            Color::Red => {}
        }
    }
    let mut order: Vec<usize> = (0..count).filter(|&c| !free[c].is_empty()).collect();
    if order.len() < k {
        return Err(Error::Infeasible(format!(
            "only {} communities contain uncolored nodes, k = {k}",
            order.len()
        )));
    }
    order.sort_by_key(|&c| (blue[c], c));
    let mut seq = rng.seq();
    Ok(order[..k].iter().map(|&c| free[c][seq.gen_range(0..free[c].len())]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Greedy,
    Centrality(Measure),
    Community,
}

impl Algorithm {
    pub fn all() -> Vec<Algorithm> {
        let mut v = vec![Algorithm::Greedy];
        v.extend(Measure::ALL.into_iter().map(Algorithm::Centrality));
        v.push(Algorithm::Community);
        v
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Greedy => f.write_str("greedy"),
            Algorithm::Centrality(m) => write!(f, "{m}"),
            Algorithm::Community => f.write_str("community"),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "greedy" => Ok(Algorithm::Greedy),
            "community" => Ok(Algorithm::Community),
            other => other.parse().map(Algorithm::Centrality),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub b0: usize,
    pub k_values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    /// Replications for the greedy estimates.
    pub replications: usize,
    pub round_cap: Option<u64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub b0: usize,
    pub mean_red_ratio: f64,
    pub std: f64,
    pub trials: usize,
    /// Runs (final or inside greedy estimates) stopped by the round cap.
    pub unconverged: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    /// Algorithms left out because they do not apply to the graph.
    pub skipped: Vec<Algorithm>,
}

impl CompareTable {
    pub fn row(&self, algorithm: Algorithm, k: usize) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.k == k)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "algorithm,k,b0,mean_red_ratio,std,trials,unconverged")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.algorithm, r.k, r.b0, r.mean_red_ratio, r.std, r.trials, r.unconverged
            )?;
        }
        Ok(())
    }
}

/// Paired comparison: in trial `t`, `b0` blue nodes are drawn once and
/// every algorithm and budget is evaluated against the same draw and the
/// same simulation stream.
pub fn compare_experiment(graph: &Graph, config: &CompareConfig) -> Result<CompareTable> {
    let n = graph.n();
    let k_max = config.k_values.iter().copied().max().unwrap_or(0);
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if config.b0 + k_max > n {
        return Err(Error::Infeasible(format!(
            "b0 + k = {} exceeds n = {n}",
            config.b0 + k_max
        )));
    }
    let (algorithms, skipped): (Vec<Algorithm>, Vec<Algorithm>) =
        config.algorithms.iter().copied().partition(|a| match a {
            Algorithm::Centrality(m) => baseline_applicable(graph, *m),
            _ => true,
        });
    let cap = config.round_cap.unwrap_or_else(|| default_round_cap(graph));
    let master = CounterRng::new(config.seed);

    let mut scores = HashMap::new();
    for a in &algorithms {
        if let Algorithm::Centrality(m) = a {
            scores.insert(*m, m.compute(graph)?);
        }
    }
    let mut communities = HashMap::new();
    if algorithms.contains(&Algorithm::Community) {
        for &k in &config.k_values {
            if k > 0 {
                let labels = label_propagation_communities(graph, master.derive(2).word(0, k as u64), (2 * k).min(n))?;
                communities.insert(k, labels);
            }
        }
    }

    // outcomes[(algorithm, k)] = per-trial (red ratio, unconverged runs)
    let mut outcomes: HashMap<(Algorithm, usize), Vec<(f64, u64)>> = HashMap::new();
    let mut sim = Simulator::new(graph);
    for t in 0..config.trials as u64 {
        let trial = master.derive(0).derive(t);
        let blue: Vec<NodeId> = sample(&mut trial.seq(), n, config.b0).into_vec();
        let state = ColorState::from_sets(n, &[], &blue)?;
        let greedy = if algorithms.contains(&Algorithm::Greedy) && k_max > 0 {
            let cfg = GreedyConfig {
                k: k_max,
                epsilon: 0.1,
                replications: Replications::Fixed(config.replications),
                round_cap: Some(cap),
                seed: trial.word(1, 0),
            };
            Some(greedy_select(graph, &state, &cfg)?)
        } else {
            None
        };
        for &a in &algorithms {
            for &k in &config.k_values {
                let mut extra = 0;
                let seeds = match a {
                    _ if k == 0 => Vec::new(),
                    Algorithm::Greedy => {
                        let g = greedy.as_ref().expect("greedy ran");
                        extra = g.unconverged;
                        g.seeds[..k].to_vec()
                    }
                    Algorithm::Centrality(m) => top_k_uncolored(&scores[&m], &state, k)?,
                    Algorithm::Community => {
                        pick_from_communities(&communities[&k], &state, k, &trial.derive(3).derive(k as u64))?
                    }
                };
                sim.load(&state.with_red(&seeds)?);
                let (_, converged) = sim.run(&trial.derive(4).derive(k as u64), cap);
                outcomes
                    .entry((a, k))
                    .or_default()
                    .push((sim.red() as f64 / n as f64, extra + u64::from(!converged)));
            }
        }
    }

    let mut rows = Vec::new();
    for &a in &algorithms {
        for &k in &config.k_values {
            let xs = &outcomes[&(a, k)];
            let len = xs.len() as f64;
            let mean = xs.iter().map(|x| x.0).sum::<f64>() / len;
            let var = if xs.len() > 1 {
                xs.iter().map(|x| (x.0 - mean).powi(2)).sum::<f64>() / (len - 1.0)
            } else {
                0.0
            };
            rows.push(CompareRow {
                algorithm: a,
                k,
                b0: config.b0,
                mean_red_ratio: mean,
                std: var.sqrt(),
                trials: xs.len(),
                unconverged: xs.iter().map(|x| x.1).sum(),
            });
        }
    }
    Ok(CompareTable { rows, skipped })
}
