//! Convergence-time experiments, q-random states and bound audits.

use std::io::Write;

use rayon::prelude::*;

use crate::dynamics::{default_round_cap, round_cap, Color, ColorState, Simulator};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::CounterRng;

/// Trials per node or per q in the experiments.
pub const DEFAULT_TRIALS: usize = 300;

/// Graph parameters entering the convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub n: usize,
    pub m: usize,
    pub diameter: usize,
    pub max_out_degree: usize,
    pub undirected: bool,
}

impl Bounds {
    pub fn of(graph: &Graph) -> Self {
        Self {
            n: graph.n(),
            m: graph.m(),
            diameter: graph.diameter(),
            max_out_degree: graph.max_out_degree(),
            undirected: graph.is_undirected(),
        }
    }

    /// `4 D Δ+ log2 n`.
    pub fn diameter_bound(&self) -> f64 {
        4.0 * self.diameter as f64 * self.max_out_degree as f64 * log2(self.n)
    }

    /// `20 n log2 n`, for undirected graphs only.
    pub fn undirected_bound(&self) -> Option<f64> {
        self.undirected.then(|| 20.0 * self.n as f64 * log2(self.n))
    }

    /// `m / β`, exceeded with probability at most `β`.
    pub fn markov_bound(&self, beta: f64) -> f64 {
        self.m as f64 / beta
    }

    pub fn default_cap(&self) -> u64 {
        round_cap(self.n, self.diameter, self.max_out_degree)
    }
}

fn log2(n: usize) -> f64 {
    (n.max(1) as f64).log2()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStats {
    /// Mean rounds per seed node over its converged runs; `None` if none
    /// converged.
    pub per_node_mean: Vec<Option<f64>>,
    pub trials: usize,
    pub min: f64,
    pub max: f64,
    /// Mean over nodes of the per-node means.
    pub mean: f64,
    /// Longest single converged run.
    pub max_rounds: u64,
    pub unconverged: u64,
    /// Converged runs longer than `4 D Δ+ log2 n`.
    pub diameter_bound_violations: u64,
    pub bounds: Bounds,
}

impl ConvergenceStats {
    pub fn violation_rate(&self) -> f64 {
        let runs = (self.per_node_mean.len() * self.trials) as u64 - self.unconverged;
        if runs == 0 {
            0.0
        } else {
            self.diameter_bound_violations as f64 / runs as f64
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "node,mean_rounds")?;
        for (v, m) in self.per_node_mean.iter().enumerate() {
            match m {
                Some(x) => writeln!(out, "{v},{x}")?,
                None => writeln!(out, "{v},")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct NodeRuns {
    total: u64,
    converged: u64,
    longest: u64,
    violations: u64,
}

/// For every node `v`, runs `trials` times from the state where only `v`
/// is colored (red) and averages the convergence rounds.
///
/// Run `t` of node `v` uses the stream `derive(v).derive(t)` of `seed`.
/// `cap` defaults to the standard round cap; capped runs are excluded from
/// the means and counted in `unconverged`.
pub fn per_node_convergence(graph: &Graph, trials: usize, seed: u64, cap: Option<u64>) -> Result<ConvergenceStats> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let bounds = Bounds::of(graph);
    let cap = cap.unwrap_or_else(|| bounds.default_cap());
    let limit = bounds.diameter_bound();
    let master = CounterRng::new(seed);
    let runs: Vec<NodeRuns> = graph
        .nodes()
        .into_par_iter()
        .map_init(
            || Simulator::new(graph),
            |sim, v| {
                let mut start = ColorState::uncolored(graph.n());
                start.set(v, Color::Red);
                let node_rng = master.derive(v as u64);
                let mut acc = NodeRuns::default();
                for t in 0..trials as u64 {
                    sim.load(&start);
                    let (rounds, converged) = sim.run(&node_rng.derive(t), cap);
                    if converged {
                        acc.total += rounds;
                        acc.converged += 1;
                        acc.longest = acc.longest.max(rounds);
                        acc.violations += u64::from(rounds as f64 > limit);
                    }
                }
                acc
            },
        )
        .collect();
    let per_node_mean: Vec<Option<f64>> = runs
        .iter()
        .map(|r| (r.converged > 0).then(|| r.total as f64 / r.converged as f64))
        .collect();
    let means: Vec<f64> = per_node_mean.iter().flatten().copied().collect();
    let (min, max, mean) = if means.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            means.iter().copied().fold(f64::INFINITY, f64::min),
            means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            means.iter().sum::<f64>() / means.len() as f64,
        )
    };
    Ok(ConvergenceStats {
        per_node_mean,
        trials,
        min,
        max,
        mean,
        max_rounds: runs.iter().map(|r| r.longest).max().unwrap_or(0),
        unconverged: runs.iter().map(|r| trials as u64 - r.converged).sum(),
        diameter_bound_violations: runs.iter().map(|r| r.violations).sum(),
        bounds,
    })
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("q = {q} must lie strictly between 0 and 1")))
    }
}

/// Colors each node red independently with probability `q`; node `v` is
/// colored iff `rng.unit(0, v) < q`.
pub fn q_random_state(graph: &Graph, q: f64, rng: &CounterRng) -> Result<ColorState> {
    check_q(q)?;
    Ok(ColorState::from_colors(
        graph
            .nodes()
            .map(|v| if rng.unit(0, v as u64) < q { Color::Red } else { Color::Uncolored })
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QRow {
    pub q: f64,
    pub mean: f64,
    pub std: f64,
    /// Converged runs behind `mean`.
    pub trials: usize,
    pub unconverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QBenchResult {
    pub rows: Vec<QRow>,
    /// Correlation between q and mean rounds; `None` when undefined.
    pub pearson: Option<f64>,
}

impl QBenchResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "q,mean,std,trials,unconverged")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.q, r.mean, r.std, r.trials, r.unconverged)?;
        }
        Ok(())
    }
}

/// Mean convergence time from q-random states for each q. Trial `t` of the
/// `i`-th q draws its state from `derive(i).derive(t)` and runs on that
/// stream's child 1.
pub fn q_sweep(graph: &Graph, qs: &[f64], trials: usize, seed: u64, cap: Option<u64>) -> Result<QBenchResult> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    for &q in qs {
        check_q(q)?;
    }
    let cap = cap.unwrap_or_else(|| default_round_cap(graph));
    let master = CounterRng::new(seed);
    let mut rows = Vec::with_capacity(qs.len());
    for (i, &q) in qs.iter().enumerate() {
        let q_rng = master.derive(i as u64);
        let times: Vec<Option<u64>> = (0..trials as u64)
            .into_par_iter()
            .map_init(
                || Simulator::new(graph),
                |sim, t| {
                    let stream = q_rng.derive(t);
                    let state = q_random_state(graph, q, &stream).expect("q checked");
                    sim.load(&state);
                    let (rounds, converged) = sim.run(&stream.derive(1), cap);
                    converged.then_some(rounds)
                },
            )
            .collect();
        let done: Vec<f64> = times.iter().flatten().map(|&x| x as f64).collect();
        let len = done.len() as f64;
        let mean = if done.is_empty() { f64::NAN } else { done.iter().sum::<f64>() / len };
        let std = if done.len() > 1 {
            (done.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0)).sqrt()
        } else {
            0.0
        };
        rows.push(QRow { q, mean, std, trials: done.len(), unconverged: trials - done.len() });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.trials > 0).map(|r| (r.q, r.mean)).unzip();
    Ok(QBenchResult { pearson: pearson(&xs, &ys), rows })
}

/// Sample correlation coefficient; `None` for mismatched or too short
/// inputs and for zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bounds: Bounds,
    pub beta: f64,
    pub observations: usize,
    pub diameter_bound: f64,
    pub diameter_violations: usize,
    pub undirected_bound: Option<f64>,
    pub undirected_violations: Option<usize>,
    pub markov_bound: f64,
    pub markov_violations: usize,
}

impl BoundReport {
    pub fn diameter_violation_rate(&self) -> f64 {
        rate(self.diameter_violations, self.observations)
    }

    pub fn markov_violation_rate(&self) -> f64 {
        rate(self.markov_violations, self.observations)
    }

    /// True if more than 0.1% of the observations exceed `4 D Δ+ log2 n`.
    pub fn flagged(&self) -> bool {
        self.diameter_violation_rate() > 0.001
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bound,value,violations,observations")?;
        writeln!(out, "diameter,{},{},{}", self.diameter_bound, self.diameter_violations, self.observations)?;
        if let (Some(b), Some(v)) = (self.undirected_bound, self.undirected_violations) {
            writeln!(out, "undirected,{b},{v},{}", self.observations)?;
        }
        writeln!(out, "markov,{},{},{}", self.markov_bound, self.markov_violations, self.observations)?;
        Ok(())
    }
}

fn rate(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Counts observed convergence times above each bound.
pub fn bound_report(bounds: Bounds, observed: &[u64], beta: f64) -> Result<BoundReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must lie strictly between 0 and 1")));
    }
    let over = |limit: f64| observed.iter().filter(|&&x| x as f64 > limit).count();
    let diameter_bound = bounds.diameter_bound();
    let undirected_bound = bounds.undirected_bound();
    let markov_bound = bounds.markov_bound(beta);
    Ok(BoundReport {
        bounds,
        beta,
        observations: observed.len(),
        diameter_bound,
        diameter_violations: over(diameter_bound),
        undirected_bound,
        undirected_violations: undirected_bound.map(over),
        markov_bound,
        markov_violations: over(markov_bound),
    })
}

/// Smallest radius `s` whose out-neighborhood of `v` reaches
/// `2 ln n / q` nodes; `None` if no radius does.
pub fn h_q(graph: &Graph, v: NodeId, q: f64) -> Result<Option<usize>> {
    check_q(q)?;
    let need = 2.0 * (graph.n() as f64).ln() / q;
    let dist = graph.distances_from(v)?;
    let mut by_radius: Vec<usize> = dist.iter().flatten().copied().collect();
    by_radius.sort_unstable();
    Ok(by_radius
        .iter()
        .enumerate()
        .find(|&(i, _)| (i + 1) as f64 >= need)
        .map(|(_, &d)| d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_ba, generate_construction, Construction, ConstructionKind};

    fn complete(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph::build(edges, n, true).unwrap()
    }

    #[test]
    fn per_node_examples() {
        let s = per_node_convergence(&complete(2), 20, 1, None).unwrap();
        assert_eq!((s.min, s.max, s.mean), (1.0, 1.0, 1.0));

        // In K3 a single colored node is not a vertex cover; the exact
        // expected time is 2.
        let k3 = complete(3);
        let mut start = ColorState::uncolored(3);
        start.set(0, Color::Red);
        let exact = crate::exact::exact_expected_convergence_time(&k3, &start).unwrap();
        assert!((exact - 2.0).abs() < 1e-12);
        let trials = 20_000;
        let s = per_node_convergence(&k3, trials, 1, None).unwrap();
        // Rounds here have variance 2/3.
        let se = (2.0 / 3.0 / trials as f64).sqrt();
        for m in &s.per_node_mean {
            assert!((m.unwrap() - exact).abs() <= 4.0 * se);
        }

        let pair = Graph::build([(0, 1)], 2, false).unwrap();
        let s = per_node_convergence(&pair, 10, 1, None).unwrap();
        assert_eq!(s.per_node_mean, vec![Some(0.0), Some(1.0)]);
        assert!(per_node_convergence(&pair, 0, 1, None).is_err());
    }

    #[test]
    fn per_node_on_ba() {
        let graph = generate_ba(120, 3, 4).unwrap();
        let s = per_node_convergence(&graph, 30, 2, None).unwrap();
        assert!(s.min <= s.mean && s.mean <= s.max);
        assert!(s.max.is_finite());
        assert_eq!(s.unconverged, 0);
        assert_eq!(s.diameter_bound_violations, 0);
        assert!(s.max_rounds as f64 <= s.bounds.diameter_bound());
        assert_eq!(s, per_node_convergence(&graph, 30, 2, None).unwrap());
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 121);
    }

    #[test]
    fn per_node_reports_capped_runs() {
        let (graph, _) = generate_construction(Construction::new(ConstructionKind::MTightness, 20), 0).unwrap();
        let s = per_node_convergence(&graph, 5, 0, Some(1)).unwrap();
        assert!(s.unconverged > 0);
    }

    #[test]
    fn q_random_examples() {
        let graph = Graph::build(Vec::new(), 10_000, false).unwrap();
        let rng = CounterRng::new(3);
        let s = q_random_state(&graph, 0.5, &rng).unwrap();
        let sigma = (10_000.0f64 * 0.25).sqrt();
        assert!((s.red_count() as f64 - 5000.0).abs() <= 4.0 * sigma);
        assert_eq!(s, q_random_state(&graph, 0.5, &rng).unwrap());
        assert_eq!(s.blue_count(), 0);

        let one = Graph::build(Vec::new(), 1, false).unwrap();
        for seed in 0..20 {
            let r = CounterRng::new(seed);
            let s = q_random_state(&one, 0.5, &r).unwrap();
            assert_eq!(s.get(0).is_colored(), r.unit(0, 0) < 0.5);
        }
        for q in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(q_random_state(&one, q, &rng).is_err());
        }
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), Some(1.0));
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]), Some(-1.0));
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
        assert_eq!(pearson(&[1.0, 2.0], &[3.0, 3.0]), None);
        assert_eq!(pearson(&[1.0, 2.0], &[3.0]), None);
    }

    #[test]
    fn q_sweep_examples() {
        let graph = generate_ba(200, 2, 1).unwrap();
        let single = q_sweep(&graph, &[0.1], 20, 0, None).unwrap();
        assert_eq!(single.pearson, None);
        assert_eq!(single.rows.len(), 1);

        // Without edges every state is stable: zero variance in the means.
        let empty = Graph::build(Vec::new(), 30, false).unwrap();
        let res = q_sweep(&empty, &[0.2, 0.4, 0.6], 50, 1, None).unwrap();
        assert!(res.rows.iter().all(|r| r.mean == 0.0));
        assert_eq!(res.pearson, None);
        let res = q_sweep(&complete(30), &[0.2, 0.4, 0.6], 50, 1, None).unwrap();
        assert!((-1.0..=1.0).contains(&res.pearson.unwrap()));

        let qs: Vec<f64> = (1..=5).map(|i| i as f64 * 0.04).collect();
        let res = q_sweep(&graph, &qs, 40, 2, None).unwrap();
        assert!(res.pearson.unwrap() < 0.0);
        assert!(q_sweep(&graph, &[1.5], 2, 0, None).is_err());
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("q,mean,std,trials,unconverged\n"));
    }

    #[test]
    fn bound_examples() {
        let graph = generate_ba(50, 2, 0).unwrap();
        let b = Bounds::of(&graph);
        let r = bound_report(b, &[0, 0, 0], 0.1).unwrap();
        assert_eq!((r.diameter_violations, r.markov_violations, r.undirected_violations), (0, 0, Some(0)));
        assert!(!r.flagged());
        assert!(bound_report(b, &[], 1.0).is_err());

        let food = Bounds { n: 620, m: 0, diameter: 8, max_out_degree: 132, undirected: true };
        assert_eq!(food.diameter_bound().round(), 39182.0);

        let huge = bound_report(b, &[u64::MAX; 10], 0.5).unwrap();
        assert!(huge.flagged());
        assert_eq!(huge.markov_violation_rate(), 1.0);
        let mut buf = Vec::new();
        huge.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn path_backedges_tightness() {
        let n = 400;
        let (graph, _) = generate_construction(Construction::new(ConstructionKind::PathBackedges, n), 0).unwrap();
        let q = 1.0 / (n as f64).sqrt();
        let floor = (1.0 / (q * (n as f64).ln())).floor();
        let threshold = floor * floor / 8.0;
        let mut good = 0;
        for batch in 0..10u64 {
            let res = q_sweep(&graph, &[q], 30, batch, None).unwrap();
            good += usize::from(res.rows[0].mean > threshold);
        }
        assert!(good >= 9);
    }

    #[test]
    fn high_degree_nodes_see_many_colored() {
        let n = 200;
        let q = 0.9;
        let star = Graph::build((1..n).map(|l| (0, l)), n, false).unwrap();
        let need = 4.0 * (n as f64).ln().powi(2) / (q * q);
        assert!(star.out_degree(0) as f64 >= need);
        let master = CounterRng::new(12);
        let ok = (0..1000)
            .filter(|&t| {
                let s = q_random_state(&star, q, &master.derive(t)).unwrap();
                let colored = star.out_neighbors(0).iter().filter(|&&w| s.get(w).is_colored()).count();
                colored as f64 >= star.out_degree(0) as f64 * q / 2.0
            })
            .count();
        assert!(ok >= 990);
    }

    #[test]
    fn reachable_nodes_hit_colored_within_radius() {
        let graph = generate_ba(300, 2, 6).unwrap();
        let q = 0.1;
        let radii: Vec<Option<usize>> = graph.nodes().map(|v| h_q(&graph, v, q).unwrap()).collect();
        assert!(radii.iter().all(Option::is_some));
        let master = CounterRng::new(4);
        let mut hits = 0;
        let mut total = 0;
        for t in 0..100 {
            let s = q_random_state(&graph, q, &master.derive(t)).unwrap();
            for v in graph.nodes() {
                let r = radii[v].unwrap();
                let dist = graph.distances_from(v).unwrap();
                total += 1;
                hits += usize::from(dist.iter().enumerate().any(|(w, d)| d.is_some_and(|d| d <= r) && s.get(w).is_colored()));
            }
        }
        assert!(hits as f64 >= 0.99 * total as f64);
    }

    #[test]
    fn h_q_examples() {
        // n = 3: need 2 ln 3 / 0.9 ≈ 2.44 nodes, so radius 2 on a path.
        let path = Graph::build([(0, 1), (1, 2)], 3, false).unwrap();
        assert_eq!(h_q(&path, 0, 0.9).unwrap(), Some(2));
        assert_eq!(h_q(&path, 2, 0.9).unwrap(), None);
    }
}
