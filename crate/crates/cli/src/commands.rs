use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use rand::seq::index::sample;
use serde_json::{json, Value};

use randpick::bench::{bound_report, per_node_convergence, q_sweep, Bounds};
use randpick::dynamics::{read_profile, read_state, replay, run, write_state, RunResult, Simulator};
use randpick::exact::{exact_best_seed, exact_expected_convergence_time, exact_f};
use randpick::graph::{
    generate_ba, generate_construction, max_coverage_transform, read_edge_list_file, write_edge_list,
    Construction, ConstructionKind,
};
use randpick::seeding::{
    baseline_select, community_select, compare_experiment, greedy_select, Algorithm, CompareConfig,
    GreedyConfig, Replications, DEFAULT_REPLICATIONS,
};
use randpick::{Color, ColorState, CounterRng, Graph, NodeId};

use crate::config::{Command, Format, GenKind, GenOpts, Opts};
use crate::{Failure, Outcome};

type CmdResult = Result<Outcome, Failure>;

/// Stream of the master seed used to draw `--b0` blue nodes.
const BLUE_STREAM: u64 = 0xb10e;

pub fn execute(command: &Command) -> CmdResult {
    match command {
        Command::Simulate(o) => with_workers(o, simulate),
        Command::Select(o) => with_workers(o, select),
        Command::Compare(o) => with_workers(o, compare),
        Command::Convbench(o) => with_workers(o, convbench),
        Command::Qbench(o) => with_workers(o, qbench),
        Command::Audit(o) => with_workers(o, audit),
        Command::Exact(o) => with_workers(o, exact),
        Command::Gen(g) => gen(g),
        Command::Run { .. } => Err(Failure::usage("saved configs cannot contain `run`")),
    }
}

fn with_workers(opts: &Opts, f: fn(&Opts) -> CmdResult) -> CmdResult {
    match opts.workers {
        None => f(opts),
        Some(0) => Err(Failure::usage("--workers must be at least 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(w).build()?;
            pool.install(|| f(opts))
        }
    }
}

fn require_seed(opts: &Opts, what: &str) -> Result<u64, Failure> {
    opts.seed.ok_or_else(|| Failure::usage(format!("{what} is stochastic: --seed is required")))
}

fn single_k(opts: &Opts) -> Result<usize, Failure> {
    match opts.k.as_slice() {
        [k] => Ok(*k),
        [] => Err(Failure::usage("--k is required")),
        _ => Err(Failure::usage("this command takes a single --k")),
    }
}

/// Writes to `--out` or stdout.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_json(path: Option<&Path>, value: &Value) -> Result<(), Failure> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn parse_generator(spec: &str, seed: Option<u64>) -> Result<(Graph, Option<ColorState>), Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Failure::usage(format!("bad number {s:?} in generator {spec:?}")))
    };
    let construction = |kind| -> Result<_, Failure> {
        let [_, n] = parts[..] else {
            return Err(Failure::usage(format!("generator {spec:?} expects kind:N")));
        };
        let (g, s) = generate_construction(Construction::new(kind, num(n)?), seed.unwrap_or(0))?;
        Ok((g, Some(s)))
    };
    match parts[0] {
        "ba" => {
            let [_, n, m] = parts[..] else {
                return Err(Failure::usage(format!("generator {spec:?} expects ba:N:M")));
            };
            let seed = seed.ok_or_else(|| Failure::usage("ba generation needs --seed"))?;
            Ok((generate_ba(num(n)?, num(m)?, seed)?, None))
        }
        "star" => {
            seed.ok_or_else(|| Failure::usage("star generation needs --seed"))?;
            construction(ConstructionKind::Star)
        }
        "bipartite" => construction(ConstructionKind::BipartiteTightness),
        "path-backedges" => construction(ConstructionKind::PathBackedges),
        "m-tightness" => construction(ConstructionKind::MTightness),
        other => Err(Failure::usage(format!("unknown generator {other:?}"))),
    }
}

fn load_graph(opts: &Opts) -> Result<(Graph, Option<ColorState>), Failure> {
    match (&opts.graph, &opts.generate) {
        (Some(path), None) => {
            let loaded = read_edge_list_file(path, opts.undirected)
                .with_context(|| format!("loading {}", path.display()))?;
            if !loaded.is_identity() {
                eprintln!("note: node labels were remapped to dense ids 0..{}", loaded.graph.n());
            }
            Ok((loaded.graph, None))
        }
        (None, Some(spec)) => parse_generator(spec, opts.seed),
        _ => Err(Failure::usage("give exactly one of --graph or --generate")),
    }
}

/// Initial state from `--state`, `--b0` or the construction, then `--seeds`
/// made red.
fn load_state(opts: &Opts, graph: &Graph, built: Option<ColorState>) -> Result<ColorState, Failure> {
    let n = graph.n();
    let base = if let Some(path) = &opts.state {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        read_state(BufReader::new(file), n).with_context(|| format!("reading {}", path.display()))?
    } else if let Some(b0) = opts.b0 {
        let seed = require_seed(opts, "--b0")?;
        if b0 > n {
            return Err(Failure::usage(format!("--b0 {b0} exceeds n = {n}")));
        }
        let mut rng = CounterRng::new(seed).derive(BLUE_STREAM).seq();
        let blue: Vec<NodeId> = sample(&mut rng, n, b0).into_vec();
        ColorState::from_sets(n, &[], &blue)?
    } else {
        built.unwrap_or_else(|| ColorState::uncolored(n))
    };
    Ok(base.with_red(&opts.seeds)?)
}

fn load(opts: &Opts) -> Result<(Graph, ColorState), Failure> {
    let (graph, built) = load_graph(opts)?;
    let state = load_state(opts, &graph, built)?;
    Ok((graph, state))
}

fn color_name(c: Color) -> &'static str {
    match c {
        Color::Red => "red",
        Color::Blue => "blue",
        Color::Uncolored => "uncolored",
    }
}

fn simulate(opts: &Opts) -> CmdResult {
    let (graph, state) = load(opts)?;
    let result: RunResult = match &opts.profile {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let profile = read_profile(&graph, BufReader::new(file))
                .with_context(|| format!("reading {}", path.display()))?;
            replay(&graph, &state, &profile)?
        }
        None => {
            let seed = require_seed(opts, "simulate")?;
            let cap = opts.max_rounds.unwrap_or_else(|| Bounds::of(&graph).default_cap());
            run(&graph, &state, &CounterRng::new(seed), cap)
        }
    };
    eprintln!(
        "{} after {} rounds: red {} blue {} uncolored {}",
        if result.converged { "stable" } else { "not stable" },
        result.rounds,
        result.final_state.red_count(),
        result.final_state.blue_count(),
        graph.n() - result.final_state.red_count() - result.final_state.blue_count(),
    );
    if let Some(path) = &opts.final_state {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        write_state(&result.final_state, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = &opts.events {
        emit(Some(path), |w| {
            writeln!(w, "round,node,color")?;
            for e in &result.events {
                writeln!(w, "{},{},{}", e.round, e.node, color_name(e.color))?;
            }
            Ok(())
        })?;
    }
    match opts.format {
        Format::Csv => emit(opts.out.as_deref(), |w| {
            writeln!(w, "round,red,blue,uncolored")?;
            for (t, c) in result.trajectory.iter().enumerate() {
                writeln!(w, "{t},{},{},{}", c.red, c.blue, c.uncolored)?;
            }
            Ok(())
        })?,
        Format::Json => emit_json(
            opts.out.as_deref(),
            &json!({
                "rounds": result.rounds,
                "converged": result.converged,
                "trajectory": result.trajectory.iter().enumerate().map(|(t, c)| json!({
                    "round": t, "red": c.red, "blue": c.blue, "uncolored": c.uncolored,
                })).collect::<Vec<_>>(),
                "events": result.events.iter().map(|e| json!({
                    "round": e.round, "node": e.node, "color": color_name(e.color),
                })).collect::<Vec<_>>(),
                "final_state": {
                    "red": result.final_state.nodes_with(Color::Red),
                    "blue": result.final_state.nodes_with(Color::Blue),
                },
            }),
        )?,
    }
    if result.converged {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::Warning(format!("not stable after {} rounds", result.rounds)))
    }
}

fn replications(opts: &Opts) -> Replications {
    if opts.guaranteed_reps {
        Replications::Guaranteed
    } else {
        Replications::Fixed(opts.reps.unwrap_or(DEFAULT_REPLICATIONS))
    }
}

fn select(opts: &Opts) -> CmdResult {
    let (graph, state) = load(opts)?;
    let k = single_k(opts)?;
    let algorithm: Algorithm = match opts.algorithm.as_slice() {
        [] => Algorithm::Greedy,
        [a] => a.parse()?,
        _ => return Err(Failure::usage("select takes a single --algorithm")),
    };
    let (seeds, estimates): (Vec<NodeId>, Option<Vec<f64>>) = match algorithm {
        Algorithm::Greedy => {
            let cfg = GreedyConfig {
                k,
                epsilon: opts.epsilon.unwrap_or(0.1),
                replications: replications(opts),
                round_cap: opts.max_rounds,
                seed: require_seed(opts, "greedy selection")?,
            };
            let sel = greedy_select(&graph, &state, &cfg)?;
            eprintln!(
                "greedy: {} simulations ({} hit the round cap) in {:.2?}",
                sel.simulations, sel.unconverged, sel.elapsed
            );
            (sel.seeds, Some(sel.estimates))
        }
        Algorithm::Centrality(m) => (baseline_select(&graph, &state, k, m)?, None),
        Algorithm::Community => {
            let seed = require_seed(opts, "community selection")?;
            (community_select(&graph, &state, k, seed)?, None)
        }
    };
    let estimate = |i: usize| estimates.as_ref().map(|e| e[i]);
    match opts.format {
        Format::Csv => emit(opts.out.as_deref(), |w| {
            writeln!(w, "step,node,estimate")?;
            for (i, s) in seeds.iter().enumerate() {
                match estimate(i) {
                    Some(e) => writeln!(w, "{},{s},{e}", i + 1)?,
                    None => writeln!(w, "{},{s},", i + 1)?,
                }
            }
            Ok(())
        })?,
        Format::Json => emit_json(
            opts.out.as_deref(),
            &json!({
                "algorithm": algorithm.to_string(),
                "k": k,
                "seeds": seeds,
                "estimates": estimates,
            }),
        )?,
    }
    Ok(Outcome::Done)
}

fn compare(opts: &Opts) -> CmdResult {
    let (graph, _) = load_graph(opts)?;
    if opts.state.is_some() || !opts.seeds.is_empty() {
        return Err(Failure::usage("compare draws its own blue sets; use --b0"));
    }
    let b0 = opts.b0.ok_or_else(|| Failure::usage("--b0 is required"))?;
    if opts.k.is_empty() {
        return Err(Failure::usage("--k is required"));
    }
    let algorithms = if opts.algorithm.is_empty() {
        Algorithm::all()
    } else {
        opts.algorithm.iter().map(|a| a.parse()).collect::<Result<Vec<Algorithm>, _>>()?
    };
    let config = CompareConfig {
        b0,
        k_values: opts.k.clone(),
        algorithms,
        trials: opts.trials.unwrap_or(300),
        replications: opts.reps.unwrap_or(DEFAULT_REPLICATIONS),
        round_cap: opts.max_rounds,
        seed: require_seed(opts, "compare")?,
    };
    let start = Instant::now();
    let table = compare_experiment(&graph, &config)?;
    eprintln!("compare finished in {:.2?}", start.elapsed());
    for a in &table.skipped {
        eprintln!("note: {a} skipped (not meaningful on an undirected graph)");
    }
    match opts.format {
        Format::Csv => emit(opts.out.as_deref(), |w| Ok(table.write_csv(w)?))?,
        Format::Json => emit_json(
            opts.out.as_deref(),
            &json!({
                "rows": table.rows.iter().map(|r| json!({
                    "algorithm": r.algorithm.to_string(),
                    "k": r.k,
                    "b0": r.b0,
                    "mean_red_ratio": r.mean_red_ratio,
                    "std": r.std,
                    "trials": r.trials,
                    "unconverged": r.unconverged,
                })).collect::<Vec<_>>(),
                "skipped": table.skipped.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            }),
        )?,
    }
    Ok(Outcome::Done)
}

fn bounds_json(b: &Bounds) -> Value {
    json!({
        "n": b.n,
        "m": b.m,
        "diameter": b.diameter,
        "max_out_degree": b.max_out_degree,
        "diameter_bound": b.diameter_bound(),
        "undirected_bound": b.undirected_bound(),
    })
}

fn convbench(opts: &Opts) -> CmdResult {
    let (graph, _) = load_graph(opts)?;
    let seed = require_seed(opts, "convbench")?;
    let stats = per_node_convergence(&graph, opts.trials.unwrap_or(300), seed, opts.max_rounds)?;
    eprintln!(
        "min {:.3} max {:.3} mean {:.3} rounds; longest run {}; bound {:.1}; {} violations, {} capped",
        stats.min,
        stats.max,
        stats.mean,
        stats.max_rounds,
        stats.bounds.diameter_bound(),
        stats.diameter_bound_violations,
        stats.unconverged
    );
    match opts.format {
        Format::Csv => emit(opts.out.as_deref(), |w| Ok(stats.write_csv(w)?))?,
        Format::Json => emit_json(
            opts.out.as_deref(),
            &json!({
                "trials": stats.trials,
                "min": stats.min,
                "max": stats.max,
                "mean": stats.mean,
                "max_rounds": stats.max_rounds,
                "unconverged": stats.unconverged,
                "diameter_bound_violations": stats.diameter_bound_violations,
                "bounds": bounds_json(&stats.bounds),
                "per_node_mean": stats.per_node_mean,
            }),
        )?,
    }
    if stats.violation_rate() > 0.001 {
        Ok(Outcome::Warning(format!(
            "{:.4}% of runs exceeded the diameter bound",
            100.0 * stats.violation_rate()
        )))
    } else {
        Ok(Outcome::Done)
    }
}

fn qbench(opts: &Opts) -> CmdResult {
    let (graph, _) = load_graph(opts)?;
    if opts.q.is_empty() {
        return Err(Failure::usage("--q is required"));
    }
    let seed = require_seed(opts, "qbench")?;
    let res = q_sweep(&graph, &opts.q, opts.trials.unwrap_or(100), seed, opts.max_rounds)?;
    match opts.format {
        Format::Csv => emit(opts.out.as_deref(), |w| Ok(res.write_csv(w)?))?,
        Format::Json => emit_json(
            opts.out.as_deref(),
            &json!({
                "rows": res.rows.iter().map(|r| json!({
                    "q": r.q, "mean": r.mean, "std": r.std,
                    "trials": r.trials, "unconverged": r.unconverged,
                })).collect::<Vec<_>>(),
                "pearson": res.pearson,
            }),
        )?,
    }
    match res.pearson {
        Some(r) => {
            eprintln!("pearson r = {r:.4}");
            Ok(Outcome::Done)
        }
        None => Ok(Outcome::Warning("correlation undefined (fewer than two distinct q or constant means)".into())),
    }
}

fn audit(opts: &Opts) -> CmdResult {
    let (graph, state) = load(opts)?;
    let seed = require_seed(opts, "audit")?;
    let beta = opts.beta.unwrap_or(0.1);
    let bounds = Bounds::of(&graph);
    let cap = opts.max_rounds.unwrap_or_else(|| bounds.default_cap());
    let master = CounterRng::new(seed);
    let mut sim = Simulator::new(&graph);
    let mut times = Vec::new();
    let mut capped = 0;
    for t in 0..opts.trials.unwrap_or(300) as u64 {
        sim.load(&state);
        let (rounds, converged) = sim.run(&master.derive(t), cap);
        if converged {
            times.push(rounds);
        } else {
            capped += 1;
        }
    }
    let report = bound_report(bounds, &times, beta)?;
    match opts.format {
        Format::Csv => emit(opts.out.as_deref(), |w| Ok(report.write_csv(w)?))?,
        Format::Json => emit_json(
            opts.out.as_deref(),
            &json!({
                "bounds": bounds_json(&bounds),
                "beta": beta,
                "observations": report.observations,
                "capped": capped,
                "diameter": {"bound": report.diameter_bound, "violations": report.diameter_violations},
                "undirected": {"bound": report.undirected_bound, "violations": report.undirected_violations},
                "markov": {"bound": report.markov_bound, "violations": report.markov_violations},
            }),
        )?,
    }
    if report.flagged() {
        Ok(Outcome::Warning(format!(
            "{:.4}% of runs exceeded the diameter bound",
            100.0 * report.diameter_violation_rate()
        )))
    } else if capped > 0 {
        Ok(Outcome::Warning(format!("{capped} runs hit the round cap of {cap}")))
    } else {
        Ok(Outcome::Done)
    }
}

fn exact(opts: &Opts) -> CmdResult {
    let (graph, built) = load_graph(opts)?;
    let mut base_opts = opts.clone();
    base_opts.seeds.clear();
    let state = load_state(&base_opts, &graph, built)?;
    let f = exact_f(&graph, &state, &opts.seeds)?;
    let time = exact_expected_convergence_time(&graph, &state.with_red(&opts.seeds)?)?;
    let best = match opts.k.as_slice() {
        [] => None,
        _ => Some(exact_best_seed(&graph, &state, single_k(opts)?)?),
    };
    let join = |s: &[NodeId]| s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    match opts.format {
        Format::Csv => emit(opts.out.as_deref(), |w| {
            writeln!(w, "quantity,value")?;
            writeln!(w, "expected_red,{f}")?;
            writeln!(w, "expected_convergence_time,{time}")?;
            if let Some((seeds, value)) = &best {
                writeln!(w, "best_seeds,{}", join(seeds))?;
                writeln!(w, "best_expected_red,{value}")?;
            }
            Ok(())
        })?,
        Format::Json => emit_json(
            opts.out.as_deref(),
            &json!({
                "seeds": opts.seeds,
                "expected_red": f,
                "expected_convergence_time": time,
                "best_seeds": best.as_ref().map(|b| &b.0),
                "best_expected_red": best.as_ref().map(|b| b.1),
            }),
        )?,
    }
    Ok(Outcome::Done)
}

fn read_sets(path: &Path) -> Result<Vec<Vec<usize>>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut sets = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        let set = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|w| !w.is_empty())
            .map(|w| w.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        sets.push(set);
    }
    Ok(sets)
}

fn gen(g: &GenOpts) -> CmdResult {
    let need_n = || g.n.ok_or_else(|| Failure::usage("--n is required"));
    let (graph, state) = match g.kind {
        GenKind::Ba => {
            let seed = g.seed.ok_or_else(|| Failure::usage("ba generation needs --seed"))?;
            let m = g.m.ok_or_else(|| Failure::usage("--m is required"))?;
            (generate_ba(need_n()?, m, seed)?, None)
        }
        GenKind::MaxCoverage => {
            let path = g.sets.as_ref().ok_or_else(|| Failure::usage("--sets is required"))?;
            let sets = read_sets(path)?;
            let h = g.elements.unwrap_or_else(|| sets.iter().flatten().map(|&e| e + 1).max().unwrap_or(0));
            let k = g.k.ok_or_else(|| Failure::usage("--k is required"))?;
            let inst = max_coverage_transform(&sets, h, k, g.epsilon.unwrap_or(1.0))?;
            eprintln!(
                "subsets are nodes {:?}, elements start at node {} with blocks of {}",
                inst.subset_nodes, inst.element_nodes.start, inst.block
            );
            let n = inst.graph.n();
            (inst.graph, Some(ColorState::uncolored(n)))
        }
        kind => {
            let kind = match kind {
                GenKind::Star => {
                    g.seed.ok_or_else(|| Failure::usage("star generation needs --seed"))?;
                    ConstructionKind::Star
                }
                GenKind::Bipartite => ConstructionKind::BipartiteTightness,
                GenKind::PathBackedges => ConstructionKind::PathBackedges,
                _ => ConstructionKind::MTightness,
            };
            let (graph, state) = generate_construction(Construction::new(kind, need_n()?), g.seed.unwrap_or(0))?;
            (graph, Some(state))
        }
    };
    eprintln!("{} nodes, {} arcs", graph.n(), graph.m());
    emit(g.out.as_deref(), |w| Ok(write_edge_list(&graph, w)?))?;
    if let Some(path) = &g.state_out {
        let state = state.unwrap_or_else(|| ColorState::uncolored(graph.n()));
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        write_state(&state, &mut w)?;
        w.flush()?;
    }
    Ok(Outcome::Done)
}
