//! Command definitions shared by the argument parser and saved experiment
//! files. A saved file is the TOML form of [`Command`], tagged by `command`.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Run the process once, or replay a fixed pick profile.
    Simulate(Opts),
    /// Choose k seed nodes with greedy, a centrality ranking or communities.
    Select(Opts),
    /// Paired comparison of seed selection algorithms over random blue sets.
    Compare(Opts),
    /// Mean convergence time from every single-node start.
    Convbench(Opts),
    /// Mean convergence time from q-random starts, per q.
    Qbench(Opts),
    /// Count convergence times above the theoretical bounds.
    Audit(Opts),
    /// Exact expectations by solving the absorbing chain (n <= 13).
    Exact(Opts),
    /// Write a generated graph as an edge list.
    Gen(GenOpts),
    /// Execute a saved experiment file.
    #[serde(skip)]
    Run {
        /// TOML file written by --save-config.
        config: PathBuf,
    },
}

/// TOML integers are signed 64-bit, so seeds stop at `i64::MAX`.
fn seed_parser() -> clap::builder::RangedU64ValueParser {
    clap::value_parser!(u64).range(..=i64::MAX as u64)
}

fn is_false(b: &bool) -> bool {
    !b
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Opts {
    /// Edge list file.
    #[arg(long, conflicts_with = "generate")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,

    /// Generated graph: ba:N:M, star:N, bipartite:N, path-backedges:N or
    /// m-tightness:N. Constructions come with their own initial state.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generate: Option<String>,

    /// Treat the edge list as undirected.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub undirected: bool,

    /// Initial state file (`red ...` / `blue ...` lines).
    #[arg(long, conflicts_with = "b0")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<PathBuf>,

    /// Color this many uniformly random nodes blue.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<usize>,

    /// Extra nodes to color red before running.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<usize>,

    /// Seed budget; compare accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<usize>,

    /// greedy, community or a centrality measure; compare accepts a list
    /// and defaults to all of them.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub algorithm: Vec<String>,

    /// Greedy accuracy parameter.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,

    /// Simulations per spread estimate.
    #[arg(long, conflicts_with = "guaranteed_reps")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,

    /// Use the replication count that carries the approximation guarantee.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub guaranteed_reps: bool,

    /// Independent repetitions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,

    /// Coloring probabilities for qbench.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub q: Vec<f64>,

    /// Tail probability for the Markov bound m/beta.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,

    /// Master seed; required by every stochastic command.
    #[arg(long, value_parser = seed_parser())]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Worker threads (results do not depend on this).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,

    /// Round cap per run; defaults to ten times the diameter bound.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u64>,

    /// Pick profile file for deterministic replay.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,

    /// Output file (stdout when absent).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// simulate: also write the final state here.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_state: Option<PathBuf>,

    /// simulate: also write the coloring events (round,node,color) here.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Ba,
    Star,
    Bipartite,
    PathBackedges,
    MTightness,
    MaxCoverage,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenOpts {
    #[arg(value_enum)]
    pub kind: GenKind,

    /// Number of nodes (not used by max-coverage).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    /// Edges added per new node for ba.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,

    /// max-coverage: file with one subset per line (element indices).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sets: Option<PathBuf>,

    /// max-coverage: number of elements (default: largest index + 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elements: Option<usize>,

    /// max-coverage: budget.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,

    /// max-coverage: each element becomes a block of ceil(1/epsilon) nodes.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,

    /// Required for ba and star.
    #[arg(long, value_parser = seed_parser())]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Edge list output (stdout when absent).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Write the construction's initial state here.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(cmd: &Command) -> Command {
        let text = toml::to_string(cmd).unwrap();
        toml::from_str(&text).unwrap()
    }

    #[test]
    fn configs_round_trip() {
        let select = Command::Select(Opts {
            generate: Some("ba:300:3".into()),
            b0: Some(10),
            k: vec![5],
            algorithm: vec!["greedy".into()],
            epsilon: Some(0.25),
            reps: Some(40),
            seed: Some(9),
            out: Some("seeds.csv".into()),
            format: Format::Json,
            ..Opts::default()
        });
        assert_eq!(round_trip(&select), select);

        let qbench = Command::Qbench(Opts {
            graph: Some("g.txt".into()),
            undirected: true,
            q: vec![0.02, 0.1, 0.2],
            trials: Some(100),
            seed: Some(i64::MAX as u64),
            ..Opts::default()
        });
        assert_eq!(round_trip(&qbench), qbench);

        let gen = Command::Gen(GenOpts {
            kind: GenKind::PathBackedges,
            n: Some(64),
            m: None,
            sets: None,
            elements: None,
            k: None,
            epsilon: None,
            seed: None,
            out: Some("p.txt".into()),
            state_out: None,
        });
        assert_eq!(round_trip(&gen), gen);
    }

    #[test]
    fn saved_config_is_tagged() {
        let text = toml::to_string(&Command::Exact(Opts { seeds: vec![0], ..Opts::default() })).unwrap();
        assert!(text.starts_with("command = \"exact\""), "{text}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<Command>("command = \"exact\"\nbogus = 1\n");
        assert!(err.is_err());
    }
}
