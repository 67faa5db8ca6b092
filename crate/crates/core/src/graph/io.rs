//! Whitespace-separated edge lists (SNAP / KONECT style).
//!
//! One `u v` pair per line; extra columns (weights, timestamps) are ignored
//! and lines starting with `#` or `%` are comments. Two comment directives
//! written by [`write_edge_list`] are understood on input:
//!
//! ```text
//! # nodes 5        ids are already dense in 0..5 (keeps isolated nodes)
//! # undirected     mirror every edge
//! ```
//!
//! Without `# nodes`, labels are remapped to dense ids in ascending label
//! order and the mapping is returned alongside the graph.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Original label of each dense id.
    pub labels: Vec<u64>,
}

impl LoadedGraph {
    pub fn is_identity(&self) -> bool {
        self.labels.iter().enumerate().all(|(i, &l)| l == i as u64)
    }
}

pub fn read_edge_list_file(path: impl AsRef<Path>, undirected: bool) -> Result<LoadedGraph> {
    read_edge_list(BufReader::new(File::open(path)?), undirected)
}

pub fn read_edge_list<R: BufRead>(reader: R, undirected: bool) -> Result<LoadedGraph> {
    let mut undirected = undirected;
    let mut declared_n: Option<usize> = None;
    let mut raw: Vec<(u64, u64)> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#').or_else(|| trimmed.strip_prefix('%')) {
            let mut words = comment.split_whitespace();
            match (words.next(), words.next()) {
                (Some("undirected"), None) => undirected = true,
                (Some("nodes"), Some(count)) => {
                    let count = count
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad node count {count:?}")))?;
                    declared_n = Some(count);
                }
                _ => {}
            }
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let mut next_id = || -> Result<u64> {
            let tok = fields
                .next()
                .ok_or_else(|| Error::parse(lineno, "expected two node ids"))?;
            tok.parse()
                .map_err(|_| Error::parse(lineno, format!("bad node id {tok:?}")))
        };
        let u = next_id()?;
        let v = next_id()?;
        raw.push((u, v));
    }

    let (n, labels, pairs) = match declared_n {
        Some(n) => {
            if let Some(&(u, v)) = raw.iter().find(|&&(u, v)| u.max(v) >= n as u64) {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("edge ({u}, {v}) exceeds declared node count {n}"),
                });
            }
            let pairs = raw.iter().map(|&(u, v)| (u as usize, v as usize)).collect::<Vec<_>>();
            (n, (0..n as u64).collect(), pairs)
        }
        None => {
            let mut labels: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
            labels.sort_unstable();
            labels.dedup();
            let id = |l: u64| labels.binary_search(&l).expect("label collected above");
            let pairs = raw.iter().map(|&(u, v)| (id(u), id(v))).collect::<Vec<_>>();
            (labels.len(), labels, pairs)
        }
    };
    let graph = Graph::build(pairs, n, undirected)?;
    Ok(LoadedGraph { graph, labels })
}

/// Writes a graph so that [`read_edge_list`] reproduces it exactly.
/// Undirected graphs list each edge once.
pub fn write_edge_list<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "# randpick edge list")?;
    writeln!(out, "# nodes {}", graph.n())?;
    if graph.is_undirected() {
        writeln!(out, "# undirected")?;
    }
    for (u, v) in graph.edges() {
        if !graph.is_undirected() || u < v {
            writeln!(out, "{u} {v}")?;
        }
    }
    Ok(())
}
