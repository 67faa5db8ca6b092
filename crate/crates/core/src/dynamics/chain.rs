use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::CounterRng;

/// Rounds for color to travel along `chain` when each `w_i` can only adopt
/// from `w_{i-1}` and `w_0` starts colored.
///
/// In round `t`, the current head `w_i` draws its pick at counter position
/// `(t, w_i)`; the head advances when it picks `w_{i-1}`.
pub fn chain_traversal_time(graph: &Graph, chain: &[NodeId], rng: &CounterRng) -> Result<u64> {
    if chain.is_empty() {
        return Err(Error::InvalidParameter("empty chain".into()));
    }
    for &v in chain {
        graph.check_node(v)?;
    }
    let mut targets = Vec::with_capacity(chain.len() - 1);
    for pair in chain.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        let idx = graph
            .out_neighbors(cur)
            .binary_search(&prev)
            .map_err(|_| Error::ChainEdgeMissing { from: cur, to: prev })?;
        targets.push((cur, idx));
    }
    let mut round = 0u64;
    for (node, idx) in targets {
        let d = graph.out_degree(node);
        loop {
            round += 1;
            if rng.below(round, node as u64, d) == idx {
                break;
            }
        }
    }
    Ok(round)
}
