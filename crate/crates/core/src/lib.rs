//! Random Pick competitive diffusion.
//!
//! Two products compete on a directed graph. Every uncolored node repeatedly
//! picks a uniformly random out-neighbor and adopts its color once the pick
//! lands on a colored node; colored nodes never change again. This crate
//! provides:
//!
//! * [`graph`]: compact directed graphs, loaders, metrics and generators;
//! * [`dynamics`]: the stochastic process, pick profiles and extended sequences;
//! * [`exact`]: absorbing-chain oracles for small graphs;
//! * [`centrality`]: node rankings and label propagation communities;
//! * [`seeding`]: Monte Carlo greedy seed selection plus baselines;
//! * [`bench`]: convergence-time experiments and bound audits.
//!
//! All randomness flows from [`rng::CounterRng`], a counter-based generator
//! keyed by a master seed, so results do not depend on thread count.

pub mod bench;
pub mod centrality;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod graph;
pub mod rng;
pub mod seeding;

pub use dynamics::{Color, ColorState};
pub use error::{Error, Result};
pub use graph::{Direction, Graph, NodeId};
pub use rng::CounterRng;
