//! The Random Pick process.
//!
//! In every round each uncolored node picks one out-neighbor uniformly at
//! random and, if the pick is colored, adopts that color. Colors never change
//! once set. A state is stable when no uncolored node has a colored
//! out-neighbor.
//!
//! Randomness is counter-based: the pick of node `v` in round `t` of a run
//! driven by stream `rng` is `rng.below(t, v, d+(v))`. Consequently the
//! fast frontier simulator, the reference [`step`], and replay of a profile
//! sampled with [`sample_profile`] all agree pick for pick.

mod chain;
mod process;
mod profile;
mod state;

pub use chain::chain_traversal_time;
pub use process::{
    default_round_cap, is_stable, round_cap, run, step, step_with_picks, ColorEvent, RunResult,
    Simulator,
};
pub use profile::{
    extended_sequence, final_color_via_es, read_profile, replay, sample_profile, write_profile,
    PickProfile,
};
pub use state::{read_state, write_state, Color, ColorState, Counts};
