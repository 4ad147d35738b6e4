//! Canonical-coupling simulator for one-sided nearest-neighbor interacting
//! particle systems, with the long-lived-state ergodicity criterion.

pub mod harness;
pub mod model;
pub mod sim;
pub mod stats;
pub mod walks;
