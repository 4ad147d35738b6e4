//! Canonical coupling on a finite window.
//!
//! Sites `left..=right` update at the rings of their own rate-one clocks;
//! site `right + 1` is frozen. A ring at `j` with mark `U` sets `j` to the
//! state whose bucket (cumulative probabilities of the pattern
//! `(ζ(j), ζ(j+1))`) contains `U`. All trajectories read the same rings.

mod cone;
mod coupling;
mod events;
mod tail;

use thiserror::Error;

use crate::model::{ModelError, State};

pub use cone::{chernoff_4t, cone_chain, cone_sigma, cone_stats, ConeStats};
pub use coupling::{
    agreement_time, couple, evolve, AgreementTime, Buckets, Change, Configuration,
    CoupledTrajectories, Disagreement, Trajectory,
};
pub use events::{gen_events, Event, EventStream, SiteClock, Window};
pub use tail::{
    cone_window, pi_tail, replica_agreement, Sampler, TailEstimate, TailOptions,
    LOWER_BOUND_NOTE,
};

pub(crate) use events::{stream_rng, CONFIG_STREAM};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("window [{left}, {right}] must contain site 0")]
    BadWindow { left: i64, right: i64 },
    #[error("horizon {0} must be positive, finite and cover the requested time")]
    Horizon(f64),
    #[error("configurations do not share the event window and right boundary")]
    WindowMismatch,
    #[error("no configurations to evolve")]
    NoConfigurations,
    #[error("configuration length does not match its window")]
    ConfigurationLength,
    #[error("state {0} outside the alphabet")]
    State(State),
    #[error("time grid must be finite and nonnegative")]
    TimeGrid,
    #[error("cone chain needs site {needed}, outside the window")]
    WindowTooSmall { needed: i64 },
    #[error("{censored} of {replicas} replicas censored")]
    UnderResolved { censored: usize, replicas: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}
