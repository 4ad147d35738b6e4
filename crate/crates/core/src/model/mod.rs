//! Transition rules, the long-lived-state criterion and the region map of
//! two-state rules.

mod criterion;
mod region;
mod rule;

use thiserror::Error;

pub use criterion::{
    approx_eq, beta_delta, criterion, gap_drift, scaled_gap_drift, sqrt2_holds, strictly_less,
    Coefficients, CriterionReport, Degeneracy, COMPARE_TOL,
};
pub use region::{
    classify, classify_simple, on_east_line, reduce_to_face, Face, PriorClause, Reduction,
    RegionClass,
};
pub use rule::{
    Alphabet, SimpleParams, State, TransitionRule, ValidationReport, MAX_ALPHABET,
    NORMALIZATION_TOL,
};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("alphabet size {0} outside 2..=16")]
    AlphabetSize(usize),
    #[error("transition table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("malformed rule at pattern {pattern:?}: {reason}")]
    MalformedRule {
        pattern: (State, State),
        reason: String,
    },
    #[error("{name} = {value} is not a probability")]
    Probability { name: &'static str, value: f64 },
    #[error("time-scale factor {0} outside (0, 1]")]
    TimeScale(f64),
    #[error("state {state} outside alphabet of size {size}")]
    StateOutOfRange { state: State, size: usize },
    #[error("not a permutation of the alphabet")]
    Permutation,
    #[error("expected a two-state rule, got alphabet size {0}")]
    NotBinary(usize),
    #[error("the identity rule lies on no face")]
    IdentityRule,
}
