//! Agreement sets and the two walks that bound the disagreement region of
//! site 0, plus their one-step drifts.

mod agreement;
mod drift;
mod walk;

use thiserror::Error;

pub use agreement::{
    agreement_sets, prob_in_a, scan_site, AgreementInterval, AgreementSets, LazySite, MAX_HORIZON,
};
pub use drift::{
    agreement_fraction, drift_closed_form, drift_estimate, ClosedForm, DriftMc, DriftReport,
    THRESHOLD_RESIDUAL,
};
pub use walk::{
    containment_check, run_walks, ContainmentReport, Violation, WalkField, WalkOptions, WalkPath,
};

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("need 0 <= beta <= 1 - delta <= 1, got beta={beta}, delta={delta}")]
    ParameterOrder { beta: f64, delta: f64 },
    #[error("beta and delta must be positive, got beta={beta}, delta={delta}")]
    Degenerate { beta: f64, delta: f64 },
    #[error("site {site} needs its agreement set past time {time}")]
    Unbounded { site: i64, time: f64 },
    #[error("threshold {threshold} too low for delta={delta}")]
    ThresholdTooLow { threshold: f64, delta: f64 },
}
