//! Entry/exit coefficients of a designated state and the `δ < √2 β` test.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use super::rule::{State, TransitionRule};
use super::ModelError;

/// Tolerance used for strict comparisons between probabilities.
pub const COMPARE_TOL: f64 = 1e-12;

/// `a < b` with a margin: values within [`COMPARE_TOL`] count as equal.
#[inline]
pub fn strictly_less(a: f64, b: f64) -> bool {
    a < b - COMPARE_TOL
}

#[inline]
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= COMPARE_TOL
}

/// Entry and exit coefficients of a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coefficients {
    /// Minimum probability of choosing the state, over all patterns.
    pub beta: f64,
    /// Maximum probability of leaving the state, over patterns where the
    /// site already holds it.
    pub delta: f64,
    /// Minimum probability of choosing the state over patterns where the
    /// site does not hold it. This is what `β` becomes after slowing the
    /// dynamics down.
    pub beta_eff: f64,
}

pub fn beta_delta(rule: &TransitionRule, a: State) -> Result<Coefficients, ModelError> {
    let alphabet = rule.alphabet();
    if !alphabet.contains(a) {
        return Err(ModelError::StateOutOfRange {
            state: a,
            size: alphabet.size(),
        });
    }
    let mut beta = f64::INFINITY;
    let mut delta = f64::NEG_INFINITY;
    let mut beta_eff = f64::INFINITY;
    for (s0, s1) in alphabet.patterns() {
        let p = rule.prob(a, s0, s1);
        beta = beta.min(p);
        if s0 == a {
            delta = delta.max(1.0 - p);
        } else {
            beta_eff = beta_eff.min(p);
        }
    }
    Ok(Coefficients {
        beta,
        delta,
        beta_eff,
    })
}

/// Why a drift expression could not be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Degeneracy {
    ZeroDelta,
    ZeroBeta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub state: State,
    pub beta: f64,
    pub delta: f64,
    pub beta_eff: f64,
    /// `δ < √2 β` with the raw minimum.
    pub raw_holds: bool,
    /// `δ < √2 β_eff`.
    pub eff_holds: bool,
    /// Expected increment of the gap between the bounding walks at the raw
    /// coefficients. `None` when degenerate.
    pub drift_unscaled: Option<f64>,
    /// `-2 β_eff/δ + δ/β_eff`, the gap drift in the slow-time limit.
    pub drift_scaled: Option<f64>,
    pub raw_degeneracy: Option<Degeneracy>,
    pub eff_degeneracy: Option<Degeneracy>,
}

fn degeneracy(beta: f64, delta: f64) -> Option<Degeneracy> {
    if delta == 0.0 {
        Some(Degeneracy::ZeroDelta)
    } else if beta == 0.0 {
        Some(Degeneracy::ZeroBeta)
    } else {
        None
    }
}

/// `δ < √2 β`, with `δ = 0` holding iff `β > 0` and `β = 0` failing.
pub fn sqrt2_holds(beta: f64, delta: f64) -> bool {
    match degeneracy(beta, delta) {
        Some(Degeneracy::ZeroDelta) => beta > 0.0,
        Some(Degeneracy::ZeroBeta) => false,
        None => strictly_less(delta, SQRT_2 * beta),
    }
}

/// Sum of the expected gap increments of the walk pair before slowing down.
pub fn gap_drift(beta: f64, delta: f64) -> f64 {
    let s = beta + delta;
    -(beta + delta * delta) / (delta * s) + delta / (beta * s) - beta / (delta * s)
}

pub fn scaled_gap_drift(beta: f64, delta: f64) -> f64 {
    -2.0 * beta / delta + delta / beta
}

pub fn criterion(rule: &TransitionRule, a: State) -> Result<CriterionReport, ModelError> {
    let c = beta_delta(rule, a)?;
    Ok(report_from(a, c))
}

pub(crate) fn report_from(state: State, c: Coefficients) -> CriterionReport {
    let raw_degeneracy = degeneracy(c.beta, c.delta);
    let eff_degeneracy = degeneracy(c.beta_eff, c.delta);
    CriterionReport {
        state,
        beta: c.beta,
        delta: c.delta,
        beta_eff: c.beta_eff,
        raw_holds: sqrt2_holds(c.beta, c.delta),
        eff_holds: sqrt2_holds(c.beta_eff, c.delta),
        drift_unscaled: raw_degeneracy
            .is_none()
            .then(|| gap_drift(c.beta, c.delta)),
        drift_scaled: eff_degeneracy
            .is_none()
            .then(|| scaled_gap_drift(c.beta_eff, c.delta)),
        raw_degeneracy,
        eff_degeneracy,
    }
}
