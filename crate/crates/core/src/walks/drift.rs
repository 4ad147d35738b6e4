//! One-step increments of the walks at a large height.
//!
//! At height `T` a fresh site is in its agreement set with probability
//! close to `β/(β+δ)`. Inside, `Y` waits for the kill (`Exp(δ)`) and `X`
//! drops to the opening ring; outside, `Y` hops to the next ring and `X`
//! waits for the next opening (`Exp(β)`).

use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use super::agreement::{check_order, LazySite};
use super::WalkError;
use crate::sim::{stream_rng, SiteClock};
use crate::stats::{mean_se, Estimate};

const INTEGRAND_STREAM: u64 = u64::MAX - 1;

/// Largest `e^{-δT}` accepted by [`drift_estimate`].
pub const THRESHOLD_RESIDUAL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosedForm {
    /// `(β+δ²)/(δ(β+δ))`.
    pub drift_y: f64,
    /// `δ/(β(β+δ))`.
    pub drift_x_up: f64,
    /// `-β/(δ(β+δ))`.
    pub drift_x_down: f64,
    /// `drift_x_up + drift_x_down - drift_y`.
    pub drift_z: f64,
    /// `-2β/δ + δ/β`.
    pub drift_z_limit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftMc {
    pub threshold: f64,
    pub replicas: usize,
    pub seed: u64,
    pub drift_y: Estimate,
    /// `E[ΔX · 1(T ∉ A)]`.
    pub drift_x_up: Estimate,
    /// `E[ΔX · 1(T ∈ A)]`.
    pub drift_x_down: Estimate,
    pub drift_z: Estimate,
    /// `E[ΔY | T ∉ A]`.
    pub y_outside: Estimate,
    /// Down branch rebuilt from the last kill before `T` and the first
    /// opening after it.
    pub x_down_decomposition: Estimate,
    /// Replicas where the rebuilt down branch differs from the walk step.
    pub decomposition_mismatches: usize,
    /// Down branch from `x ~ Exp(β)`, `y ~ Exp(δ)`: `min(0, x - min(T, y))`.
    pub x_down_integrand: Estimate,
    /// `E|ΔX|` and `E|ΔX|²`.
    pub abs_moments: [Estimate; 2],
    /// `k!/min(β,δ)^k` for `k = 1, 2`.
    pub moment_bounds: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub beta: f64,
    pub delta: f64,
    pub closed: ClosedForm,
    pub mc: Option<DriftMc>,
}

fn check_positive(beta: f64, delta: f64) -> Result<(), WalkError> {
    check_order(beta, delta)?;
    if beta <= 0.0 || delta <= 0.0 {
        return Err(WalkError::Degenerate { beta, delta });
    }
    Ok(())
}

pub fn drift_closed_form(beta: f64, delta: f64) -> Result<DriftReport, WalkError> {
    check_positive(beta, delta)?;
    let s = beta + delta;
    let drift_y = (beta + delta * delta) / (delta * s);
    let drift_x_up = delta / (beta * s);
    let drift_x_down = -beta / (delta * s);
    Ok(DriftReport {
        beta,
        delta,
        closed: ClosedForm {
            drift_y,
            drift_x_up,
            drift_x_down,
            drift_z: drift_x_up + drift_x_down - drift_y,
            drift_z_limit: -2.0 * beta / delta + delta / beta,
        },
        mc: None,
    })
}

#[derive(Clone, Copy, Debug)]
struct Step {
    dy: f64,
    dx: f64,
    inside: bool,
    rebuilt_down: f64,
    integrand: f64,
}

fn one_step(beta: f64, delta: f64, t: f64, seed: u64) -> Result<Step, WalkError> {
    let mut site = LazySite::new(SiteClock::new(seed, 0), beta, delta);
    let (dy, dx, inside) = match site.containing(t)? {
        Some(iv) => {
            let end = site.end_of_containing(t)?.expect("contained");
            (end - t, iv.start - t, true)
        }
        None => {
            let hop = site.next_event(t) - t;
            (hop, site.next_start(t)? - t, false)
        }
    };

    let events = site.clock_mut().up_to(t);
    let kill = events.iter().rposition(|e| e.u >= 1.0 - delta);
    let after = kill.map_or(0, |k| k + 1);
    let rebuilt_down = events[after..]
        .iter()
        .find(|e| e.u < beta)
        .map_or(0.0, |e| e.time - t);

    let mut rng = stream_rng(seed, INTEGRAND_STREAM);
    let x: f64 = Exp::new(beta).expect("positive").sample(&mut rng);
    let y: f64 = Exp::new(delta).expect("positive").sample(&mut rng);
    let integrand = (x - t.min(y)).min(0.0);

    Ok(Step {
        dy,
        dx,
        inside,
        rebuilt_down,
        integrand,
    })
}

/// Monte Carlo increments at height `threshold`, one fresh site per
/// replica seeded `seed, seed + 1, ..`.
pub fn drift_estimate(
    beta: f64,
    delta: f64,
    threshold: f64,
    replicas: usize,
    seed: u64,
) -> Result<DriftReport, WalkError> {
    let mut report = drift_closed_form(beta, delta)?;
    let residual = (-delta * threshold).exp();
    if residual.is_nan() || residual >= THRESHOLD_RESIDUAL {
        return Err(WalkError::ThresholdTooLow { threshold, delta });
    }
    let steps = (0..replicas as u64)
        .into_par_iter()
        .map(|r| one_step(beta, delta, threshold, seed.wrapping_add(r)))
        .collect::<Result<Vec<_>, _>>()?;

    let down = |s: &Step| if s.inside { s.dx } else { 0.0 };
    let m = beta.min(delta);
    report.mc = Some(DriftMc {
        threshold,
        replicas,
        seed,
        drift_y: mean_se(steps.iter().map(|s| s.dy)),
        drift_x_up: mean_se(steps.iter().map(|s| if s.inside { 0.0 } else { s.dx })),
        drift_x_down: mean_se(steps.iter().map(down)),
        drift_z: mean_se(steps.iter().map(|s| s.dx - s.dy)),
        y_outside: mean_se(steps.iter().filter(|s| !s.inside).map(|s| s.dy)),
        x_down_decomposition: mean_se(steps.iter().map(|s| s.rebuilt_down)),
        decomposition_mismatches: steps.iter().filter(|s| s.rebuilt_down != down(s)).count(),
        x_down_integrand: mean_se(steps.iter().map(|s| s.integrand)),
        abs_moments: [
            mean_se(steps.iter().map(|s| s.dx.abs())),
            mean_se(steps.iter().map(|s| s.dx * s.dx)),
        ],
        moment_bounds: [1.0 / m, 2.0 / (m * m)],
    });
    Ok(report)
}

/// Fraction of replicas with `t ∈ A_0`, with its binomial standard error.
pub fn agreement_fraction(
    t: f64,
    beta: f64,
    delta: f64,
    replicas: usize,
    seed: u64,
) -> Result<Estimate, WalkError> {
    check_order(beta, delta)?;
    let hits = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut site = LazySite::new(SiteClock::new(seed.wrapping_add(r), 0), beta, delta);
            site.containing(t).map(|iv| iv.is_some())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean_se(hits.into_iter().map(|h| if h { 1.0 } else { 0.0 })))
}
