//! Monte Carlo tail of the agreement time of site 0.
//!
//! Every replica couples, on one event stream, several groups of initial
//! configurations; the members of a group differ only at site 0. The
//! replica's agreement time is the time after which every group has
//! coalesced. Sampling backgrounds only explores part of the supremum over
//! all pairs, so the estimate is a lower bound on the tail of `π_0`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::coupling::{sweep, AgreementTime, Buckets, Configuration, SweepOptions};
use super::events::{stream_rng, LazyWindow, Window, CONFIG_STREAM};
use super::SimError;
use crate::model::{State, TransitionRule};
use crate::stats::wilson;

pub const LOWER_BOUND_NOTE: &str =
    "sampled initial pairs: lower bound on the tail of the supremum over all pairs";

/// Backgrounds coupled in every replica.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sampler {
    /// Constant background for every state.
    pub constants: bool,
    /// Number of i.i.d. uniform product backgrounds.
    pub random: usize,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            constants: true,
            random: 1,
        }
    }
}

impl Sampler {
    /// Initial configurations, grouped by background; each group lists the
    /// background with site 0 set to every state.
    pub fn draw<R: Rng>(
        &self,
        rng: &mut R,
        window: Window,
        alphabet_size: usize,
    ) -> Vec<Vec<Configuration>> {
        let mut backgrounds = Vec::new();
        if self.constants {
            for s in 0..alphabet_size {
                backgrounds.push(Configuration::constant(window, s as State));
            }
        }
        for _ in 0..self.random {
            let states = (0..window.len())
                .map(|_| rng.random_range(0..alphabet_size) as State)
                .collect();
            let right_boundary = rng.random_range(0..alphabet_size) as State;
            backgrounds.push(Configuration {
                window,
                states,
                right_boundary,
            });
        }
        backgrounds
            .into_iter()
            .map(|bg| {
                (0..alphabet_size)
                    .map(|s| bg.clone().with_site(0, s as State))
                    .collect()
            })
            .collect()
    }
}

/// Window in which the dependence cone of site 0 stays with high
/// probability up to `horizon`: `±ceil(horizon + 4 sqrt(horizon))`.
pub fn cone_window(horizon: f64) -> Window {
    let reach = (horizon + 4.0 * horizon.sqrt()).ceil() as i64;
    Window {
        left: -reach.max(1),
        right: reach.max(1),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailEstimate {
    pub t_grid: Vec<f64>,
    /// `P̂(π_0 > t)` per grid point.
    pub survival: Vec<f64>,
    /// 95% Wilson interval per grid point.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `t · P̂(π_0 > t)`.
    pub scaled: Vec<f64>,
    pub replicas: usize,
    /// Replicas whose disagreement reached the left edge of the window.
    pub censored: usize,
    /// Replicas still disagreeing at the horizon; they count as `π_0 > t`
    /// for every grid time.
    pub persisting: usize,
    pub window: Window,
    pub horizon: f64,
    pub samples: Vec<AgreementTime>,
    pub note: &'static str,
}

#[derive(Clone, Debug)]
pub struct TailOptions {
    pub designated: State,
    pub sampler: Sampler,
    /// Defaults to [`cone_window`] of the largest grid time.
    pub window: Option<Window>,
    /// Largest fraction of replicas reaching the left edge before the
    /// estimate is rejected.
    pub max_censored: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            designated: 0,
            sampler: Sampler::default(),
            window: None,
            max_censored: 0.01,
        }
    }
}

/// Agreement time of one replica, with early exit at coalescence.
pub fn replica_agreement(
    rule: &TransitionRule,
    buckets: &Buckets,
    sampler: &Sampler,
    window: Window,
    horizon: f64,
    seed: u64,
) -> AgreementTime {
    replica_outcome(rule, buckets, sampler, window, horizon, seed).0
}

/// Agreement time and whether disagreement reached the left edge.
fn replica_outcome(
    rule: &TransitionRule,
    buckets: &Buckets,
    sampler: &Sampler,
    window: Window,
    horizon: f64,
    seed: u64,
) -> (AgreementTime, bool) {
    let mut rng = stream_rng(seed, CONFIG_STREAM);
    let groups = sampler.draw(&mut rng, window, rule.alphabet().size());
    let mut ranges = Vec::with_capacity(groups.len());
    let mut configs = Vec::new();
    for g in groups {
        let start = configs.len();
        configs.extend(g);
        ranges.push(start..configs.len());
    }
    let mut source = LazyWindow::new(seed, window, horizon);
    let opts = SweepOptions {
        stop_when_coalesced: true,
        ..SweepOptions::default()
    };
    let out = sweep(buckets, &configs, &ranges, &mut source, &opts);
    let time = match out.coalesced_at {
        Some(t) if !out.touched_left => AgreementTime::At(t),
        _ => AgreementTime::Censored,
    };
    (time, out.touched_left)
}

/// Estimates `P(π_0 > t)` on `t_grid` from `replicas` runs seeded
/// `seed, seed + 1, ..`.
pub fn pi_tail(
    rule: &TransitionRule,
    t_grid: &[f64],
    replicas: usize,
    seed: u64,
    opts: &TailOptions,
) -> Result<TailEstimate, SimError> {
    if t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(SimError::TimeGrid);
    }
    let horizon = t_grid.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let window = opts.window.unwrap_or_else(|| cone_window(horizon));
    let buckets = Buckets::new(rule, opts.designated)?;
    let outcomes: Vec<(AgreementTime, bool)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            replica_outcome(
                rule,
                &buckets,
                &opts.sampler,
                window,
                horizon,
                seed.wrapping_add(r),
            )
        })
        .collect();
    let censored = outcomes.iter().filter(|o| o.1).count();
    let samples: Vec<AgreementTime> = outcomes.into_iter().map(|o| o.0).collect();
    let persisting = samples
        .iter()
        .filter(|s| matches!(s, AgreementTime::Censored))
        .count()
        - censored;
    if replicas > 0 && censored as f64 > opts.max_censored * replicas as f64 {
        return Err(SimError::UnderResolved { censored, replicas });
    }
    let mut survival = Vec::with_capacity(t_grid.len());
    let mut lower = Vec::with_capacity(t_grid.len());
    let mut upper = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let k = samples.iter().filter(|s| s.exceeds(t)).count();
        if replicas == 0 {
            survival.push(f64::NAN);
            lower.push(f64::NAN);
            upper.push(f64::NAN);
        } else {
            let (lo, hi) = wilson(k, replicas, 1.959_963_984_540_054);
            survival.push(k as f64 / replicas as f64);
            lower.push(lo);
            upper.push(hi);
        }
    }
    let scaled = t_grid.iter().zip(&survival).map(|(t, p)| t * p).collect();
    Ok(TailEstimate {
        t_grid: t_grid.to_vec(),
        survival,
        lower,
        upper,
        scaled,
        replicas,
        censored,
        persisting,
        window,
        horizon,
        samples,
        note: LOWER_BOUND_NOTE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimpleParams;
    use crate::sim::coupling::{agreement_time, couple};
    use crate::sim::events::gen_events;

    #[test]
    fn empty_run() {
        let r = SimpleParams::new(0.5, 0.5, 0.5, 0.5).unwrap().to_rule().unwrap();
        let est = pi_tail(&r, &[1.0, 2.0], 0, 0, &TailOptions::default()).unwrap();
        assert_eq!(est.replicas, 0);
        assert!(est.samples.is_empty());
    }

    #[test]
    fn sampler_groups_differ_only_at_origin() {
        let w = Window::new(-5, 5).unwrap();
        let mut rng = stream_rng(1, CONFIG_STREAM);
        let groups = Sampler::default().draw(&mut rng, w, 2);
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[0][0], Configuration::constant(w, 0));
        assert_eq!(groups[1][1], Configuration::constant(w, 1));
        for g in &groups {
            assert_eq!(g.len(), 2);
            for j in w.sites().filter(|&j| j != 0) {
                assert_eq!(g[0].state(j), g[1].state(j));
            }
            assert_ne!(g[0].state(0), g[1].state(0));
        }
    }

    #[test]
    fn fast_path_matches_full_coupling() {
        let rule = SimpleParams::new(0.1, 0.8, 0.2, 0.3).unwrap().to_rule().unwrap();
        let w = Window::new(-30, 30).unwrap();
        let buckets = Buckets::new(&rule, 0).unwrap();
        let sampler = Sampler {
            constants: false,
            random: 1,
        };
        for seed in 0..40 {
            let fast = replica_agreement(&rule, &buckets, &sampler, w, 25.0, seed);
            let mut rng = stream_rng(seed, CONFIG_STREAM);
            let group = sampler.draw(&mut rng, w, 2).remove(0);
            let ev = gen_events(seed, w, 25.0).unwrap();
            let full = agreement_time(&couple(&rule, 0, &group, &ev).unwrap());
            assert_eq!(fast, full, "seed {seed}");
        }
    }

    #[test]
    fn disagreement_alive_at_horizon_is_not_censoring() {
        let r = SimpleParams::new(0.4, 0.4, 0.4, 0.4).unwrap().to_rule().unwrap();
        let est = pi_tail(&r, &[1.0, 3.0], 2000, 5, &TailOptions::default()).unwrap();
        assert_eq!(est.censored, 0);
        assert!(est.persisting > 0);
        assert_eq!(est.survival[1], est.persisting as f64 / 2000.0);
    }

    #[test]
    fn window_covers_cone() {
        let w = cone_window(200.0);
        assert!(w.left as f64 <= -(200.0 + 4.0 * 200f64.sqrt()));
    }
}
