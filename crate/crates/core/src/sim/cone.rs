//! Leftward reach of the dependence cone of site 0.
//!
//! With one-sided nearest-neighbor interactions, information from site 0
//! reaches site `-k` at the first ring of `-k` after it reached `-(k-1)`.
//! The chain `s_0 = 0, s_k = first ring of -k after s_{k-1}` therefore
//! advances by i.i.d. `Exp(1)` steps.

use rayon::prelude::*;
use serde::Serialize;

use super::events::{EventStream, SiteClock};
use super::SimError;
use crate::stats::{mean_se, Estimate};

/// `σ = min{n ≥ 1 : s_n > t}`.
pub fn cone_sigma(events: &EventStream, t: f64) -> Result<usize, SimError> {
    if t > events.horizon() {
        return Err(SimError::Horizon(t));
    }
    let window = events.window();
    let mut s = 0.0;
    let mut n = 0usize;
    loop {
        n += 1;
        let site = -(n as i64);
        if !window.contains(site) {
            return Err(SimError::WindowTooSmall { needed: site });
        }
        match events.next_after(site, s) {
            Some(e) if e.time <= t => s = e.time,
            _ => return Ok(n),
        }
    }
}

/// The chain `s_0..s_n` until it first exceeds `t`, from lazily generated
/// clocks of sites `0, -1, -2, ..`.
pub fn cone_chain(seed: u64, t: f64) -> Vec<f64> {
    let mut chain = vec![0.0];
    let mut s = 0.0;
    let mut k = 0i64;
    while s <= t {
        k += 1;
        let mut clock = SiteClock::new(seed, -k);
        s = clock.first_at_or_after(s, true).time;
        chain.push(s);
    }
    chain
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeStats {
    pub t: f64,
    pub replicas: usize,
    /// Mean of `σ - 1`.
    pub reach: Estimate,
    /// Fraction of replicas with `σ - 1 > 4t`.
    pub exceed_4t: f64,
    /// Poisson Chernoff bound `exp(-2t(3 ln 3 - 3))` on that fraction.
    pub chernoff: f64,
    pub sigmas: Vec<usize>,
}

pub fn chernoff_4t(t: f64) -> f64 {
    (-2.0 * t * (3.0 * 3f64.ln() - 3.0)).exp()
}

/// Statistics of `σ` over replicas seeded `seed, seed + 1, ..`.
pub fn cone_stats(t: f64, replicas: usize, seed: u64) -> ConeStats {
    let sigmas: Vec<usize> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| cone_chain(seed.wrapping_add(r), t).len() - 1)
        .collect();
    let reach = mean_se(sigmas.iter().map(|&s| (s - 1) as f64));
    let exceed = sigmas.iter().filter(|&&s| (s - 1) as f64 > 4.0 * t).count();
    ConeStats {
        t,
        replicas,
        reach,
        exceed_4t: if replicas == 0 {
            f64::NAN
        } else {
            exceed as f64 / replicas as f64
        },
        chernoff: chernoff_4t(t),
        sigmas,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::events::{gen_events, Window};

    #[test]
    fn zero_time_gives_one() {
        let ev = gen_events(1, Window::new(-5, 0).unwrap(), 1.0).unwrap();
        assert_eq!(cone_sigma(&ev, 0.0).unwrap(), 1);
    }

    #[test]
    fn stream_and_lazy_chain_agree() {
        let w = Window::new(-80, 0).unwrap();
        for seed in 0..30 {
            let ev = gen_events(seed, w, 12.0).unwrap();
            let sigma = cone_sigma(&ev, 10.0).unwrap();
            assert_eq!(cone_chain(seed, 10.0).len() - 1, sigma);
        }
    }

    #[test]
    fn small_window_errors() {
        let ev = gen_events(1, Window::new(-2, 0).unwrap(), 50.0).unwrap();
        assert!(matches!(
            cone_sigma(&ev, 50.0),
            Err(SimError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn chernoff_value() {
        assert!((chernoff_4t(5.0) - (-2.958_368_660_043_29f64).exp()).abs() < 1e-9);
    }
}
