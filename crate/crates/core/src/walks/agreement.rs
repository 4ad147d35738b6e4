//! Agreement sets: spans during which every coupled trajectory sits in the
//! designated state.
//!
//! A ring with mark `U < β` puts the designated state in every trajectory
//! (its bucket comes first and has width at least `β`). While the site
//! holds it, rings with `U < 1 - δ` keep it there. The set at a site is a
//! union of closed intervals from an opening ring to the first ring with
//! `U ≥ 1 - δ`.

use serde::Serialize;

use super::WalkError;
use crate::model::COMPARE_TOL;
use crate::sim::{Event, EventStream, SiteClock};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AgreementInterval {
    pub start: f64,
    /// Closing ring, or the scan horizon when none occurred.
    pub end: f64,
    pub open_index: usize,
    pub close_index: Option<usize>,
}

impl AgreementInterval {
    pub fn censored(&self) -> bool {
        self.close_index.is_none()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

pub(crate) fn check_order(beta: f64, delta: f64) -> Result<(), WalkError> {
    let ok = (0.0..=1.0).contains(&beta) && (0.0..=1.0).contains(&delta);
    if !ok || beta > 1.0 - delta + COMPARE_TOL {
        return Err(WalkError::ParameterOrder { beta, delta });
    }
    Ok(())
}

/// Scans one site's rings on `(0, horizon]`.
pub fn scan_site(events: &[Event], horizon: f64, beta: f64, delta: f64) -> Vec<AgreementInterval> {
    let kill = 1.0 - delta;
    let mut out = Vec::new();
    let mut open: Option<(f64, usize)> = None;
    for (k, e) in events.iter().enumerate().take_while(|(_, e)| e.time <= horizon) {
        match open {
            None if e.u < beta => open = Some((e.time, k)),
            Some((start, open_index)) if e.u >= kill => {
                out.push(AgreementInterval {
                    start,
                    end: e.time,
                    open_index,
                    close_index: Some(k),
                });
                open = None;
            }
            _ => {}
        }
    }
    if let Some((start, open_index)) = open {
        out.push(AgreementInterval {
            start,
            end: horizon,
            open_index,
            close_index: None,
        });
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct AgreementSets {
    pub beta: f64,
    pub delta: f64,
    pub horizon: f64,
    /// `(site, intervals)` for sites `0, -1, ..` of the window.
    pub sites: Vec<(i64, Vec<AgreementInterval>)>,
}

impl AgreementSets {
    pub fn site(&self, site: i64) -> Option<&[AgreementInterval]> {
        self.sites
            .iter()
            .find(|(j, _)| *j == site)
            .map(|(_, v)| v.as_slice())
    }
}

/// Agreement sets of every nonpositive site of the stream's window.
pub fn agreement_sets(
    events: &EventStream,
    beta: f64,
    delta: f64,
) -> Result<AgreementSets, WalkError> {
    check_order(beta, delta)?;
    let horizon = events.horizon();
    let sites = (events.window().left..=0)
        .rev()
        .map(|j| (j, scan_site(events.site_events(j), horizon, beta, delta)))
        .collect();
    Ok(AgreementSets {
        beta,
        delta,
        horizon,
        sites,
    })
}

/// `P(t ∈ A_j) = β/(β+δ) · (1 - e^{-(β+δ)t})`.
pub fn prob_in_a(t: f64, beta: f64, delta: f64) -> f64 {
    let s = beta + delta;
    if s == 0.0 {
        return 0.0;
    }
    beta / s * (-(-s * t).exp_m1())
}

/// Largest horizon a lazy site is extended to before giving up.
pub const MAX_HORIZON: f64 = 1e6;

/// Agreement set of one site, scanned further whenever a query needs it.
#[derive(Clone, Debug)]
pub struct LazySite {
    clock: SiteClock,
    beta: f64,
    delta: f64,
    horizon: f64,
    intervals: Vec<AgreementInterval>,
}

impl LazySite {
    pub fn new(clock: SiteClock, beta: f64, delta: f64) -> Self {
        LazySite {
            clock,
            beta,
            delta,
            horizon: 0.0,
            intervals: Vec::new(),
        }
    }

    pub fn site(&self) -> i64 {
        self.clock.site()
    }

    pub fn intervals(&self) -> &[AgreementInterval] {
        &self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn clock_mut(&mut self) -> &mut SiteClock {
        &mut self.clock
    }

    /// Scans at least up to `t`.
    pub fn cover(&mut self, t: f64) -> Result<(), WalkError> {
        if self.horizon >= t {
            return Ok(());
        }
        let target = t.max(2.0 * self.horizon).max(16.0);
        if target > MAX_HORIZON {
            return Err(WalkError::Unbounded {
                site: self.site(),
                time: t,
            });
        }
        self.clock.ensure_past(target);
        self.horizon = target;
        self.intervals = scan_site(self.clock.generated(), target, self.beta, self.delta);
        Ok(())
    }

    fn grow(&mut self) -> Result<(), WalkError> {
        self.cover(2.0 * self.horizon.max(8.0))
    }

    /// Interval containing `t`, if any.
    pub fn containing(&mut self, t: f64) -> Result<Option<AgreementInterval>, WalkError> {
        self.cover(t)?;
        let k = self.intervals.partition_point(|iv| iv.start <= t);
        Ok(k.checked_sub(1)
            .map(|i| self.intervals[i])
            .filter(|iv| iv.contains(t)))
    }

    /// Closing time of the interval containing `t`.
    pub fn end_of_containing(&mut self, t: f64) -> Result<Option<f64>, WalkError> {
        loop {
            match self.containing(t)? {
                None => return Ok(None),
                Some(iv) if !iv.censored() => return Ok(Some(iv.end)),
                Some(_) => self.grow()?,
            }
        }
    }

    /// Start of the first interval starting at or after `t`.
    pub fn next_start(&mut self, t: f64) -> Result<f64, WalkError> {
        self.cover(t)?;
        loop {
            let k = self.intervals.partition_point(|iv| iv.start < t);
            if let Some(iv) = self.intervals.get(k) {
                return Ok(iv.start);
            }
            self.grow()?;
        }
    }

    /// First ring at or after `t`.
    pub fn next_event(&mut self, t: f64) -> f64 {
        self.clock.first_at_or_after(t, false).time
    }
}
