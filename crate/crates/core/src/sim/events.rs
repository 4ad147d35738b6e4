//! Shared randomness of the canonical coupling.
//!
//! Every site owns an independent rate-one Poisson clock whose rings carry
//! a uniform mark. Site `j` draws from a ChaCha8 generator seeded with
//! `seed_from_u64(seed)` and switched to stream `zigzag(j)`, so a site's
//! events depend only on `(seed, j)`. Events are produced one at a time in
//! time order (an `Exp1` gap, then a uniform), which makes any longer
//! horizon an extension of a shorter one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::SimError;

/// Stream id reserved for sampling initial configurations.
pub(crate) const CONFIG_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub u: f64,
}

/// Inclusive range of sites `left..=right` with `left <= 0 <= right`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub left: i64,
    pub right: i64,
}

impl Window {
    pub fn new(left: i64, right: i64) -> Result<Self, SimError> {
        if left > 0 || right < 0 {
            return Err(SimError::BadWindow { left, right });
        }
        Ok(Window { left, right })
    }

    pub fn len(&self) -> usize {
        (self.right - self.left + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: i64) -> bool {
        (self.left..=self.right).contains(&site)
    }

    /// Position of `site` in per-site vectors.
    #[inline]
    pub fn index(&self, site: i64) -> usize {
        debug_assert!(self.contains(site));
        (site - self.left) as usize
    }

    #[inline]
    pub fn site(&self, index: usize) -> i64 {
        self.left + index as i64
    }

    pub fn sites(&self) -> impl DoubleEndedIterator<Item = i64> {
        self.left..=self.right
    }
}

fn site_stream(site: i64) -> u64 {
    ((site << 1) ^ (site >> 63)) as u64
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Lazily generated clock of one site.
#[derive(Clone, Debug)]
pub struct SiteClock {
    site: i64,
    rng: ChaCha8Rng,
    events: Vec<Event>,
}

impl SiteClock {
    pub fn new(seed: u64, site: i64) -> Self {
        SiteClock {
            site,
            rng: stream_rng(seed, site_stream(site)),
            events: Vec::new(),
        }
    }

    pub fn site(&self) -> i64 {
        self.site
    }

    fn push_next(&mut self) {
        let last = self.events.last().map_or(0.0, |e| e.time);
        loop {
            let gap: f64 = self.rng.sample(Exp1);
            let u: f64 = self.rng.random();
            let time = last + gap;
            if time > last {
                self.events.push(Event { time, u });
                return;
            }
        }
    }

    /// Generates events until one lies strictly after `t`.
    pub fn ensure_past(&mut self, t: f64) {
        while self.events.last().is_none_or(|e| e.time <= t) {
            self.push_next();
        }
    }

    /// The `k`-th event (0-based), generating as needed.
    pub fn event(&mut self, k: usize) -> Event {
        while self.events.len() <= k {
            self.push_next();
        }
        self.events[k]
    }

    /// Every event generated so far.
    pub fn generated(&self) -> &[Event] {
        &self.events
    }

    /// Generated events with `time <= t`; call [`SiteClock::ensure_past`] first.
    pub fn up_to(&self, t: f64) -> &[Event] {
        let k = self.events.partition_point(|e| e.time <= t);
        &self.events[..k]
    }

    /// First event with time `>= t` (or `> t` when `strict`).
    pub fn first_at_or_after(&mut self, t: f64, strict: bool) -> Event {
        self.ensure_past(t);
        let k = if strict {
            self.events.partition_point(|e| e.time <= t)
        } else {
            self.events.partition_point(|e| e.time < t)
        };
        self.events[k]
    }
}

/// Event times and marks for every site of a window up to a horizon.
#[derive(Clone, Debug)]
pub struct EventStream {
    seed: u64,
    window: Window,
    horizon: f64,
    clocks: Vec<SiteClock>,
}

/// Generates the clocks of every site of `window` on `(0, horizon]`.
pub fn gen_events(seed: u64, window: Window, horizon: f64) -> Result<EventStream, SimError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(SimError::Horizon(horizon));
    }
    let clocks = window
        .sites()
        .map(|j| {
            let mut c = SiteClock::new(seed, j);
            c.ensure_past(horizon);
            c
        })
        .collect();
    Ok(EventStream {
        seed,
        window,
        horizon,
        clocks,
    })
}

impl EventStream {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Events of `site` on `(0, horizon]`.
    pub fn site_events(&self, site: i64) -> &[Event] {
        self.clocks[self.window.index(site)].up_to(self.horizon)
    }

    /// First event of `site` strictly after `t`, if it lies within the
    /// generated range. Times beyond the horizon are visible up to the
    /// first one.
    pub(crate) fn next_after(&self, site: i64, t: f64) -> Option<Event> {
        let events = self.clocks[self.window.index(site)].generated();
        let k = events.partition_point(|e| e.time <= t);
        events.get(k).copied()
    }

    /// Grows the horizon; existing events are unchanged.
    pub fn extend(&mut self, horizon: f64) {
        if horizon > self.horizon {
            for c in &mut self.clocks {
                c.ensure_past(horizon);
            }
            self.horizon = horizon;
        }
    }

    pub fn total_events(&self) -> usize {
        self.window.sites().map(|j| self.site_events(j).len()).sum()
    }
}

/// Access to the events of a window, in per-site order.
pub(crate) trait EventSource {
    fn window(&self) -> Window;
    fn horizon(&self) -> f64;
    /// `k`-th event of the site at `index`, or `None` past the horizon.
    fn event(&mut self, index: usize, k: usize) -> Option<Event>;
}

impl EventSource for &EventStream {
    fn window(&self) -> Window {
        self.window
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn event(&mut self, index: usize, k: usize) -> Option<Event> {
        self.clocks[index]
            .generated()
            .get(k)
            .copied()
            .filter(|e| e.time <= self.horizon)
    }
}

/// Same events as [`gen_events`], generated only when first read.
pub(crate) struct LazyWindow {
    window: Window,
    horizon: f64,
    clocks: Vec<SiteClock>,
}

impl LazyWindow {
    pub fn new(seed: u64, window: Window, horizon: f64) -> Self {
        LazyWindow {
            window,
            horizon,
            clocks: window.sites().map(|j| SiteClock::new(seed, j)).collect(),
        }
    }
}

impl EventSource for LazyWindow {
    fn window(&self) -> Window {
        self.window
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn event(&mut self, index: usize, k: usize) -> Option<Event> {
        Some(self.clocks[index].event(k)).filter(|e| e.time <= self.horizon)
    }
}
