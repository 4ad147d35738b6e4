//! Evolution of one or many initial configurations on a shared event stream.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::Serialize;

use super::events::{EventSource, EventStream, Window};
use super::SimError;
use crate::model::{State, TransitionRule};

/// Cumulative bucket boundaries for every pattern.
///
/// The designated state takes the first bucket `[0, P(a|·))`; the others
/// follow in index order. The last state with positive probability absorbs
/// the rounding slack so the buckets cover `[0, 1)`.
#[derive(Clone, Debug)]
pub struct Buckets {
    n: usize,
    order: Vec<State>,
    // per pattern, n cumulative upper bounds
    bounds: Vec<f64>,
}

impl Buckets {
    pub fn new(rule: &TransitionRule, designated: State) -> Result<Self, SimError> {
        let alphabet = rule.alphabet();
        if !alphabet.contains(designated) {
            return Err(SimError::State(designated));
        }
        let n = alphabet.size();
        let order: Vec<State> = std::iter::once(designated)
            .chain(alphabet.states().filter(|&s| s != designated))
            .collect();
        let mut bounds = Vec::with_capacity(n * n * n);
        for (s0, s1) in alphabet.patterns() {
            let mut acc = 0.0;
            let start = bounds.len();
            for &a in &order {
                acc += rule.prob(a, s0, s1);
                bounds.push(acc);
            }
            let last_positive = order
                .iter()
                .rposition(|&a| rule.prob(a, s0, s1) > 0.0)
                .unwrap_or(n - 1);
            for b in &mut bounds[start + last_positive..start + n] {
                *b = 1.0;
            }
        }
        Ok(Buckets { n, order, bounds })
    }

    /// Boundaries for pattern `(s0, s1)`, aligned with [`Buckets::order`].
    pub fn bounds(&self, s0: State, s1: State) -> &[f64] {
        let start = (s0 as usize * self.n + s1 as usize) * self.n;
        &self.bounds[start..start + self.n]
    }

    pub fn order(&self) -> &[State] {
        &self.order
    }

    #[inline]
    pub fn pick(&self, s0: State, s1: State, u: f64) -> State {
        let b = self.bounds(s0, s1);
        let k = b.iter().position(|&x| u < x).unwrap_or(self.n - 1);
        self.order[k]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Configuration {
    pub window: Window,
    pub states: Vec<State>,
    /// State of the frozen site `right + 1`.
    pub right_boundary: State,
}

impl Configuration {
    pub fn constant(window: Window, state: State) -> Self {
        Configuration {
            window,
            states: vec![state; window.len()],
            right_boundary: state,
        }
    }

    pub fn state(&self, site: i64) -> State {
        self.states[self.window.index(site)]
    }

    pub fn with_site(mut self, site: i64, state: State) -> Self {
        let i = self.window.index(site);
        self.states[i] = state;
        self
    }

    fn check(&self, rule: &TransitionRule) -> Result<(), SimError> {
        let a = rule.alphabet();
        if self.states.len() != self.window.len() {
            return Err(SimError::ConfigurationLength);
        }
        if let Some(&s) = self
            .states
            .iter()
            .chain(std::iter::once(&self.right_boundary))
            .find(|&&s| !a.contains(s))
        {
            return Err(SimError::State(s));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Change {
    pub time: f64,
    pub site: i64,
    pub state: State,
}

/// Piecewise-constant path: the initial configuration plus every change.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial: Configuration,
    pub changes: Vec<Change>,
    pub horizon: f64,
}

impl Trajectory {
    /// State of `site` at time `t` (right-continuous).
    pub fn state_at(&self, t: f64, site: i64) -> State {
        self.changes
            .iter()
            .take_while(|c| c.time <= t)
            .filter(|c| c.site == site)
            .last()
            .map_or(self.initial.state(site), |c| c.state)
    }

    /// Configurations at each of the nondecreasing `times`.
    pub fn sample(&self, times: &[f64]) -> Vec<Vec<State>> {
        let w = self.initial.window;
        let mut cur = self.initial.states.clone();
        let mut changes = self.changes.iter().peekable();
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            while let Some(c) = changes.next_if(|c| c.time <= t) {
                cur[w.index(c.site)] = c.state;
            }
            out.push(cur.clone());
        }
        out
    }

    pub fn final_states(&self) -> Vec<State> {
        let w = self.initial.window;
        let mut cur = self.initial.states.clone();
        for c in &self.changes {
            cur[w.index(c.site)] = c.state;
        }
        cur
    }
}

/// Time span `[start, end)` on which some trajectories differ at a site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Disagreement {
    pub start: f64,
    pub end: f64,
    /// Still open at the horizon (`end == horizon`).
    pub open: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoupledTrajectories {
    pub trajectories: Vec<Trajectory>,
    /// Indexed like the window.
    pub disagreement: Vec<Vec<Disagreement>>,
    pub horizon: f64,
}

impl CoupledTrajectories {
    pub fn window(&self) -> Window {
        self.trajectories[0].initial.window
    }

    pub fn site_disagreement(&self, site: i64) -> &[Disagreement] {
        &self.disagreement[self.window().index(site)]
    }

    /// `(site, interval)` pairs in site order.
    pub fn disagreements(&self) -> impl Iterator<Item = (i64, &Disagreement)> {
        let w = self.window();
        self.disagreement
            .iter()
            .enumerate()
            .flat_map(move |(i, v)| v.iter().map(move |d| (w.site(i), d)))
    }
}

/// Outcome of [`agreement_time`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum AgreementTime {
    At(f64),
    Censored,
}

impl AgreementTime {
    pub fn exceeds(&self, t: f64) -> bool {
        match self {
            AgreementTime::At(x) => *x > t,
            AgreementTime::Censored => true,
        }
    }
}

/// Earliest time after which all trajectories agree on the whole window.
///
/// Censored when a disagreement is still open at the horizon or reached
/// the left edge of the window.
pub fn agreement_time(coupled: &CoupledTrajectories) -> AgreementTime {
    let w = coupled.window();
    if !coupled.site_disagreement(w.left).is_empty() {
        return AgreementTime::Censored;
    }
    let mut last = 0.0f64;
    for (_, d) in coupled.disagreements() {
        if d.open {
            return AgreementTime::Censored;
        }
        last = last.max(d.end);
    }
    AgreementTime::At(last)
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

#[derive(Default)]
pub(crate) struct SweepOptions {
    pub record_changes: bool,
    pub record_disagreement: bool,
    pub stop_when_coalesced: bool,
}

pub(crate) struct SweepOutcome {
    pub changes: Vec<Vec<Change>>,
    pub disagreement: Vec<Vec<Disagreement>>,
    /// Time the last disagreement vanished; `None` if some persisted.
    pub coalesced_at: Option<f64>,
    pub touched_left: bool,
}

/// One chronological pass over all events, updating every configuration.
///
/// `groups` partitions the configurations; a site disagrees when the
/// members of some group differ there.
pub(crate) fn sweep<S: EventSource>(
    buckets: &Buckets,
    configs: &[Configuration],
    groups: &[std::ops::Range<usize>],
    source: &mut S,
    opts: &SweepOptions,
) -> SweepOutcome {
    let window = source.window();
    let width = window.len();
    let mut states: Vec<Vec<State>> = configs.iter().map(|c| c.states.clone()).collect();
    let boundary: Vec<State> = configs.iter().map(|c| c.right_boundary).collect();

    let differs = |states: &[Vec<State>], i: usize| {
        groups
            .iter()
            .any(|g| states[g.clone()].iter().any(|s| s[i] != states[g.start][i]))
    };
    let mut diff: Vec<bool> = (0..width).map(|i| differs(&states, i)).collect();
    let mut n_diff = diff.iter().filter(|&&d| d).count();
    let mut touched_left = diff[0];
    let mut open_since: Vec<f64> = vec![0.0; width];
    let mut disagreement = vec![Vec::new(); if opts.record_disagreement { width } else { 0 }];
    let mut changes = vec![Vec::new(); if opts.record_changes { configs.len() } else { 0 }];
    let mut coalesced_at = 0.0;

    if n_diff == 0 && opts.stop_when_coalesced {
        return SweepOutcome {
            changes,
            disagreement,
            coalesced_at: Some(0.0),
            touched_left,
        };
    }

    let mut cursor = vec![0usize; width];
    let mut heap = BinaryHeap::with_capacity(width);
    for (i, c) in cursor.iter_mut().enumerate() {
        if let Some(e) = source.event(i, 0) {
            heap.push(Reverse(Key(e.time, i)));
            *c = 1;
        }
    }

    while let Some(Reverse(Key(t, i))) = heap.pop() {
        let k = cursor[i] - 1;
        let e = source.event(i, k).expect("queued event exists");
        if let Some(next) = source.event(i, k + 1) {
            heap.push(Reverse(Key(next.time, i)));
            cursor[i] += 1;
        }
        for (c, st) in states.iter_mut().enumerate() {
            let s0 = st[i];
            let s1 = if i + 1 < width { st[i + 1] } else { boundary[c] };
            let new = buckets.pick(s0, s1, e.u);
            if new != s0 {
                st[i] = new;
                if opts.record_changes {
                    changes[c].push(Change {
                        time: t,
                        site: window.site(i),
                        state: new,
                    });
                }
            }
        }
        let now = differs(&states, i);
        if now != diff[i] {
            diff[i] = now;
            if now {
                n_diff += 1;
                open_since[i] = t;
                touched_left |= i == 0;
            } else {
                n_diff -= 1;
                if opts.record_disagreement {
                    disagreement[i].push(Disagreement {
                        start: open_since[i],
                        end: t,
                        open: false,
                    });
                }
                if n_diff == 0 {
                    coalesced_at = t;
                    if opts.stop_when_coalesced {
                        break;
                    }
                }
            }
        }
    }

    let horizon = source.horizon();
    if opts.record_disagreement {
        for i in (0..width).filter(|&i| diff[i]) {
            disagreement[i].push(Disagreement {
                start: open_since[i],
                end: horizon,
                open: true,
            });
        }
    }
    SweepOutcome {
        changes,
        disagreement,
        coalesced_at: (n_diff == 0).then_some(coalesced_at),
        touched_left,
    }
}

/// Evolves one configuration; `designated` takes the first bucket.
pub fn evolve(
    rule: &TransitionRule,
    designated: State,
    config: &Configuration,
    events: &EventStream,
) -> Result<Trajectory, SimError> {
    let mut coupled = couple(rule, designated, std::slice::from_ref(config), events)?;
    Ok(coupled.trajectories.pop().expect("one trajectory"))
}

/// Evolves every configuration against the same events.
pub fn couple(
    rule: &TransitionRule,
    designated: State,
    configs: &[Configuration],
    events: &EventStream,
) -> Result<CoupledTrajectories, SimError> {
    let window = events.window();
    let first = configs.first().ok_or(SimError::NoConfigurations)?;
    for c in configs {
        c.check(rule)?;
        if c.window != window || c.right_boundary != first.right_boundary {
            return Err(SimError::WindowMismatch);
        }
    }
    let buckets = Buckets::new(rule, designated)?;
    let opts = SweepOptions {
        record_changes: true,
        record_disagreement: true,
        stop_when_coalesced: false,
    };
    let mut source = events;
    let out = sweep(&buckets, configs, std::slice::from_ref(&(0..configs.len())), &mut source, &opts);
    let horizon = events.horizon();
    let trajectories = configs
        .iter()
        .zip(out.changes)
        .map(|(c, changes)| Trajectory {
            initial: c.clone(),
            changes,
            horizon,
        })
        .collect();
    Ok(CoupledTrajectories {
        trajectories,
        disagreement: out.disagreement,
        horizon,
    })
}
