//! The pair of walks that bounds the disagreement region.
//!
//! `X_n` is a time after which site `-n` agrees in every trajectory;
//! `Y_n` is a time before which no disagreement can have reached `-n`.
//! Both step one site to the left at a time, reading the agreement set of
//! the next site.

use serde::Serialize;

use super::agreement::{check_order, AgreementInterval, LazySite};
use super::WalkError;
use crate::model::gap_drift;
use crate::sim::{CoupledTrajectories, SiteClock};

/// Lazily generated agreement sets of sites `0, -1, -2, ..`.
///
/// Site clocks use the same derivation as [`crate::sim::gen_events`], so
/// a field and an event stream with the same seed see identical rings.
#[derive(Clone, Debug)]
pub struct WalkField {
    seed: u64,
    beta: f64,
    delta: f64,
    sites: Vec<LazySite>,
}

impl WalkField {
    pub fn new(seed: u64, beta: f64, delta: f64) -> Result<Self, WalkError> {
        check_order(beta, delta)?;
        if beta <= 0.0 || delta <= 0.0 {
            return Err(WalkError::Degenerate { beta, delta });
        }
        Ok(WalkField {
            seed,
            beta,
            delta,
            sites: Vec::new(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Agreement set of site `-n`.
    pub fn site(&mut self, n: usize) -> &mut LazySite {
        while self.sites.len() <= n {
            let j = -(self.sites.len() as i64);
            self.sites
                .push(LazySite::new(SiteClock::new(self.seed, j), self.beta, self.delta));
        }
        &mut self.sites[n]
    }

    /// Agreement intervals of sites `0..=-(n-1)` scanned up to `horizon`.
    pub fn snapshot(&mut self, n: usize, horizon: f64) -> Result<Vec<Vec<AgreementInterval>>, WalkError> {
        (0..n)
            .map(|k| {
                let s = self.site(k);
                s.cover(horizon)?;
                Ok(s.intervals()
                    .iter()
                    .filter(|iv| iv.start <= horizon)
                    .map(|iv| AgreementInterval {
                        end: iv.end.min(horizon),
                        ..*iv
                    })
                    .collect())
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WalkOptions {
    /// Largest number of points `X_0..X_{N}` recorded.
    pub max_points: usize,
    /// Time used for `σ`.
    pub threshold: f64,
}

impl WalkOptions {
    /// Cap of ten times a crude estimate of the crossing step: the mean
    /// initial gap `1/β` over the gap drift, never below 1000.
    pub fn default_for(beta: f64, delta: f64) -> Self {
        let drift = gap_drift(beta, delta);
        let guess = if drift < 0.0 {
            (10.0 / (beta * -drift)).ceil()
        } else {
            0.0
        };
        WalkOptions {
            max_points: (guess as usize).max(1000),
            threshold: 10.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkPath {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `X_n ∈ A_{-(n+1)}` for each step taken.
    pub x_in_a: Vec<bool>,
    /// `Y_n ∈ A_{-(n+1)}` for each step taken.
    pub y_in_a: Vec<bool>,
    /// First `n` with `X_n ≤ Y_n`.
    pub tau: Option<usize>,
    /// `max X_n` over the recorded points.
    pub m: f64,
    pub threshold: f64,
    /// `min{n ≥ 1 : s_n > threshold}`.
    pub sigma: usize,
    /// Cone chain `s_0, s_1, ..` covering every recorded point and `σ`.
    pub cone: Vec<f64>,
    /// Stopped at the point cap before crossing.
    pub censored: bool,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Runs `X_n` and `Y_n` until they cross or the point cap is reached.
pub fn run_walks(field: &mut WalkField, opts: &WalkOptions) -> Result<WalkPath, WalkError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut x_in_a = Vec::new();
    let mut y_in_a = Vec::new();
    let mut tau = None;

    if opts.max_points > 0 {
        x.push(field.site(0).next_start(0.0)?);
        y.push(0.0);
        let mut n = 0;
        loop {
            if x[n] <= y[n] {
                tau = Some(n);
                break;
            }
            if n + 1 >= opts.max_points {
                break;
            }
            let site = field.site(n + 1);
            let (xn, x_in) = match site.containing(x[n])? {
                Some(iv) => (iv.start, true),
                None => (site.next_start(x[n])?, false),
            };
            let (yn, y_in) = match site.end_of_containing(y[n])? {
                Some(end) => (end, true),
                None => (site.next_event(y[n]), false),
            };
            x.push(xn);
            y.push(yn);
            x_in_a.push(x_in);
            y_in_a.push(y_in);
            n += 1;
        }
    }

    let mut cone = vec![0.0];
    let mut sigma = None;
    let mut k = 0;
    while k + 1 < x.len() || sigma.is_none() {
        k += 1;
        let prev = cone[k - 1];
        let s = field.site(k).clock_mut().first_at_or_after(prev, true).time;
        cone.push(s);
        if sigma.is_none() && s > opts.threshold {
            sigma = Some(k);
        }
    }

    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(WalkPath {
        censored: tau.is_none(),
        x,
        y,
        x_in_a,
        y_in_a,
        tau,
        m,
        threshold: opts.threshold,
        sigma: sigma.expect("chain exceeds any finite threshold"),
        cone,
    })
}

/// A disagreement of the coupled run outside `[Y_n, X_n]` at site `-n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub site: i64,
    pub start: f64,
    pub end: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ContainmentReport {
    pub violations: Vec<Violation>,
    /// Disagreement intervals at sites beyond a censored walk.
    pub unchecked: usize,
    pub checked: usize,
}

/// Verifies every disagreement interval `[s, e)` at site `-n` satisfies
/// `Y_n ≤ s` and `e ≤ X_n`, i.e. its interior lies in `(Y_n, X_n]`.
///
/// Both runs must come from the same seed; the coupled configurations must
/// differ only at site 0. Sites past a crossed walk must be clean.
pub fn containment_check(coupled: &CoupledTrajectories, walk: &WalkPath) -> ContainmentReport {
    let mut report = ContainmentReport::default();
    for (site, d) in coupled.disagreements() {
        let bounds = if site > 0 {
            Some((f64::INFINITY, f64::NEG_INFINITY))
        } else {
            let n = (-site) as usize;
            if n < walk.len() {
                Some((walk.y[n], walk.x[n]))
            } else if walk.tau.is_some() {
                Some((f64::INFINITY, f64::NEG_INFINITY))
            } else {
                None
            }
        };
        match bounds {
            None => report.unchecked += 1,
            Some((lower, upper)) => {
                report.checked += 1;
                if !(lower <= d.start && d.end <= upper) {
                    report.violations.push(Violation {
                        site,
                        start: d.start,
                        end: d.end,
                        lower,
                        upper,
                    });
                }
            }
        }
    }
    report
}
