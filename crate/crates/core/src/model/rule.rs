//! Transition rules for one-sided nearest-neighbor dynamics.
//!
//! A rule assigns to every neighborhood pattern `(s0, s1) = (ζ(j), ζ(j+1))`
//! a probability vector over the alphabet: the law of the new state at `j`
//! when its clock rings.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Largest alphabet handled by exhaustive pattern enumeration.
pub const MAX_ALPHABET: usize = 16;

/// Absolute tolerance on the normalization of probability vectors.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Site state. Always an index into the alphabet.
pub type State = u8;

/// A finite alphabet `{0, .., size-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self, ModelError> {
        if !(2..=MAX_ALPHABET).contains(&size) {
            return Err(ModelError::AlphabetSize(size));
        }
        Ok(Alphabet { size })
    }

    pub const fn binary() -> Self {
        Alphabet { size: 2 }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, s: State) -> bool {
        (s as usize) < self.size
    }

    pub fn states(&self) -> impl Iterator<Item = State> {
        (0..self.size).map(|s| s as State)
    }

    /// All `n²` neighborhood patterns in lexicographic order.
    pub fn patterns(&self) -> impl Iterator<Item = (State, State)> {
        let n = self.size;
        (0..n * n).map(move |i| ((i / n) as State, (i % n) as State))
    }
}

/// Homogeneous one-sided nearest-neighbor transition rule `P(a | s0 s1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionRule {
    alphabet: Alphabet,
    // (s0 * n + s1) * n + a
    table: Vec<f64>,
}

impl TransitionRule {
    /// Builds a rule from a closure evaluated on every `(s0, s1, a)`.
    ///
    /// The result is checked with [`TransitionRule::validate`].
    pub fn from_fn<F>(alphabet: Alphabet, mut prob: F) -> Result<Self, ModelError>
    where
        F: FnMut(State, State, State) -> f64,
    {
        let n = alphabet.size();
        let mut table = Vec::with_capacity(n * n * n);
        for (s0, s1) in alphabet.patterns() {
            for a in alphabet.states() {
                table.push(prob(s0, s1, a));
            }
        }
        Self::from_table(alphabet, table)
    }

    /// Builds a rule from a flat table indexed `(s0 * n + s1) * n + a`.
    pub fn from_table(alphabet: Alphabet, table: Vec<f64>) -> Result<Self, ModelError> {
        let n = alphabet.size();
        if table.len() != n * n * n {
            return Err(ModelError::TableSize {
                expected: n * n * n,
                got: table.len(),
            });
        }
        let rule = TransitionRule { alphabet, table };
        rule.validate()?;
        Ok(rule)
    }

    /// The rule that never changes a site.
    pub fn identity(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        let mut table = vec![0.0; n * n * n];
        for (s0, s1) in alphabet.patterns() {
            table[(s0 as usize * n + s1 as usize) * n + s0 as usize] = 1.0;
        }
        TransitionRule { alphabet, table }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    #[inline]
    pub fn prob(&self, a: State, s0: State, s1: State) -> f64 {
        let n = self.alphabet.size();
        self.table[(s0 as usize * n + s1 as usize) * n + a as usize]
    }

    /// Probability vector over new states for the pattern `(s0, s1)`.
    pub fn row(&self, s0: State, s1: State) -> &[f64] {
        let n = self.alphabet.size();
        let start = (s0 as usize * n + s1 as usize) * n;
        &self.table[start..start + n]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Checks every row is a probability vector and reports positive rates.
    ///
    /// Rules without positive rates (the East model, deterministic rules) are
    /// valid; only malformed rows are rejected.
    pub fn validate(&self) -> Result<ValidationReport, ModelError> {
        for (s0, s1) in self.alphabet.patterns() {
            let row = self.row(s0, s1);
            if let Some((a, &p)) = row
                .iter()
                .enumerate()
                .find(|(_, p)| !(0.0..=1.0).contains(*p) || !p.is_finite())
            {
                return Err(ModelError::MalformedRule {
                    pattern: (s0, s1),
                    reason: format!("P({a}|{s0}{s1}) = {p} outside [0, 1]"),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(ModelError::MalformedRule {
                    pattern: (s0, s1),
                    reason: format!("row sums to {sum}"),
                });
            }
        }
        let positive_rates = self
            .alphabet
            .patterns()
            .all(|(s0, s1)| self.prob(s0, s0, s1) < 1.0);
        Ok(ValidationReport { positive_rates })
    }

    /// True when `P(· | s0 s1)` does not depend on the pattern.
    pub fn is_neighbor_blind(&self) -> bool {
        let first = self.row(0, 0);
        self.alphabet
            .patterns()
            .all(|(s0, s1)| self.row(s0, s1) == first)
    }

    /// `P^λ = (1-λ) I + λ P`, the same dynamics slowed down by `λ`.
    pub fn time_scale(&self, lambda: f64) -> Result<Self, ModelError> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(ModelError::TimeScale(lambda));
        }
        let n = self.alphabet.size();
        let mut table = self.table.clone();
        for (s0, s1) in self.alphabet.patterns() {
            for a in self.alphabet.states() {
                let idx = (s0 as usize * n + s1 as usize) * n + a as usize;
                let keep = if a == s0 { 1.0 - lambda } else { 0.0 };
                table[idx] = lambda * self.table[idx] + keep;
            }
        }
        Ok(TransitionRule {
            alphabet: self.alphabet,
            table,
        })
    }

    /// Relabels states: state `s` of `self` becomes state `perm[s]`.
    pub fn relabel(&self, perm: &[State]) -> Result<Self, ModelError> {
        let n = self.alphabet.size();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| !self.alphabet.contains(p) || std::mem::replace(&mut seen[p as usize], true))
        {
            return Err(ModelError::Permutation);
        }
        let mut table = vec![0.0; n * n * n];
        for (s0, s1) in self.alphabet.patterns() {
            for a in self.alphabet.states() {
                let (t0, t1, ta) = (perm[s0 as usize], perm[s1 as usize], perm[a as usize]);
                table[(t0 as usize * n + t1 as usize) * n + ta as usize] = self.prob(a, s0, s1);
            }
        }
        Ok(TransitionRule {
            alphabet: self.alphabet,
            table,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Every update can leave the current state with positive probability.
    pub positive_rates: bool,
}

/// The four parameters of a two-state rule: the probability of choosing
/// state 1 given the pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleParams {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl SimpleParams {
    pub fn new(p11: f64, p10: f64, p01: f64, p00: f64) -> Result<Self, ModelError> {
        let params = SimpleParams { p11, p10, p01, p00 };
        for (name, p) in params.named() {
            if !(0.0..=1.0).contains(&p) {
                return Err(ModelError::Probability { name, value: p });
            }
        }
        Ok(params)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p11, self.p10, self.p01, self.p00]
    }

    fn named(&self) -> [(&'static str, f64); 4] {
        [
            ("p11", self.p11),
            ("p10", self.p10),
            ("p01", self.p01),
            ("p00", self.p00),
        ]
    }

    /// `P(1 | s0 s1)`.
    pub fn p1(&self, s0: State, s1: State) -> f64 {
        match (s0, s1) {
            (1, 1) => self.p11,
            (1, 0) => self.p10,
            (0, 1) => self.p01,
            _ => self.p00,
        }
    }

    pub fn to_rule(&self) -> Result<TransitionRule, ModelError> {
        TransitionRule::from_fn(Alphabet::binary(), |s0, s1, a| {
            let p1 = self.p1(s0, s1);
            if a == 1 {
                p1
            } else {
                1.0 - p1
            }
        })
    }

    pub fn from_rule(rule: &TransitionRule) -> Result<Self, ModelError> {
        if rule.alphabet().size() != 2 {
            return Err(ModelError::NotBinary(rule.alphabet().size()));
        }
        Ok(SimpleParams {
            p11: rule.prob(1, 1, 1),
            p10: rule.prob(1, 1, 0),
            p01: rule.prob(1, 0, 1),
            p00: rule.prob(1, 0, 0),
        })
    }

    /// Exchanges the roles of states 0 and 1.
    pub fn swap_states(&self) -> Self {
        SimpleParams {
            p11: 1.0 - self.p00,
            p10: 1.0 - self.p01,
            p01: 1.0 - self.p10,
            p00: 1.0 - self.p11,
        }
    }

    pub fn time_scale(&self, lambda: f64) -> Result<Self, ModelError> {
        Self::from_rule(&self.to_rule()?.time_scale(lambda)?)
    }

    pub fn positive_rates(&self) -> bool {
        self.p11 < 1.0 && self.p10 < 1.0 && self.p01 > 0.0 && self.p00 > 0.0
    }
}

impl fmt::Display for SimpleParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(p11, p10, p01, p00) = ({}, {}, {}, {})",
            self.p11, self.p10, self.p01, self.p00
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> SimpleParams {
        SimpleParams::new(0.0, 0.9, 0.02, 0.02).unwrap()
    }

    #[test]
    fn wall_rule_has_positive_rates() {
        let report = fig2().to_rule().unwrap().validate().unwrap();
        assert!(report.positive_rates);
    }

    #[test]
    fn east_rule_is_valid_without_positive_rates() {
        let east = SimpleParams::new(0.3, 1.0, 0.3, 0.0).unwrap();
        let report = east.to_rule().unwrap().validate().unwrap();
        assert!(!report.positive_rates);
    }

    #[test]
    fn unnormalized_row_is_malformed() {
        let alphabet = Alphabet::binary();
        let err = TransitionRule::from_fn(alphabet, |s0, s1, a| {
            if (s0, s1, a) == (0, 1, 0) {
                0.4
            } else {
                0.5
            }
        })
        .unwrap_err();
        assert!(matches!(err, ModelError::MalformedRule { pattern: (0, 1), .. }));
    }

    #[test]
    fn out_of_range_entry_is_malformed() {
        let err = TransitionRule::from_table(
            Alphabet::binary(),
            vec![1.5, -0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::MalformedRule { .. }));
    }

    #[test]
    fn alphabet_bounds() {
        assert!(Alphabet::new(1).is_err());
        assert!(Alphabet::new(17).is_err());
        assert_eq!(Alphabet::new(16).unwrap().patterns().count(), 256);
    }

    #[test]
    fn simple_params_round_trip() {
        let p = SimpleParams::new(0.1, 0.2, 0.3, 0.4).unwrap();
        assert_eq!(SimpleParams::from_rule(&p.to_rule().unwrap()).unwrap(), p);
        assert!(SimpleParams::new(0.0, 0.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn half_time_scale_of_wall_rule() {
        let scaled = fig2().time_scale(0.5).unwrap();
        let expected = [0.5, 0.95, 0.01, 0.01];
        for (got, want) in scaled.as_array().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn unit_time_scale_is_identity() {
        let rule = fig2().to_rule().unwrap();
        assert_eq!(rule.time_scale(1.0).unwrap(), rule);
        assert!(rule.time_scale(0.0).is_err());
        assert!(rule.time_scale(1.5).is_err());
    }

    #[test]
    fn identity_rule_has_no_positive_rates() {
        let id = TransitionRule::identity(Alphabet::new(3).unwrap());
        assert!(!id.validate().unwrap().positive_rates);
    }

    #[test]
    fn swap_matches_relabeling() {
        let p = fig2();
        let swapped = p.swap_states();
        assert_eq!(swapped.as_array(), [0.98, 0.98, 1.0 - 0.9, 1.0]);
        let relabeled = p.to_rule().unwrap().relabel(&[1, 0]).unwrap();
        let from_swap = swapped.to_rule().unwrap();
        for (x, y) in relabeled.table().iter().zip(from_swap.table()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn relabel_rejects_non_permutation() {
        let rule = fig2().to_rule().unwrap();
        assert!(rule.relabel(&[0, 0]).is_err());
        assert!(rule.relabel(&[0]).is_err());
    }

    #[test]
    fn neighbor_blind_detection() {
        let blind = SimpleParams::new(0.3, 0.3, 0.3, 0.3).unwrap().to_rule().unwrap();
        assert!(blind.is_neighbor_blind());
        assert!(!fig2().to_rule().unwrap().is_neighbor_blind());
    }
}
