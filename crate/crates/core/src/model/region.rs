//! Classification of two-state parameters into proven-ergodic regions.
//!
//! Slowing the dynamics down moves a rule along the segment towards the
//! identity, and exchanging the two states maps the parameter cube onto
//! itself. Together they reduce every two-state rule to one of the faces
//! `{p11 = 0}` or `{p10 = 0}`; the `{p11 = 0}` face is where the
//! classification below is meaningful.

use std::fmt;

use serde::Serialize;

use super::criterion::{approx_eq, beta_delta, sqrt2_holds, strictly_less, COMPARE_TOL};
use super::rule::SimpleParams;
use super::ModelError;

/// Which previously known sufficient condition covers a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PriorClause {
    /// `p10 < 1/2` with `p01, p00 > 0`.
    HalfP10,
    /// `p10 < p01 + p00`.
    SumExceedsP10,
    /// `p01 < p00`.
    P00ExceedsP01,
    /// The whole `{p10 = 0}` face.
    P10Face,
}

impl PriorClause {
    pub fn id(&self) -> &'static str {
        match self {
            PriorClause::HalfP10 => "p10<1/2",
            PriorClause::SumExceedsP10 => "p10<p01+p00",
            PriorClause::P00ExceedsP01 => "p01<p00",
            PriorClause::P10Face => "p10=0-face",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RegionClass {
    NotPositiveRates,
    PriorCovered(PriorClause),
    NewlyCovered,
    EastLine,
    Open,
}

impl RegionClass {
    pub fn name(&self) -> &'static str {
        match self {
            RegionClass::NotPositiveRates => "NotPositiveRates",
            RegionClass::PriorCovered(_) => "PriorCovered",
            RegionClass::NewlyCovered => "NewlyCovered",
            RegionClass::EastLine => "EastLine",
            RegionClass::Open => "Open",
        }
    }

    pub fn clause(&self) -> Option<PriorClause> {
        match self {
            RegionClass::PriorCovered(c) => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Display for RegionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionClass::PriorCovered(c) => write!(f, "PriorCovered[{}]", c.id()),
            other => f.write_str(other.name()),
        }
    }
}

fn positive(p: f64) -> bool {
    p > COMPARE_TOL
}

fn below_one(p: f64) -> bool {
    strictly_less(p, 1.0)
}

/// East model line, either on the `{p11 = 0}` face or in unscaled form.
pub fn on_east_line(p: &SimpleParams) -> bool {
    let common = approx_eq(p.p10, 1.0) && approx_eq(p.p00, 0.0) && positive(p.p01);
    common && (approx_eq(p.p11, 0.0) || approx_eq(p.p11, p.p01))
}

/// Classifies a point given in face coordinates (`p11 = 0` expected).
///
/// Precedence: East line, then the positive-rates gate, then the prior
/// clauses in declaration order, then `δ < √2 β_eff` for state 0.
///
/// The gate leaves the `p00 = 0` face open so that the section `p00 = 0`,
/// the closure of the region diagrams, can be classified; every other
/// positive-rates inequality is enforced.
pub fn classify_simple(p: &SimpleParams) -> RegionClass {
    if on_east_line(p) {
        return RegionClass::EastLine;
    }
    if !(below_one(p.p11) && below_one(p.p10) && positive(p.p01) && p.p00 >= 0.0) {
        return RegionClass::NotPositiveRates;
    }
    if strictly_less(p.p10, 0.5) && positive(p.p01) && positive(p.p00) {
        return RegionClass::PriorCovered(PriorClause::HalfP10);
    }
    if strictly_less(p.p10, p.p01 + p.p00) {
        return RegionClass::PriorCovered(PriorClause::SumExceedsP10);
    }
    if strictly_less(p.p01, p.p00) {
        return RegionClass::PriorCovered(PriorClause::P00ExceedsP01);
    }
    let rule = p.to_rule().expect("parameters validated by construction");
    let c = beta_delta(&rule, 0).expect("state 0 exists");
    if sqrt2_holds(c.beta_eff, c.delta) {
        RegionClass::NewlyCovered
    } else {
        RegionClass::Open
    }
}

/// The face a rule reaches when sped up as much as possible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Face {
    P11Zero,
    P00One,
    P10Zero,
    P01One,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Reduction {
    /// `P = (1-λ) I + λ Q` with `Q` on a face.
    pub lambda: f64,
    pub face: Face,
    /// `Q` itself.
    pub on_face: SimpleParams,
    /// `Q`, or its state swap, on `{p11 = 0}` or `{p10 = 0}`.
    pub canonical: SimpleParams,
}

/// Speeds a rule up onto a far face of the cube and maps it onto
/// `{p11 = 0} ∪ {p10 = 0}` with the state swap.
pub fn reduce_to_face(p: &SimpleParams) -> Result<Reduction, ModelError> {
    let candidates = [
        (Face::P11Zero, 1.0 - p.p11),
        (Face::P00One, p.p00),
        (Face::P10Zero, 1.0 - p.p10),
        (Face::P01One, p.p01),
    ];
    let (face, lambda) = candidates
        .iter()
        .copied()
        .fold((Face::P11Zero, f64::NEG_INFINITY), |best, c| {
            if c.1 > best.1 {
                c
            } else {
                best
            }
        });
    if lambda <= 0.0 {
        return Err(ModelError::IdentityRule);
    }
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    let mut on_face = SimpleParams {
        p11: clamp(1.0 - (1.0 - p.p11) / lambda),
        p10: clamp(1.0 - (1.0 - p.p10) / lambda),
        p01: clamp(p.p01 / lambda),
        p00: clamp(p.p00 / lambda),
    };
    // pin the face coordinate exactly
    match face {
        Face::P11Zero => on_face.p11 = 0.0,
        Face::P00One => on_face.p00 = 1.0,
        Face::P10Zero => on_face.p10 = 0.0,
        Face::P01One => on_face.p01 = 1.0,
    }
    let canonical = match face {
        Face::P11Zero | Face::P10Zero => on_face,
        Face::P00One | Face::P01One => on_face.swap_states(),
    };
    Ok(Reduction {
        lambda,
        face,
        on_face,
        canonical,
    })
}

/// Classifies an arbitrary two-state rule by reducing it to a face first.
pub fn classify(p: &SimpleParams) -> Result<(Reduction, RegionClass), ModelError> {
    if on_east_line(p) {
        let r = reduce_to_face(p)?;
        return Ok((r, RegionClass::EastLine));
    }
    let r = reduce_to_face(p)?;
    let class = match r.face {
        Face::P11Zero | Face::P00One => classify_simple(&r.canonical),
        Face::P10Zero | Face::P01One => {
            if r.canonical.positive_rates() {
                RegionClass::PriorCovered(PriorClause::P10Face)
            } else {
                RegionClass::NotPositiveRates
            }
        }
    };
    Ok((r, class))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(p11: f64, p10: f64, p01: f64, p00: f64) -> SimpleParams {
        SimpleParams::new(p11, p10, p01, p00).unwrap()
    }

    #[test]
    fn half_clause() {
        assert_eq!(
            classify_simple(&sp(0.0, 0.3, 0.6, 0.7)),
            RegionClass::PriorCovered(PriorClause::HalfP10)
        );
    }

    #[test]
    fn wall_point_is_new() {
        assert_eq!(classify_simple(&sp(0.0, 0.9, 0.02, 0.02)), RegionClass::NewlyCovered);
    }

    #[test]
    fn vertex_of_new_region() {
        // √2 (1 - 0.585) = 0.58690.. > 0.585
        assert_eq!(classify_simple(&sp(0.0, 0.585, 0.585, 0.0)), RegionClass::NewlyCovered);
        // above the diagonal the sum clause takes over
        assert_eq!(
            classify_simple(&sp(0.0, 0.585, 0.587, 0.0)),
            RegionClass::PriorCovered(PriorClause::SumExceedsP10)
        );
        // right of the vertex the √2 line separates new from open
        assert_eq!(classify_simple(&sp(0.0, 0.6, 0.56, 0.0)), RegionClass::NewlyCovered);
        assert_eq!(classify_simple(&sp(0.0, 0.6, 0.57, 0.0)), RegionClass::Open);
    }

    #[test]
    fn east_line_precedes_gate() {
        assert_eq!(classify_simple(&sp(0.0, 1.0, 0.4, 0.0)), RegionClass::EastLine);
        assert_eq!(classify_simple(&sp(0.3, 1.0, 0.3, 0.0)), RegionClass::EastLine);
        assert_eq!(classify_simple(&sp(0.0, 1.0, 0.0, 0.0)), RegionClass::NotPositiveRates);
        assert_eq!(classify_simple(&sp(0.0, 1.0, 0.4, 0.2)), RegionClass::NotPositiveRates);
    }

    #[test]
    fn p01_zero_is_gated() {
        assert_eq!(classify_simple(&sp(0.0, 0.7, 0.0, 0.3)), RegionClass::NotPositiveRates);
    }

    #[test]
    fn float_sums_compare_exactly() {
        // 0.4 + 0.2 > 0.6 in binary floating point
        assert_eq!(classify_simple(&sp(0.0, 0.6, 0.4, 0.2)), RegionClass::NewlyCovered);
    }

    #[test]
    fn dense_section_above_half_is_covered() {
        let n = 101;
        for i in 0..n {
            for j in 0..n {
                let p = sp(0.0, i as f64 / 100.0, j as f64 / 100.0, 0.6);
                let c = classify_simple(&p);
                if p.positive_rates() {
                    assert!(
                        matches!(c, RegionClass::PriorCovered(_) | RegionClass::NewlyCovered),
                        "{p} -> {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn reduce_face_point_is_fixed() {
        let p = sp(0.0, 0.9, 0.02, 0.02);
        let r = reduce_to_face(&p).unwrap();
        assert_eq!(r.face, Face::P11Zero);
        assert_eq!(r.lambda, 1.0);
        assert_eq!(r.canonical, p);
    }

    #[test]
    fn reduce_undoes_time_scaling() {
        let p = sp(0.0, 0.9, 0.02, 0.02);
        let slowed = p.time_scale(0.25).unwrap();
        let r = reduce_to_face(&slowed).unwrap();
        assert!((r.lambda - 0.25).abs() < 1e-12);
        for (a, b) in r.canonical.as_array().iter().zip(p.as_array()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(classify(&slowed).unwrap().1, RegionClass::NewlyCovered);
    }

    #[test]
    fn reduce_through_swap() {
        let p = sp(0.0, 0.9, 0.02, 0.02).swap_states().time_scale(0.5).unwrap();
        let r = reduce_to_face(&p).unwrap();
        assert_eq!(r.face, Face::P00One);
        assert_eq!(classify(&p).unwrap().1, RegionClass::NewlyCovered);
    }

    #[test]
    fn p10_face_is_prior() {
        let (r, c) = classify(&sp(0.5, 0.0, 0.3, 0.4)).unwrap();
        assert_eq!(r.face, Face::P10Zero);
        assert_eq!(c, RegionClass::PriorCovered(PriorClause::P10Face));
    }

    #[test]
    fn identity_cannot_be_reduced() {
        assert!(reduce_to_face(&sp(1.0, 1.0, 0.0, 0.0)).is_err());
    }
}
