//! Positions in issue space, distance metrics and relative utility.
//!
//! Relative utility is always "utility of D minus utility of R": positive
//! values mean the voter prefers D. Valence is a single additive shift
//! attached to D.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A voter's or candidate's position. Coordinate 0 is the economic axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealPoint(Vec<f64>);

impl IdealPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("ideal point needs at least one coordinate".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {bad}")));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Copy of `self` with coordinate `axis` replaced.
    pub fn with_coord(&self, axis: usize, value: f64) -> Self {
        let mut c = self.0.clone();
        c[axis] = value;
        Self(c)
    }
}

impl TryFrom<Vec<f64>> for IdealPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MetricKind {
    #[default]
    SquaredEuclidean,
    AbsoluteValue,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SquaredEuclidean => "squared-euclidean",
            Self::AbsoluteValue => "absolute-value",
        })
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared-euclidean" | "sq" => Ok(Self::SquaredEuclidean),
            "absolute-value" | "abs" => Ok(Self::AbsoluteValue),
            other => Err(Error::Parse(format!("unknown metric `{other}`"))),
        }
    }
}

/// A (possibly weighted) separable distance over issue dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    kind: MetricKind,
    weights: Vec<f64>,
}

impl Metric {
    pub fn new(kind: MetricKind, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("metric needs at least one weight".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidInput(format!("metric weight {w} is not positive")));
        }
        Ok(Self { kind, weights })
    }

    /// Equal unit weights over `dim` dimensions.
    pub fn unweighted(kind: MetricKind, dim: usize) -> Self {
        Self { kind, weights: vec![1.0; dim.max(1)] }
    }

    pub fn squared_euclidean(dim: usize) -> Self {
        Self::unweighted(MetricKind::SquaredEuclidean, dim)
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Distance between raw coordinate slices. Callers check dimensions.
    #[inline]
    pub(crate) fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let terms = a.iter().zip(b).zip(&self.weights);
        match self.kind {
            MetricKind::SquaredEuclidean => terms.map(|((x, y), w)| w * (x - y) * (x - y)).sum(),
            MetricKind::AbsoluteValue => terms.map(|((x, y), w)| w * (x - y).abs()).sum(),
        }
    }
}

/// Additive non-spatial advantage for D (negative favors R).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Valence(f64);

impl Valence {
    pub const NONE: Valence = Valence(0.0);

    pub fn new(shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(Error::InvalidInput(format!("valence shift {shift} is not finite")));
        }
        Ok(Self(shift))
    }

    pub fn shift(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preference {
    D,
    R,
    Split,
}

impl Preference {
    /// Contribution to D's vote count.
    pub fn d_weight(self) -> f64 {
        match self {
            Preference::D => 1.0,
            Preference::R => 0.0,
            Preference::Split => 0.5,
        }
    }
}

/// How an exact zero in relative utility is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieRule {
    /// Half a vote to each party.
    #[default]
    Split,
    FavorD,
    FavorR,
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn distance(a: &IdealPoint, b: &IdealPoint, m: &Metric) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), m.dim())?;
    Ok(m.eval(a.coords(), b.coords()))
}

#[inline]
pub(crate) fn relative_utility_raw(voter: &[f64], d: &[f64], r: &[f64], m: &Metric, v: Valence) -> f64 {
    m.eval(voter, r) - m.eval(voter, d) + v.0
}

/// `dist(voter, R) - dist(voter, D) + shift`.
pub fn relative_utility(
    voter: &IdealPoint,
    d_pos: &IdealPoint,
    r_pos: &IdealPoint,
    m: &Metric,
    v: Valence,
) -> Result<f64> {
    check_dim(voter.dim(), d_pos.dim())?;
    check_dim(voter.dim(), r_pos.dim())?;
    check_dim(voter.dim(), m.dim())?;
    Ok(relative_utility_raw(voter.coords(), d_pos.coords(), r_pos.coords(), m, v))
}

#[inline]
pub(crate) fn classify(u: f64, tie_rule: TieRule) -> Preference {
    if u > 0.0 {
        Preference::D
    } else if u < 0.0 {
        Preference::R
    } else {
        match tie_rule {
            TieRule::Split => Preference::Split,
            TieRule::FavorD => Preference::D,
            TieRule::FavorR => Preference::R,
        }
    }
}

pub fn preferred_party(
    voter: &IdealPoint,
    d_pos: &IdealPoint,
    r_pos: &IdealPoint,
    m: &Metric,
    v: Valence,
    tie_rule: TieRule,
) -> Result<Preference> {
    relative_utility(voter, d_pos, r_pos, m, v).map(|u| classify(u, tie_rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> IdealPoint {
        IdealPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let sq = Metric::squared_euclidean(2);
        let abs = Metric::unweighted(MetricKind::AbsoluteValue, 2);
        assert_eq!(distance(&p(&[0.0, 0.0]), &p(&[2.0, 1.0]), &sq).unwrap(), 5.0);
        assert_eq!(distance(&p(&[3.7, -1.2]), &p(&[3.7, -1.2]), &sq).unwrap(), 0.0);
        assert_eq!(distance(&p(&[0.0, 0.0]), &p(&[2.0, 1.0]), &abs).unwrap(), 3.0);
        assert_eq!(
            distance(&p(&[0.0, 0.0, 0.0]), &p(&[2.0, 1.0, 1.0]), &Metric::squared_euclidean(3)).unwrap(),
            6.0
        );
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sq = Metric::squared_euclidean(2);
        assert_eq!(
            distance(&p(&[0.0, 0.0]), &p(&[1.0]), &sq),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
        assert!(relative_utility(&p(&[0.0]), &p(&[1.0]), &p(&[2.0]), &sq, Valence::NONE).is_err());
    }

    #[test]
    fn bad_construction_rejected() {
        assert!(IdealPoint::new(vec![]).is_err());
        assert!(IdealPoint::new(vec![f64::NAN]).is_err());
        assert!(Metric::new(MetricKind::SquaredEuclidean, vec![1.0, 0.0]).is_err());
        assert!(Valence::new(f64::INFINITY).is_err());
    }

    #[test]
    fn relative_utility_examples() {
        let sq = Metric::squared_euclidean(2);
        let (voter, d, r) = (p(&[0.0, 0.0]), p(&[1.0, -2.0]), p(&[2.0, 1.0]));
        assert_eq!(relative_utility(&voter, &d, &r, &sq, Valence::NONE).unwrap(), 0.0);
        assert_eq!(relative_utility(&voter, &d, &r, &sq, Valence::new(0.5).unwrap()).unwrap(), 0.5);
        let sq1 = Metric::squared_euclidean(1);
        assert_eq!(relative_utility(&p(&[0.0]), &p(&[1.0]), &p(&[2.0]), &sq1, Valence::NONE).unwrap(), 3.0);
    }

    #[test]
    fn preferred_party_examples() {
        let sq = Metric::squared_euclidean(2);
        let sq1 = Metric::squared_euclidean(1);
        let (d, r) = (p(&[1.0, -2.0]), p(&[2.0, 1.0]));
        let pref = |voter: &IdealPoint, m: &Metric, d: &IdealPoint, r: &IdealPoint| {
            preferred_party(voter, d, r, m, Valence::NONE, TieRule::default()).unwrap()
        };
        assert_eq!(pref(&p(&[0.0]), &sq1, &p(&[1.0]), &p(&[2.0])), Preference::D);
        assert_eq!(pref(&p(&[0.0, 0.0]), &sq, &d, &r), Preference::Split);
        assert_eq!(pref(&p(&[2.0, 1.0]), &sq, &d, &r), Preference::R);
        let favor_r =
            preferred_party(&p(&[0.0, 0.0]), &d, &r, &sq, Valence::NONE, TieRule::FavorR).unwrap();
        assert_eq!(favor_r, Preference::R);
    }

    fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, dim)
    }

    fn config() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, bool)> {
        (1usize..5).prop_flat_map(|d| {
            (
                coords(d),
                coords(d),
                coords(d),
                coords(d),
                prop::collection::vec(0.1f64..5.0, d),
                any::<bool>(),
            )
        })
    }

    fn metric_of(weights: Vec<f64>, abs: bool) -> Metric {
        let kind = if abs { MetricKind::AbsoluteValue } else { MetricKind::SquaredEuclidean };
        Metric::new(kind, weights).unwrap()
    }

    proptest! {
        #[test]
        fn swap_antisymmetry((x, d, r, _t, w, abs) in config()) {
            let m = metric_of(w, abs);
            let (x, d, r) = (p(&x), p(&d), p(&r));
            let u = relative_utility(&x, &d, &r, &m, Valence::NONE).unwrap();
            let swapped = relative_utility(&x, &r, &d, &m, Valence::NONE).unwrap();
            prop_assert_eq!(u, -swapped);
            let a = preferred_party(&x, &d, &r, &m, Valence::NONE, TieRule::Split).unwrap();
            let b = preferred_party(&x, &r, &d, &m, Valence::NONE, TieRule::Split).unwrap();
            let mapped = match a { Preference::D => Preference::R, Preference::R => Preference::D, s => s };
            prop_assert_eq!(mapped, b);
        }

        #[test]
        fn translation_invariance((x, d, r, t, w, abs) in config()) {
            let m = metric_of(w, abs);
            let shift = |c: &[f64]| p(&c.iter().zip(&t).map(|(a, b)| a + b).collect::<Vec<_>>());
            let u = relative_utility(&p(&x), &p(&d), &p(&r), &m, Valence::NONE).unwrap();
            let u2 = relative_utility(&shift(&x), &shift(&d), &shift(&r), &m, Valence::NONE).unwrap();
            // Exact ties are measure-zero; compare signs away from rounding noise.
            prop_assume!(u.abs() > 1e-9 * (1.0 + u2.abs()));
            prop_assert_eq!(u > 0.0, u2 > 0.0);
        }

        #[test]
        fn positive_scale_invariance((x, d, r, _t, w, abs) in config(), c in 0.1f64..10.0) {
            let m = metric_of(w, abs);
            let scale = |v: &[f64]| p(&v.iter().map(|a| a * c).collect::<Vec<_>>());
            let u = relative_utility(&p(&x), &p(&d), &p(&r), &m, Valence::NONE).unwrap();
            let u2 = relative_utility(&scale(&x), &scale(&d), &scale(&r), &m, Valence::NONE).unwrap();
            prop_assume!(u.abs() > 1e-9 * (1.0 + u2.abs()));
            prop_assert_eq!(u > 0.0, u2 > 0.0);
        }

        #[test]
        fn metric_positivity((a, b, _r, _t, w, abs) in config()) {
            let m = metric_of(w, abs);
            let (a, b) = (p(&a), p(&b));
            let dab = distance(&a, &b, &m).unwrap();
            prop_assert!(dab >= 0.0);
            prop_assert_eq!(distance(&a, &a, &m).unwrap(), 0.0);
            if a != b {
                prop_assert!(dab > 0.0);
            }
        }

        #[test]
        fn equal_weights_scale_distance((a, b, _r, _t, _w, abs) in config(), c in 0.1f64..5.0) {
            let d = a.len();
            let weighted = metric_of(vec![c; d], abs);
            let plain = metric_of(vec![1.0; d], abs);
            let (a, b) = (p(&a), p(&b));
            let lhs = distance(&a, &b, &weighted).unwrap();
            let rhs = c * distance(&a, &b, &plain).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
