//! Shared numeric substrate: ball/sphere vectors, labels, the sign
//! convention, the clipped reweighting factor and Euclidean projection.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on unit norms of data points and ball membership of weights.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A binary label, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    /// Label of a finite real under the convention `sign(0) = +1`.
    #[inline]
    pub fn of(t: f64) -> Self {
        if t >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    #[inline]
    pub fn flipped(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl TryFrom<i64> for Label {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(format!("label must be 1 or -1, got {other}")),
        }
    }
}

impl From<Label> for i64 {
    fn from(l: Label) -> i64 {
        match l {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }
}

/// `sign(t) = +1` if `t >= 0`, `-1` otherwise.
pub fn sign(t: f64) -> Result<Label> {
    if !t.is_finite() {
        return Err(Error::NonFinite("sign argument"));
    }
    Ok(Label::of(t))
}

/// `1 / max(|a|, floor)`.
pub fn clip_weight(a: f64, floor: f64) -> Result<f64> {
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::param("floor", floor, "must be positive and finite"));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("clip_weight argument"));
    }
    Ok(clip(a, floor))
}

#[inline]
pub(crate) fn clip(a: f64, floor: f64) -> f64 {
    1.0 / a.abs().max(floor)
}

/// A vector living in the closed unit ball. Data points additionally sit on
/// the sphere; see [`UnitVector::on_sphere`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Checks `‖v‖ = 1` within [`NORM_TOLERANCE`].
    pub fn on_sphere(coords: Vec<f64>) -> Result<Self> {
        let n = checked_norm(&coords)?;
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NormViolation {
                norm: n,
                constraint: "unit sphere",
            });
        }
        Ok(UnitVector(coords))
    }

    /// Checks `‖v‖ <= 1` within [`NORM_TOLERANCE`].
    pub fn in_ball(coords: Vec<f64>) -> Result<Self> {
        let n = checked_norm(&coords)?;
        if n > 1.0 + NORM_TOLERANCE {
            return Err(Error::NormViolation {
                norm: n,
                constraint: "unit ball",
            });
        }
        Ok(UnitVector(coords))
    }

    /// Rescales a nonzero vector onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        let n = checked_norm(&coords)?;
        if n == 0.0 {
            return Err(Error::param("norm", 0.0, "cannot normalize the zero vector"));
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(UnitVector(coords))
    }

    /// Standard basis vector `e_i` in `dim` dimensions.
    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim, "basis index {i} out of range for dimension {dim}");
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        UnitVector(v)
    }

    pub fn zeros(dim: usize) -> Self {
        UnitVector(vec![0.0; dim])
    }

    /// Wraps coordinates the caller already knows to be in the ball.
    pub(crate) fn new_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(norm(&coords) <= 1.0 + 1e-6);
        UnitVector(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for UnitVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean projection onto the unit ball: `v / max(‖v‖, 1)`.
pub fn project_to_ball(v: &[f64]) -> Result<UnitVector> {
    checked_norm(v)?;
    let mut out = v.to_vec();
    project_in_place(&mut out);
    Ok(UnitVector(out))
}

/// In-place [`project_to_ball`] for finite input; returns the pre-projection norm.
#[inline]
pub(crate) fn project_in_place(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 1.0 {
        v.iter_mut().for_each(|c| *c /= n);
        // Rounding can leave the norm a few ulps above one; shrink until the
        // result is a fixed point of the projection.
        while norm(v) > 1.0 {
            v.iter_mut().for_each(|c| *c *= 1.0 - f64::EPSILON);
        }
    }
    n
}

fn checked_norm(v: &[f64]) -> Result<f64> {
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("vector coordinates"));
    }
    Ok(norm(v))
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation; rounding error grows as `O(log n)`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise mean of `n` scalars produced by `term(i)`.
pub(crate) fn pairwise_mean(n: usize, term: impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            return (lo..hi).map(term).sum();
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, term) + go(mid, hi, term)
    }
    go(0, n, &term) / n as f64
}

/// Pairwise mean of `n` vectors of length `dim`; `term(i, acc)` adds the
/// `i`-th vector into `acc`.
pub(crate) fn pairwise_mean_vec(
    n: usize,
    dim: usize,
    term: impl Fn(usize, &mut [f64]),
) -> Vec<f64> {
    fn go(lo: usize, hi: usize, dim: usize, term: &impl Fn(usize, &mut [f64])) -> Vec<f64> {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut acc = vec![0.0; dim];
            (lo..hi).for_each(|i| term(i, &mut acc));
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        let mut left = go(lo, mid, dim, term);
        let right = go(mid, hi, dim, term);
        left.iter_mut().zip(&right).for_each(|(l, r)| *l += r);
        left
    }
    let mut total = go(0, n, dim, &term);
    total.iter_mut().for_each(|c| *c /= n as f64);
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_follows_nonnegative_convention() {
        assert_eq!(sign(0.0).unwrap(), Label::Pos);
        assert_eq!(sign(-0.0).unwrap(), Label::Pos);
        assert_eq!(sign(3.2).unwrap(), Label::Pos);
        assert_eq!(sign(-1e-300).unwrap(), Label::Neg);
        assert!(sign(f64::NAN).is_err());
        assert!(sign(f64::INFINITY).is_err());
    }

    #[test]
    fn clip_weight_examples() {
        assert_eq!(clip_weight(0.5, 0.05).unwrap(), 2.0);
        assert_eq!(clip_weight(0.0, 0.05).unwrap(), 20.0);
        assert_eq!(clip_weight(-0.5, 0.05).unwrap(), 2.0);
        assert!(clip_weight(0.5, 0.0).is_err());
        assert!(clip_weight(0.5, -1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_ball(&[0.3, 0.4]).unwrap().as_slice(), &[0.3, 0.4]);
        assert_eq!(project_to_ball(&[0.0, 2.0]).unwrap().as_slice(), &[0.0, 1.0]);
        assert_eq!(project_to_ball(&[0.0, 0.0]).unwrap().as_slice(), &[0.0, 0.0]);
        assert!(project_to_ball(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn unit_vector_constructors_validate() {
        assert!(UnitVector::on_sphere(vec![0.6, 0.8]).is_ok());
        assert!(UnitVector::on_sphere(vec![0.6, 0.7]).is_err());
        assert!(UnitVector::in_ball(vec![0.6, 0.7]).is_ok());
        assert!(UnitVector::in_ball(vec![1.0, 0.1]).is_err());
        assert!(UnitVector::normalized(vec![0.0, 0.0]).is_err());
        let v = UnitVector::normalized(vec![3.0, 4.0]).unwrap();
        assert!((norm(&v) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn label_serde_round_trip() {
        assert_eq!(serde_json::to_string(&Label::Neg).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Label>("1").unwrap(), Label::Pos);
        assert!(serde_json::from_str::<Label>("0").is_err());
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_mean(1000, |i| i as f64), 499.5);
        let m = pairwise_mean_vec(100, 2, |i, acc| {
            acc[0] += i as f64;
            acc[1] += 1.0;
        });
        assert_eq!(m, vec![49.5, 1.0]);
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0..3.0f64, 3)
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(v in vec3()) {
            let p = project_to_ball(&v).unwrap();
            let pp = project_to_ball(&p).unwrap();
            prop_assert_eq!(p, pp);
        }

        #[test]
        fn projection_is_non_expansive_toward_the_ball(v in vec3(), u in vec3()) {
            let u = project_to_ball(&u).unwrap();
            let p = project_to_ball(&v).unwrap();
            prop_assert!(distance_sq(&p, &u).sqrt() <= distance_sq(&v, &u).sqrt() + 1e-12);
            prop_assert!(norm(&p) <= 1.0 + NORM_TOLERANCE);
        }

        #[test]
        fn clip_weight_inverts_the_max(a in -2.0..2.0f64, floor in 1e-6..1.0f64) {
            let w = clip_weight(a, floor).unwrap();
            prop_assert!((w * a.abs().max(floor) - 1.0).abs() <= 1e-12);
            prop_assert!(w > 0.0 && w <= 1.0 / floor);
        }
    }
}
