//! Truncated separable Hilbert space arithmetic.
//!
//! An element of the space is stored as its first `d` coefficients in a fixed
//! orthonormal basis `{e_1, e_2, ...}`. The truncation dimension is data, so a
//! single binary can sweep `d` to study truncation sensitivity.

use std::fmt;
use std::ops::{Add, Index, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient vector of a Hilbert-space element, truncated to dimension `d >= 1`.
///
/// Coefficients are always finite.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HVec(Vec<f64>);

impl HVec {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("HVec needs at least one coefficient"));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coefficient {} at index {i}",
                coeffs[i]
            )));
        }
        Ok(HVec(coeffs))
    }

    /// Callers guarantee finiteness and non-emptiness.
    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty() && coeffs.iter().all(|c| c.is_finite()));
        HVec(coeffs)
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        HVec(vec![0.0; d])
    }

    /// The basis vector `e_{i+1}` (zero-based index `i`) in dimension `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        assert!(i < d, "basis index {i} out of range for dimension {d}");
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        HVec(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> HVec {
        HVec::from_vec_unchecked(self.0.iter().map(|c| c * s).collect())
    }

    /// Coordinatewise map; the result must stay finite.
    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> Result<HVec> {
        HVec::new(self.0.iter().enumerate().map(|(i, &c)| f(i, c)).collect())
    }

    fn check_dim(&self, other: &HVec) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn checked_sub(&self, other: &HVec) -> Result<HVec> {
        self.check_dim(other)?;
        Ok(self - other)
    }

    pub fn checked_add(&self, other: &HVec) -> Result<HVec> {
        self.check_dim(other)?;
        Ok(self + other)
    }

    pub fn dist_sq(&self, other: &HVec) -> Result<f64> {
        self.check_dim(other)?;
        Ok(dist_sq(&self.0, &other.0))
    }
}

impl fmt::Debug for HVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HVec{:?}", self.0)
    }
}

impl TryFrom<Vec<f64>> for HVec {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        HVec::new(v)
    }
}

impl From<HVec> for Vec<f64> {
    fn from(v: HVec) -> Self {
        v.0
    }
}

impl Index<usize> for HVec {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

// The operator impls panic on dimension mismatch; use the `checked_*` forms for
// untrusted input.
impl Sub for &HVec {
    type Output = HVec;

    fn sub(self, rhs: &HVec) -> HVec {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HVec::from_vec_unchecked(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for &HVec {
    type Output = HVec;

    fn add(self, rhs: &HVec) -> HVec {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HVec::from_vec_unchecked(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

/// `⟨x, y⟩ = Σ xᵢyᵢ`.
pub fn inner(x: &HVec, y: &HVec) -> Result<f64> {
    x.check_dim(y)?;
    Ok(dot(&x.0, &y.0))
}

pub fn norm(x: &HVec) -> f64 {
    x.norm()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

/// Strong and weak distances of a sequence to a candidate limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `‖xₙ − x‖` for each n.
    pub strong_gaps: Vec<f64>,
    /// `weak_gaps[k][n] = |⟨xₙ − x, h_k⟩|` for each test direction `h_k`.
    pub weak_gaps: Vec<Vec<f64>>,
}

impl ConvergenceReport {
    /// Checks `weak_gap(h) <= ‖h‖ · strong_gap` entrywise, up to a relative tolerance.
    pub fn satisfies_cauchy_schwarz(&self, directions: &[HVec], rel_tol: f64) -> bool {
        self.weak_gaps.iter().zip(directions).all(|(gaps, h)| {
            let hn = h.norm();
            gaps.iter()
                .zip(&self.strong_gaps)
                .all(|(w, s)| *w <= hn * s * (1.0 + rel_tol) + f64::MIN_POSITIVE)
        })
    }
}

/// Compares a sequence against `limit` in norm and along each of `directions`.
pub fn convergence_report(
    seq: &[HVec],
    limit: &HVec,
    directions: &[HVec],
) -> Result<ConvergenceReport> {
    if seq.is_empty() {
        return Err(Error::invalid("convergence_report needs a nonempty sequence"));
    }
    for h in directions {
        limit.check_dim(h)?;
    }
    let diffs = seq
        .iter()
        .map(|x| x.checked_sub(limit))
        .collect::<Result<Vec<_>>>()?;
    let strong_gaps = diffs.iter().map(HVec::norm).collect();
    let weak_gaps = directions
        .iter()
        .map(|h| diffs.iter().map(|d| dot(&d.0, &h.0).abs()).collect())
        .collect();
    Ok(ConvergenceReport {
        strong_gaps,
        weak_gaps,
    })
}
