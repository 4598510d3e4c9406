//! Convex potentials `ψ(x) = maxⱼ (⟨x, yⱼ⟩ + bⱼ)` whose gradient is the
//! optimal map onto a discrete target.

use serde::{Deserialize, Serialize};

use super::DualSolution;
use crate::error::{Error, Result};
use crate::hilbert::{dot, HVec};
use crate::measures::DiscreteMeasure;

/// Affine pieces attaining the max within this gap count as ties.
pub const TIE_TOL: f64 = 1e-9;

/// Tolerance for dual feasibility `uᵢ + wⱼ ≤ cᵢⱼ`, relative to the cost scale.
const DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAffinePotential {
    slopes: Vec<HVec>,
    intercepts: Vec<f64>,
}

/// Gradient of a max-affine potential at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// Slope of the lowest-index maximising piece.
    pub value: HVec,
    /// Index of that piece.
    pub index: usize,
    /// More than one piece attains the max: `x` sits on a cell boundary and
    /// `value` is one element of the subdifferential.
    pub tie: bool,
}

impl MaxAffinePotential {
    pub fn new(slopes: Vec<HVec>, intercepts: Vec<f64>) -> Result<Self> {
        if slopes.is_empty() || slopes.len() != intercepts.len() {
            return Err(Error::invalid(format!(
                "{} slopes and {} intercepts",
                slopes.len(),
                intercepts.len()
            )));
        }
        let d = slopes[0].dim();
        if let Some(s) = slopes.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: s.dim(),
            });
        }
        if intercepts.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("intercepts must be finite"));
        }
        Ok(MaxAffinePotential { slopes, intercepts })
    }

    /// `bⱼ = (wⱼ − ‖yⱼ‖²)/2`: the potential whose cells are the Laguerre cells
    /// of the atoms `yⱼ` with weights `wⱼ`.
    pub fn from_weights(atoms: &[HVec], weights: &[f64]) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::invalid("one weight per atom"));
        }
        let b = atoms
            .iter()
            .zip(weights)
            .map(|(y, w)| 0.5 * (w - y.norm_sq()))
            .collect();
        Self::new(atoms.to_vec(), b)
    }

    pub fn dim(&self) -> usize {
        self.slopes[0].dim()
    }

    pub fn len(&self) -> usize {
        self.slopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }

    pub fn slopes(&self) -> &[HVec] {
        &self.slopes
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    fn check_dim(&self, x: &HVec) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// Values of every affine piece at `x`.
    fn pieces(&self, x: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let x = x.to_vec();
        self.slopes
            .iter()
            .zip(&self.intercepts)
            .map(move |(s, b)| dot(&x, s.coeffs()) + b)
    }

    /// Lowest maximising index and the max value, without dimension checks.
    pub(crate) fn argmax_raw(&self, x: &[f64]) -> (usize, f64) {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (j, (s, b)) in self.slopes.iter().zip(&self.intercepts).enumerate() {
            let v = dot(x, s.coeffs()) + b;
            if v > val {
                val = v;
                best = j;
            }
        }
        (best, val)
    }

    pub fn value(&self, x: &HVec) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.argmax_raw(x.coeffs()).1)
    }

    pub fn grad(&self, x: &HVec) -> Result<Gradient> {
        self.check_dim(x)?;
        let (index, max) = self.argmax_raw(x.coeffs());
        let ties = self
            .pieces(x.coeffs())
            .filter(|v| *v >= max - TIE_TOL)
            .count();
        Ok(Gradient {
            value: self.slopes[index].clone(),
            index,
            tie: ties > 1,
        })
    }

    /// Indices of every piece within [`TIE_TOL`] of the max; the subdifferential
    /// at `x` is the convex hull of their slopes.
    pub fn active_set(&self, x: &HVec) -> Result<Vec<usize>> {
        self.check_dim(x)?;
        let (_, max) = self.argmax_raw(x.coeffs());
        Ok(self
            .pieces(x.coeffs())
            .enumerate()
            .filter(|(_, v)| *v >= max - TIE_TOL)
            .map(|(j, _)| j)
            .collect())
    }

    /// Same potential plus a constant.
    pub fn shifted(&self, c: f64) -> Self {
        MaxAffinePotential {
            slopes: self.slopes.clone(),
            intercepts: self.intercepts.iter().map(|b| b + c).collect(),
        }
    }

    /// Shifted so that `ψ(anchor) = 0`.
    pub fn normalized_at(&self, anchor: &HVec) -> Result<Self> {
        Ok(self.shifted(-self.value(anchor)?))
    }
}

/// Brenier potential recovered from an optimal dual.
///
/// From `uᵢ + wⱼ ≤ ‖xᵢ − yⱼ‖²`, the pieces `⟨x, yⱼ⟩ + (wⱼ − ‖yⱼ‖²)/2` satisfy
/// `ψ(xᵢ) ≤ (‖xᵢ‖² − uᵢ)/2` with equality exactly on the support, so each source
/// atom's partner attains the max at that atom. Errors if the dual is not
/// feasible to within `1e-9` (relative to the largest cost).
pub fn potential_from_dual(
    dual: &DualSolution,
    src: &DiscreteMeasure,
    tgt: &DiscreteMeasure,
) -> Result<MaxAffinePotential> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: tgt.dim(),
        });
    }
    let violation = dual.max_violation(src, tgt)?;
    let scale = super::cost_matrix(src, tgt)
        .into_iter()
        .fold(1.0, f64::max);
    if violation > DUAL_TOL * scale {
        return Err(Error::invalid(format!(
            "dual is infeasible: uᵢ + wⱼ exceeds the cost by {violation}"
        )));
    }
    MaxAffinePotential::from_weights(tgt.points(), &dual.w)
}
