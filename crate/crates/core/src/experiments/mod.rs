//! Seeded Monte-Carlo harnesses: stability of monotone maps under weak
//! convergence of the marginals, the two counterexamples, and the CLT for the
//! empirical transport cost.

mod clt;
mod counterexamples;
mod stability;

pub use clt::{
    bootstrap_variance_se, run_clt, sigma2_formula, CltConfig, CltReport, Sigma2Estimate,
};
pub use counterexamples::{
    printed_subdifferential, run_counterexample_a, run_counterexample_b, CounterexampleARow,
    CounterexampleBRow, PiecewiseUniform,
};
pub use stability::{run_stability, StabilityConfig, StabilityReport, StabilityRow, TrendVerdict};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HVec;

/// `{x : ‖x‖ ≤ radius} ∩ {lower ≤ x ≤ upper}` in coefficient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactSet {
    pub radius: f64,
    #[serde(default)]
    pub lower: Option<Vec<f64>>,
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
}

impl CompactSet {
    pub fn ball(radius: f64) -> Self {
        CompactSet {
            radius,
            lower: None,
            upper: None,
        }
    }

    pub fn contains(&self, x: &HVec) -> bool {
        if x.norm_sq() > self.radius * self.radius {
            return false;
        }
        let c = x.coeffs();
        let above = |b: &Option<Vec<f64>>| {
            b.as_ref()
                .is_none_or(|lo| lo.iter().zip(c).all(|(l, x)| x >= l))
        };
        let below = |b: &Option<Vec<f64>>| {
            b.as_ref()
                .is_none_or(|hi| hi.iter().zip(c).all(|(h, x)| x <= h))
        };
        above(&self.lower) && below(&self.upper)
    }

    /// Points of the regular grid with `per_axis` nodes per coordinate spanning
    /// the bounding box, kept when they lie in the set.
    pub fn grid(&self, d: usize, per_axis: usize) -> Result<Vec<HVec>> {
        if per_axis < 2 || d == 0 {
            return Err(Error::invalid("grid needs d ≥ 1 and at least 2 nodes per axis"));
        }
        let total = (per_axis as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if total > 10_000_000 {
            return Err(Error::invalid(format!("grid of {total} points is too large")));
        }
        let lo: Vec<f64> = (0..d)
            .map(|i| {
                let b = self.lower.as_ref().map_or(f64::NEG_INFINITY, |l| l[i]);
                b.max(-self.radius)
            })
            .collect();
        let hi: Vec<f64> = (0..d)
            .map(|i| {
                let b = self.upper.as_ref().map_or(f64::INFINITY, |u| u[i]);
                b.min(self.radius)
            })
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let c: Vec<f64> = (0..d)
                .map(|i| lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (per_axis - 1) as f64)
                .collect();
            let x = HVec::new(c)?;
            if self.contains(&x) {
                out.push(x);
            }
            let mut k = 0;
            loop {
                if k == d {
                    return Ok(out);
                }
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_and_box_membership() {
        let k = CompactSet {
            radius: 1.0,
            lower: Some(vec![0.0, -1.0]),
            upper: None,
        };
        assert!(k.contains(&HVec::new(vec![0.5, -0.5]).unwrap()));
        assert!(!k.contains(&HVec::new(vec![-0.1, 0.0]).unwrap()));
        assert!(!k.contains(&HVec::new(vec![0.9, 0.9]).unwrap()));
    }

    #[test]
    fn grid_covers_the_set() {
        let g = CompactSet::ball(1.0).grid(2, 3).unwrap();
        // Of the 9 nodes of {−1, 0, 1}², the 4 corners fall outside the disc.
        assert_eq!(g.len(), 5);
    }
}
