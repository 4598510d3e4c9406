//! Exact discrete optimal transport for the cost `‖x − y‖²`, cyclic-monotonicity
//! certification, convex potentials and semi-discrete dual ascent.

mod assignment;
mod certify;
mod export;
mod potential;
mod semidiscrete;
mod simplex;

pub use assignment::solve_assignment;
pub use certify::{
    apply_cycle_swap, certify_cyclic_monotonicity, certify_pairs, CertificationMode,
    CertifyOptions, MonotonicityCertificate, DEFAULT_CYCLE_BUDGET,
};
pub use export::{coupling_to_csv, dual_to_csv};
pub use potential::{potential_from_dual, Gradient, MaxAffinePotential};
pub use semidiscrete::{semidiscrete_solve, SemidiscreteConfig, SemidiscreteSolution};
pub use simplex::{solve_transport, TransportPlan};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{atom_cost, DiscreteMeasure};

/// Marginal and cost tolerance for couplings.
pub const COUPLING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

/// A transport plan between two discrete measures, stored by its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    entries: Vec<CouplingEntry>,
    src: DiscreteMeasure,
    tgt: DiscreteMeasure,
    cost: f64,
}

impl Coupling {
    /// Validates marginals (within [`COUPLING_TOL`]) and computes the cost.
    pub fn new(
        src: DiscreteMeasure,
        tgt: DiscreteMeasure,
        mut entries: Vec<CouplingEntry>,
    ) -> Result<Self> {
        if src.dim() != tgt.dim() {
            return Err(Error::DimensionMismatch {
                expected: src.dim(),
                found: tgt.dim(),
            });
        }
        let mut rows = vec![0.0; src.len()];
        let mut cols = vec![0.0; tgt.len()];
        for e in &entries {
            if e.i >= src.len() || e.j >= tgt.len() || !(e.mass > 0.0) || !e.mass.is_finite() {
                return Err(Error::invalid(format!("bad coupling entry {e:?}")));
            }
            rows[e.i] += e.mass;
            cols[e.j] += e.mass;
        }
        let check = |sums: &[f64], w: &[f64], side: &str| -> Result<()> {
            for (k, (s, w)) in sums.iter().zip(w).enumerate() {
                if (s - w).abs() > COUPLING_TOL {
                    return Err(Error::invalid(format!(
                        "{side} marginal {k}: coupling carries {s}, measure has {w}"
                    )));
                }
            }
            Ok(())
        };
        check(&rows, src.weights(), "source")?;
        check(&cols, tgt.weights(), "target")?;
        entries.sort_by_key(|e| (e.i, e.j));
        let cost = entries
            .iter()
            .map(|e| e.mass * atom_cost(&src.points()[e.i], &tgt.points()[e.j]))
            .sum();
        Ok(Coupling {
            entries,
            src,
            tgt,
            cost,
        })
    }

    /// Entries sorted by `(i, j)`.
    pub fn entries(&self) -> &[CouplingEntry] {
        &self.entries
    }

    pub fn src(&self) -> &DiscreteMeasure {
        &self.src
    }

    pub fn tgt(&self) -> &DiscreteMeasure {
        &self.tgt
    }

    /// `Σ mass · ‖xᵢ − yⱼ‖²`.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Support as `(i, j)` index pairs.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|e| (e.i, e.j)).collect()
    }

    /// `perm[i] = j` when every source atom is sent to exactly one target atom
    /// and vice versa.
    pub fn as_permutation(&self) -> Option<Vec<usize>> {
        if self.src.len() != self.tgt.len() || self.entries.len() != self.src.len() {
            return None;
        }
        let mut perm = vec![usize::MAX; self.src.len()];
        let mut seen = vec![false; self.tgt.len()];
        for e in &self.entries {
            if perm[e.i] != usize::MAX || seen[e.j] {
                return None;
            }
            perm[e.i] = e.j;
            seen[e.j] = true;
        }
        Some(perm)
    }
}

/// Kantorovich dual potentials: `uᵢ + wⱼ ≤ ‖xᵢ − yⱼ‖²` with equality on the
/// support of an optimal coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl DualSolution {
    /// Largest `uᵢ + wⱼ − cᵢⱼ` over all pairs (≤ 0 for a feasible dual).
    pub fn max_violation(&self, src: &DiscreteMeasure, tgt: &DiscreteMeasure) -> Result<f64> {
        self.check_shape(src, tgt)?;
        let mut worst = f64::NEG_INFINITY;
        for (x, u) in src.points().iter().zip(&self.u) {
            for (y, w) in tgt.points().iter().zip(&self.w) {
                worst = worst.max(u + w - atom_cost(x, y));
            }
        }
        Ok(worst)
    }

    /// Largest `|uᵢ + wⱼ − cᵢⱼ|` over the support of `coupling`.
    pub fn slackness_gap(&self, coupling: &Coupling) -> Result<f64> {
        self.check_shape(coupling.src(), coupling.tgt())?;
        Ok(coupling
            .entries()
            .iter()
            .map(|e| {
                let c = atom_cost(&coupling.src().points()[e.i], &coupling.tgt().points()[e.j]);
                (self.u[e.i] + self.w[e.j] - c).abs()
            })
            .fold(0.0, f64::max))
    }

    /// Dual objective `Σ aᵢuᵢ + Σ bⱼwⱼ`; equals the optimal cost at optimality.
    pub fn objective(&self, src: &DiscreteMeasure, tgt: &DiscreteMeasure) -> f64 {
        let a: f64 = src.weights().iter().zip(&self.u).map(|(a, u)| a * u).sum();
        let b: f64 = tgt.weights().iter().zip(&self.w).map(|(b, w)| b * w).sum();
        a + b
    }

    fn check_shape(&self, src: &DiscreteMeasure, tgt: &DiscreteMeasure) -> Result<()> {
        if self.u.len() != src.len() || self.w.len() != tgt.len() {
            return Err(Error::invalid(format!(
                "dual has {}x{} potentials for a {}x{} instance",
                self.u.len(),
                self.w.len(),
                src.len(),
                tgt.len()
            )));
        }
        Ok(())
    }
}

/// Row-major `‖xᵢ − yⱼ‖²`.
pub(crate) fn cost_matrix(src: &DiscreteMeasure, tgt: &DiscreteMeasure) -> Vec<f64> {
    let mut c = Vec::with_capacity(src.len() * tgt.len());
    for x in src.points() {
        for y in tgt.points() {
            c.push(atom_cost(x, y));
        }
    }
    c
}

pub(crate) fn instance_dump(src: &DiscreteMeasure, tgt: &DiscreteMeasure) -> String {
    serde_json::json!({ "src": src, "tgt": tgt }).to_string()
}
