//! Stability of optimal couplings: for `Pₙ → P`, `Qₙ → Q` the support of the
//! optimal coupling `γₙ` approaches the graph of the population map `∇ψ` on a
//! compact set `K`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CompactSet;
use crate::error::{Error, Result};
use crate::hilbert::{inner, HVec};
use crate::maps::PopulationMap;
use crate::measures::{discretize_with, DiscreteMeasure, Discretization, MeasureSpec};
use crate::ot::{potential_from_dual, solve_transport};
use crate::rng::{self, purpose};

/// `Pₙ` is the empirical measure of `n` draws from `p`; `Qₙ` is an `n`-atom
/// discretisation of `q` (or `target_atoms` atoms when set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub p: MeasureSpec,
    pub q: MeasureSpec,
    pub target_strategy: Discretization,
    #[serde(default)]
    pub target_atoms: Option<usize>,
    /// Ground-truth `∇ψ` pushing `p` to `q`.
    pub population: PopulationMap,
    pub n_grid: Vec<usize>,
    pub k: CompactSet,
    pub directions: Vec<HVec>,
    pub seed: u64,
    pub reps: u64,
    /// Common bound `M` on the supports of `Qₙ`; atoms beyond it are flagged.
    #[serde(default)]
    pub bound: Option<f64>,
    /// Anchor `x₀` with `ψₙ(x₀) = ψ(x₀) = 0` (origin when absent).
    #[serde(default)]
    pub anchor: Option<HVec>,
    /// Nodes per axis of the grid over `K` on which `|ψₙ − ψ|` is evaluated;
    /// the potential gap is skipped when absent.
    #[serde(default)]
    pub potential_grid: Option<usize>,
}

/// One `(n, replication, direction)` cell of the stability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub n: usize,
    pub rep: u64,
    pub seed: u64,
    pub direction: usize,
    /// `sup |⟨y − ∇ψ(x), h⟩|` over support pairs `(x, y)` of `γₙ` with `x ∈ K`.
    pub gap: Option<f64>,
    /// `sup ‖y − ∇ψ(x)‖` over the same pairs.
    pub norm_gap: Option<f64>,
    /// `sup |ψₙ − ψ|` over the grid in `K`, both normalised at the anchor.
    pub potential_gap: Option<f64>,
    pub pairs_in_k: usize,
    pub bound_violation: bool,
}

/// Compares the smallest-`n` and largest-`n` values of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendVerdict {
    pub rep: u64,
    /// `direction <k>`, `norm` or `potential`.
    pub quantity: String,
    pub first_n: usize,
    pub last_n: usize,
    pub first: Option<f64>,
    pub last: Option<f64>,
    /// `last < first`, false when either is missing.
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub verdicts: Vec<TrendVerdict>,
}

impl StabilityReport {
    pub fn all_decreasing(&self, quantity_prefix: &str) -> bool {
        self.verdicts
            .iter()
            .filter(|v| v.quantity.starts_with(quantity_prefix))
            .all(|v| v.decreasing)
    }
}

struct Cell {
    gaps: Vec<Option<f64>>,
    norm_gap: Option<f64>,
    potential_gap: Option<f64>,
    pairs_in_k: usize,
    bound_violation: bool,
}

pub fn run_stability(config: &StabilityConfig) -> Result<StabilityReport> {
    let d = config.p.dim();
    if config.q.dim() != d || config.population.dim() != d {
        return Err(Error::invalid("p, q and population map dimensions differ"));
    }
    if let Some(h) = config.directions.iter().find(|h| h.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: h.dim(),
        });
    }
    if config.n_grid.is_empty() || config.reps == 0 {
        return Err(Error::invalid("stability needs a non-empty n grid and reps ≥ 1"));
    }
    let anchor = config.anchor.clone().unwrap_or_else(|| HVec::zeros(d));
    let grid = match config.potential_grid {
        Some(per_axis) => Some(config.k.grid(d, per_axis)?),
        None => None,
    };
    // ψ on the grid, normalised at the anchor.
    let population_on_grid = match &grid {
        Some(g) => {
            let psi0 = config.population.potential(&anchor)?;
            Some(
                g.iter()
                    .map(|z| Ok(config.population.potential(z)? - psi0))
                    .collect::<Result<Vec<f64>>>()?,
            )
        }
        None => None,
    };

    let jobs: Vec<(usize, u64)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.reps).map(move |r| (n, r)))
        .collect();
    let cells: Vec<Result<Cell>> = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let mut src_rng = rng::stream(config.seed, rep, rng::lane(purpose::SOURCE, n as u64));
            let src = DiscreteMeasure::empirical(config.p.sample_with(n, &mut src_rng))?;
            let m = config.target_atoms.unwrap_or(n);
            let mut tgt_rng = rng::stream(config.seed, rep, rng::lane(purpose::TARGET, n as u64));
            let tgt = discretize_with(&config.q, m, config.target_strategy, &mut tgt_rng)?;
            let bound_violation = config
                .bound
                .is_some_and(|b| tgt.atom_radius() > b * (1.0 + 1e-12));
            let plan = solve_transport(&src, &tgt)?;

            let mut gaps = vec![None::<f64>; config.directions.len()];
            let mut norm_gap = None::<f64>;
            let mut pairs_in_k = 0;
            for e in plan.coupling.entries() {
                let x = &src.points()[e.i];
                if !config.k.contains(x) {
                    continue;
                }
                pairs_in_k += 1;
                let diff = tgt.points()[e.j].checked_sub(&config.population.grad(x)?)?;
                let nd = diff.norm();
                norm_gap = Some(norm_gap.map_or(nd, |v| v.max(nd)));
                for (g, h) in gaps.iter_mut().zip(&config.directions) {
                    let v = inner(&diff, h)?.abs();
                    *g = Some(g.map_or(v, |u| u.max(v)));
                }
            }

            let potential_gap = match (&grid, &population_on_grid) {
                (Some(g), Some(pop)) => {
                    let psi_n = potential_from_dual(&plan.dual, &src, &tgt)?.normalized_at(&anchor)?;
                    let mut sup = 0.0f64;
                    for (z, p) in g.iter().zip(pop) {
                        sup = sup.max((psi_n.value(z)? - p).abs());
                    }
                    (!g.is_empty()).then_some(sup)
                }
                _ => None,
            };
            Ok(Cell {
                gaps,
                norm_gap,
                potential_gap,
                pairs_in_k,
                bound_violation,
            })
        })
        .collect();

    let mut rows = Vec::new();
    for (&(n, rep), cell) in jobs.iter().zip(cells) {
        let cell = cell?;
        for (direction, gap) in cell.gaps.iter().enumerate() {
            rows.push(StabilityRow {
                n,
                rep,
                seed: config.seed.wrapping_add(rep),
                direction,
                gap: *gap,
                norm_gap: cell.norm_gap,
                potential_gap: cell.potential_gap,
                pairs_in_k: cell.pairs_in_k,
                bound_violation: cell.bound_violation,
            });
        }
    }
    let verdicts = verdicts(config, &rows);
    Ok(StabilityReport { rows, verdicts })
}

fn verdicts(config: &StabilityConfig, rows: &[StabilityRow]) -> Vec<TrendVerdict> {
    let first_n = *config.n_grid.iter().min().unwrap();
    let last_n = *config.n_grid.iter().max().unwrap();
    let pick = |rep: u64, n: usize, f: &dyn Fn(&StabilityRow) -> Option<f64>, dir: Option<usize>| {
        rows.iter()
            .find(|r| r.rep == rep && r.n == n && dir.is_none_or(|d| r.direction == d))
            .and_then(f)
    };
    let verdict = |rep: u64, quantity: String, first: Option<f64>, last: Option<f64>| TrendVerdict {
        rep,
        quantity,
        first_n,
        last_n,
        first,
        last,
        decreasing: matches!((first, last), (Some(a), Some(b)) if b < a),
    };
    let mut out = Vec::new();
    for rep in 0..config.reps {
        for k in 0..config.directions.len() {
            let f = |r: &StabilityRow| r.gap;
            out.push(verdict(
                rep,
                format!("direction {k}"),
                pick(rep, first_n, &f, Some(k)),
                pick(rep, last_n, &f, Some(k)),
            ));
        }
        let f = |r: &StabilityRow| r.norm_gap;
        out.push(verdict(
            rep,
            "norm".into(),
            pick(rep, first_n, &f, None),
            pick(rep, last_n, &f, None),
        ));
        if config.potential_grid.is_some() {
            let f = |r: &StabilityRow| r.potential_gap;
            out.push(verdict(
                rep,
                "potential".into(),
                pick(rep, first_n, &f, None),
                pick(rep, last_n, &f, None),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{affine_gaussian_map, gaussian_to_cube};
    use crate::measures::{CubeSpec, GaussianSpec, Spectrum};

    #[test]
    fn self_transport_gaps_shrink() {
        let g = GaussianSpec::from_stds(HVec::zeros(2), vec![1.0, 0.5]).unwrap();
        let config = StabilityConfig {
            p: g.clone().into(),
            q: g.clone().into(),
            target_strategy: Discretization::SeededIid,
            target_atoms: None,
            population: PopulationMap::Gaussian(affine_gaussian_map(&g, &g).unwrap()),
            n_grid: vec![32, 512],
            k: CompactSet::ball(1.0),
            directions: vec![HVec::basis(2, 0), HVec::basis(2, 1)],
            seed: 3,
            reps: 2,
            bound: None,
            anchor: None,
            potential_grid: None,
        };
        let report = run_stability(&config).unwrap();
        assert_eq!(report.rows.len(), 2 * 2 * 2);
        for r in &report.rows {
            let (g, ng) = (r.gap.unwrap(), r.norm_gap.unwrap());
            assert!(g >= 0.0 && g <= ng * (1.0 + 1e-12));
        }
        assert!(report.all_decreasing("norm"));
    }

    #[test]
    fn cube_target_flags_a_too_small_bound() {
        let g = GaussianSpec::from_stds(HVec::zeros(1), vec![1.0]).unwrap();
        let cube = CubeSpec::centered(1, Spectrum::Constant { value: 2.0 }).unwrap();
        let config = StabilityConfig {
            p: g.clone().into(),
            q: cube.clone().into(),
            target_strategy: Discretization::QuantileGrid,
            target_atoms: None,
            population: PopulationMap::GaussianToCube(gaussian_to_cube(&g, &cube).unwrap()),
            n_grid: vec![16],
            k: CompactSet::ball(1.0),
            directions: vec![HVec::basis(1, 0)],
            seed: 0,
            reps: 1,
            bound: Some(0.5),
            anchor: None,
            potential_grid: Some(5),
        };
        let report = run_stability(&config).unwrap();
        assert!(report.rows[0].bound_violation);
        assert!(report.rows[0].potential_gap.is_some());
    }
}
