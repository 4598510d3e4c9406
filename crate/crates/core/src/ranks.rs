//! Empirical center-outward ranks: the optimal assignment of a sample to an
//! equally sized uniform discretisation of a reference measure, plus
//! functional-data ingestion (curves projected onto an orthonormal basis).

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::CompactSet;
use crate::hilbert::{inner, HVec};
use crate::maps::PopulationMap;
use crate::measures::{discretize_with, DiscreteMeasure, Discretization, MeasureSpec};
use crate::ot::solve_assignment;
use crate::rng::{self, purpose};

/// How the reference atoms were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeta {
    pub strategy: Discretization,
    pub seed: u64,
    /// Radius of a centred ball containing every reference atom.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMap {
    data_points: Vec<HVec>,
    ranks: Vec<HVec>,
    /// `assignment[i]` is the reference atom given to data point `i`.
    assignment: Vec<usize>,
    reference_meta: Option<ReferenceMeta>,
}

/// Optimal bijection between `data` and the atoms of a uniform `reference`.
pub fn fit_rank(data: &[HVec], reference: &DiscreteMeasure) -> Result<RankMap> {
    if data.len() != reference.len() {
        return Err(Error::invalid(format!(
            "{} data points but {} reference atoms",
            data.len(),
            reference.len()
        )));
    }
    if !reference.is_uniform() {
        return Err(Error::invalid("rank reference must have uniform weights"));
    }
    let coupling = solve_assignment(data, reference.points())?;
    let assignment = coupling
        .as_permutation()
        .ok_or_else(|| Error::invalid("assignment is not a bijection"))?;
    let ranks = assignment
        .iter()
        .map(|&j| coupling.tgt().points()[j].clone())
        .collect();
    Ok(RankMap {
        data_points: coupling.src().points().to_vec(),
        ranks,
        assignment,
        reference_meta: None,
    })
}

/// Discretises `reference` with exactly `data.len()` atoms and fits ranks.
pub fn fit_rank_to_spec(
    data: &[HVec],
    reference: &MeasureSpec,
    strategy: Discretization,
    seed: u64,
) -> Result<RankMap> {
    let n = data.len();
    let mut rng = rng::stream(seed, 0, rng::lane(purpose::REFERENCE, n as u64));
    let atoms = discretize_with(reference, n, strategy, &mut rng)?;
    let mut map = fit_rank(data, &atoms)?;
    map.reference_meta = Some(ReferenceMeta {
        strategy,
        seed,
        bound: reference
            .support_radius()
            .unwrap_or_else(|| atoms.atom_radius()),
    });
    Ok(map)
}

impl RankMap {
    pub fn len(&self) -> usize {
        self.data_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data_points.is_empty()
    }

    pub fn data_points(&self) -> &[HVec] {
        &self.data_points
    }

    pub fn ranks(&self) -> &[HVec] {
        &self.ranks
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn reference_meta(&self) -> Option<&ReferenceMeta> {
        self.reference_meta.as_ref()
    }

    /// `(xᵢ, rank(xᵢ))` pairs.
    pub fn pairs(&self) -> Vec<(HVec, HVec)> {
        self.data_points
            .iter()
            .cloned()
            .zip(self.ranks.iter().cloned())
            .collect()
    }

    /// Law of the ranks under the empirical measure of the data.
    pub fn pushforward(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::empirical(self.ranks.clone())
    }

    /// Every reference atom is hit exactly once, bit for bit.
    pub fn reproduces(&self, reference: &DiscreteMeasure) -> bool {
        if reference.len() != self.len() {
            return false;
        }
        let mut hits = vec![false; reference.len()];
        for (r, &j) in self.ranks.iter().zip(&self.assignment) {
            if hits[j] || reference.points()[j] != *r {
                return false;
            }
            hits[j] = true;
        }
        hits.iter().all(|&h| h)
    }

    /// CSV with columns `x_1..x_d, r_1..r_d`.
    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.data_points.first().map_or(0, HVec::dim);
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (1..=d)
            .map(|i| format!("x_{i}"))
            .chain((1..=d).map(|i| format!("r_{i}")))
            .collect();
        w.write_record(&header)?;
        for (x, r) in self.data_points.iter().zip(&self.ranks) {
            let row: Vec<String> = x
                .coeffs()
                .iter()
                .chain(r.coeffs())
                .map(f64::to_string)
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Orthonormal bases of `L²[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `1, √2 cos(πt), √2 cos(2πt), ...`
    Cosine,
    /// `1, √2 sin(2πt), √2 cos(2πt), √2 sin(4πt), ...`
    Fourier,
}

impl BasisKind {
    /// Value of the `k`-th (zero-based) basis function at `t ∈ [0, 1]`.
    pub fn eval(self, k: usize, t: f64) -> f64 {
        use std::f64::consts::{PI, SQRT_2};
        if k == 0 {
            return 1.0;
        }
        match self {
            BasisKind::Cosine => SQRT_2 * (k as f64 * PI * t).cos(),
            BasisKind::Fourier => {
                let freq = k.div_ceil(2) as f64;
                if k % 2 == 1 {
                    SQRT_2 * (2.0 * PI * freq * t).sin()
                } else {
                    SQRT_2 * (2.0 * PI * freq * t).cos()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Quadrature {
    Trapezoid,
    /// Left Riemann sums.
    Riemann,
    Explicit { weights: Vec<f64> },
}

impl Quadrature {
    /// Weights on `grid`, after rescaling the grid to `[0, 1]`.
    pub fn weights(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let n = grid.len();
        if n < 2 {
            return Err(Error::invalid("quadrature needs at least two grid points"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid must be strictly increasing"));
        }
        let span = grid[n - 1] - grid[0];
        let h: Vec<f64> = grid.windows(2).map(|w| (w[1] - w[0]) / span).collect();
        Ok(match self {
            Quadrature::Trapezoid => (0..n)
                .map(|l| {
                    let left = if l > 0 { h[l - 1] } else { 0.0 };
                    let right = if l < n - 1 { h[l] } else { 0.0 };
                    0.5 * (left + right)
                })
                .collect(),
            Quadrature::Riemann => (0..n).map(|l| if l < n - 1 { h[l] } else { 0.0 }).collect(),
            Quadrature::Explicit { weights } => {
                if weights.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: weights.len(),
                    });
                }
                weights.clone()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub basis: BasisKind,
    /// Number of coefficients kept (the truncation dimension).
    pub size: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature: Quadrature,
}

fn default_quadrature() -> Quadrature {
    Quadrature::Trapezoid
}

/// Curves sampled on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
}

/// Reads a CSV whose header row holds the grid points and whose remaining rows
/// are curves sampled on that grid.
pub fn read_curves_csv<R: Read>(input: R) -> Result<CurveTable> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("not a number: {s:?}")))
    };
    let grid = r
        .headers()?
        .iter()
        .map(parse)
        .collect::<Result<Vec<f64>>>()?;
    let mut curves = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec.iter().map(parse).collect::<Result<Vec<f64>>>()?;
        if row.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: row.len(),
            });
        }
        curves.push(row);
    }
    Ok(CurveTable { grid, curves })
}

/// Coefficients `c_k = Σ_l q_l f(t_l) φ_k(t_l)` of each curve.
pub fn project_curves(table: &CurveTable, config: &ProjectionConfig) -> Result<Vec<HVec>> {
    if config.size == 0 {
        return Err(Error::invalid("basis size must be at least 1"));
    }
    let q = config.quadrature.weights(&table.grid)?;
    let (t0, span) = (table.grid[0], table.grid[table.grid.len() - 1] - table.grid[0]);
    let phi: Vec<Vec<f64>> = (0..config.size)
        .map(|k| {
            table
                .grid
                .iter()
                .map(|t| config.basis.eval(k, (t - t0) / span))
                .collect()
        })
        .collect();
    table
        .curves
        .iter()
        .map(|f| {
            HVec::new(
                phi.iter()
                    .map(|p| {
                        f.iter()
                            .zip(p)
                            .zip(&q)
                            .map(|((f, p), q)| q * f * p)
                            .sum()
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Settings for [`local_gc_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGcConfig {
    pub data: MeasureSpec,
    pub reference: MeasureSpec,
    pub strategy: Discretization,
    /// Population rank map `∇ψ` pushing `data` to `reference`.
    pub population: PopulationMap,
    pub n_grid: Vec<usize>,
    pub k: CompactSet,
    pub directions: Vec<HVec>,
    pub seed: u64,
    #[serde(default = "one")]
    pub reps: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcRow {
    pub n: usize,
    pub rep: u64,
    pub direction: usize,
    /// `sup |⟨Tₙ(x) − ∇ψ(x), h⟩|` over data points in `K`; absent when no data
    /// point falls in `K`.
    pub gap: Option<f64>,
    pub in_k: usize,
}

/// For each `n` and replication, fits an empirical rank map and reports the
/// directional sup gap to the population map over data points in `K`.
pub fn local_gc_experiment(config: &LocalGcConfig) -> Result<Vec<GcRow>> {
    let d = config.data.dim();
    if config.reference.dim() != d || config.population.dim() != d {
        return Err(Error::invalid("data, reference and population map dimensions differ"));
    }
    if let Some(h) = config.directions.iter().find(|h| h.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: h.dim(),
        });
    }
    let jobs: Vec<(usize, u64)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.reps).map(move |r| (n, r)))
        .collect();
    let results: Vec<Result<Vec<GcRow>>> = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let mut src_rng = rng::stream(config.seed, rep, rng::lane(purpose::SOURCE, n as u64));
            let data = config.data.sample_with(n, &mut src_rng);
            let mut ref_rng = rng::stream(config.seed, rep, rng::lane(purpose::REFERENCE, n as u64));
            let atoms = discretize_with(&config.reference, n, config.strategy, &mut ref_rng)?;
            let rank = fit_rank(&data, &atoms)?;
            let mut sups = vec![None::<f64>; config.directions.len()];
            let mut in_k = 0;
            for (x, r) in rank.data_points().iter().zip(rank.ranks()) {
                if !config.k.contains(x) {
                    continue;
                }
                in_k += 1;
                let diff = r.checked_sub(&config.population.grad(x)?)?;
                for (s, h) in sups.iter_mut().zip(&config.directions) {
                    let g = inner(&diff, h)?.abs();
                    *s = Some(s.map_or(g, |v| v.max(g)));
                }
            }
            Ok(sups
                .into_iter()
                .enumerate()
                .map(|(direction, gap)| GcRow {
                    n,
                    rep,
                    direction,
                    gap,
                    in_k,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}
