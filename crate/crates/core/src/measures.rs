//! Measure families: diagonal Gaussians, cube measures, the spherical uniform
//! `U·G/‖G‖`, and finitely supported (empirical) measures.

use rand::Rng;
use rand::distr::Open01;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{dist_sq, HVec};
use crate::rng::{self, StreamRng};

/// Coordinates closer than this (on every axis) are treated as the same atom.
pub const MERGE_TOL: f64 = 1e-12;

/// Rule generating a per-coordinate scale sequence `s_1, ..., s_d`.
///
/// Indices are one-based, matching the basis `e_1, e_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Spectrum {
    Explicit { values: Vec<f64> },
    Constant { value: f64 },
    /// `s_i = scale · ratio^i`
    Geometric { scale: f64, ratio: f64 },
    /// `s_i = scale · i^(-exponent)`
    Power { scale: f64, exponent: f64 },
}

impl Spectrum {
    pub fn values(&self, d: usize) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            Spectrum::Explicit { values } => {
                if values.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: values.len(),
                    });
                }
                values.clone()
            }
            Spectrum::Constant { value } => vec![*value; d],
            Spectrum::Geometric { scale, ratio } => {
                (1..=d).map(|i| scale * ratio.powi(i as i32)).collect()
            }
            Spectrum::Power { scale, exponent } => {
                (1..=d).map(|i| scale * (i as f64).powf(-exponent)).collect()
            }
        };
        if let Some(bad) = v.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(Error::invalid(format!(
                "spectrum entries must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GaussianRaw {
    dim: usize,
    #[serde(default)]
    mean: Option<HVec>,
    stds: Spectrum,
}

/// Gaussian `mean + Σ σᵢ ξᵢ eᵢ` with i.i.d. standard normal `ξᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianRaw", into = "GaussianRaw")]
pub struct GaussianSpec {
    mean: HVec,
    stds: Vec<f64>,
    generator: Spectrum,
}

impl TryFrom<GaussianRaw> for GaussianSpec {
    type Error = Error;

    fn try_from(raw: GaussianRaw) -> Result<Self> {
        let mean = raw.mean.unwrap_or_else(|| HVec::zeros(raw.dim.max(1)));
        GaussianSpec::with_mean(mean, raw.dim, raw.stds)
    }
}

impl From<GaussianSpec> for GaussianRaw {
    fn from(g: GaussianSpec) -> Self {
        GaussianRaw {
            dim: g.dim(),
            mean: Some(g.mean),
            stds: g.generator,
        }
    }
}

impl GaussianSpec {
    pub fn centered(d: usize, stds: Spectrum) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Self::with_mean(HVec::zeros(d), d, stds)
    }

    pub fn with_mean(mean: HVec, d: usize, stds: Spectrum) -> Result<Self> {
        if mean.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: mean.dim(),
            });
        }
        let values = stds.values(d)?;
        Ok(GaussianSpec {
            mean,
            stds: values,
            generator: stds,
        })
    }

    /// Shorthand for an explicit list of standard deviations.
    pub fn from_stds(mean: HVec, stds: Vec<f64>) -> Result<Self> {
        let d = stds.len();
        Self::with_mean(mean, d, Spectrum::Explicit { values: stds })
    }

    pub fn dim(&self) -> usize {
        self.stds.len()
    }

    pub fn mean(&self) -> &HVec {
        &self.mean
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn generator(&self) -> &Spectrum {
        &self.generator
    }

    pub fn is_non_degenerate(&self) -> bool {
        self.stds.iter().all(|&s| s > 0.0)
    }

    pub fn is_centered(&self) -> bool {
        self.mean.coeffs().iter().all(|&m| m == 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.stds.iter().map(|s| s * s).sum()
    }

    fn draw(&self, rng: &mut StreamRng) -> HVec {
        let c = self
            .mean
            .coeffs()
            .iter()
            .zip(&self.stds)
            .map(|(m, s)| {
                let xi: f64 = rng.sample(StandardNormal);
                m + s * xi
            })
            .collect();
        HVec::from_vec_unchecked(c)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CubeRaw {
    dim: usize,
    #[serde(default)]
    shift: Option<HVec>,
    scales: Spectrum,
}

/// Cube measure: law of `a + Σ λᵢ Uᵢ eᵢ`, `Uᵢ` i.i.d. Uniform(0,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CubeRaw", into = "CubeRaw")]
pub struct CubeSpec {
    shift: HVec,
    scales: Vec<f64>,
    generator: Spectrum,
}

impl TryFrom<CubeRaw> for CubeSpec {
    type Error = Error;

    fn try_from(raw: CubeRaw) -> Result<Self> {
        let shift = raw.shift.unwrap_or_else(|| HVec::zeros(raw.dim.max(1)));
        CubeSpec::new(shift, raw.dim, raw.scales)
    }
}

impl From<CubeSpec> for CubeRaw {
    fn from(c: CubeSpec) -> Self {
        CubeRaw {
            dim: c.dim(),
            shift: Some(c.shift),
            scales: c.generator,
        }
    }
}

impl CubeSpec {
    pub fn new(shift: HVec, d: usize, scales: Spectrum) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if shift.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: shift.dim(),
            });
        }
        let values = scales.values(d)?;
        Ok(CubeSpec {
            shift,
            scales: values,
            generator: scales,
        })
    }

    /// The cube `[−λ/2, λ/2]` centred at the origin.
    pub fn centered(d: usize, scales: Spectrum) -> Result<Self> {
        let values = scales.values(d)?;
        let shift = HVec::new(values.iter().map(|l| -0.5 * l).collect())?;
        Self::new(shift, d, scales)
    }

    /// A centred cube whose scales follow `shape`, rescaled so the support is
    /// exactly the largest cube of that shape inside the ball of radius `radius`.
    pub fn centered_in_ball(d: usize, shape: Spectrum, radius: f64) -> Result<Self> {
        let raw = shape.values(d)?;
        let norm = raw.iter().map(|l| l * l).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("cube shape must have a positive scale"));
        }
        let values: Vec<f64> = raw.iter().map(|l| 2.0 * radius * l / norm).collect();
        Self::centered(d, Spectrum::Explicit { values })
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn shift(&self) -> &HVec {
        &self.shift
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Point `a + λ ⊙ u` for `u ∈ [0,1]^d`.
    pub fn point_at(&self, u: &[f64]) -> HVec {
        HVec::from_vec_unchecked(
            self.shift
                .coeffs()
                .iter()
                .zip(&self.scales)
                .zip(u)
                .map(|((a, l), u)| a + l * u)
                .collect(),
        )
    }

    /// `sup ‖y‖` over the closed cube.
    pub fn support_radius(&self) -> f64 {
        self.shift
            .coeffs()
            .iter()
            .zip(&self.scales)
            .map(|(a, l)| a.abs().max((a + l).abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn draw(&self, rng: &mut StreamRng) -> HVec {
        let u: Vec<f64> = (0..self.dim()).map(|_| rng.sample(Open01)).collect();
        self.point_at(&u)
    }
}

/// Law of `U·G/‖G‖` with `U ~ Uniform(0,1)` independent of the Gaussian `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalUniformSpec {
    pub gaussian: GaussianSpec,
}

impl SphericalUniformSpec {
    pub fn new(gaussian: GaussianSpec) -> Result<Self> {
        if gaussian.trace() == 0.0 && gaussian.mean().norm() == 0.0 {
            return Err(Error::invalid(
                "spherical uniform needs a Gaussian that is not the point mass at 0",
            ));
        }
        Ok(SphericalUniformSpec { gaussian })
    }

    /// Standard isotropic version in dimension `d`.
    pub fn isotropic(d: usize) -> Result<Self> {
        Self::new(GaussianSpec::centered(d, Spectrum::Constant { value: 1.0 })?)
    }

    pub fn dim(&self) -> usize {
        self.gaussian.dim()
    }

    fn draw(&self, rng: &mut StreamRng) -> HVec {
        loop {
            let g = self.gaussian.draw(rng);
            let n = g.norm();
            if n > 0.0 {
                let u: f64 = rng.sample(Open01);
                return g.scale(u / n);
            }
        }
    }
}

/// Any of the parametric families above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MeasureSpec {
    Gaussian(GaussianSpec),
    Cube(CubeSpec),
    SphericalUniform(SphericalUniformSpec),
}

impl MeasureSpec {
    pub fn dim(&self) -> usize {
        match self {
            MeasureSpec::Gaussian(g) => g.dim(),
            MeasureSpec::Cube(c) => c.dim(),
            MeasureSpec::SphericalUniform(s) => s.dim(),
        }
    }

    /// Radius of a ball centred at 0 containing the support, if bounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            MeasureSpec::Gaussian(g) if g.trace() == 0.0 => Some(g.mean().norm()),
            MeasureSpec::Gaussian(_) => None,
            MeasureSpec::Cube(c) => Some(c.support_radius()),
            MeasureSpec::SphericalUniform(_) => Some(1.0),
        }
    }

    /// True when every sample equals the same point.
    pub fn is_point_mass(&self) -> bool {
        match self {
            MeasureSpec::Gaussian(g) => g.trace() == 0.0,
            MeasureSpec::Cube(c) => c.scales().iter().all(|&l| l == 0.0),
            MeasureSpec::SphericalUniform(_) => false,
        }
    }

    /// Regular in the sense needed by the semi-discrete solver: absolutely
    /// continuous at the truncation (non-degenerate Gaussian or full cube).
    pub fn is_regular(&self) -> bool {
        match self {
            MeasureSpec::Gaussian(g) => g.is_non_degenerate(),
            MeasureSpec::Cube(c) => c.scales().iter().all(|&l| l > 0.0),
            MeasureSpec::SphericalUniform(s) => s.gaussian.is_non_degenerate(),
        }
    }

    pub fn draw(&self, rng: &mut StreamRng) -> HVec {
        match self {
            MeasureSpec::Gaussian(g) => g.draw(rng),
            MeasureSpec::Cube(c) => c.draw(rng),
            MeasureSpec::SphericalUniform(s) => s.draw(rng),
        }
    }

    pub fn sample_with(&self, n: usize, rng: &mut StreamRng) -> Vec<HVec> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// `n` draws, deterministic in `(self, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<HVec>> {
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let mut rng = rng::stream(seed, 0, 0);
        Ok(self.sample_with(n, &mut rng))
    }
}

impl From<GaussianSpec> for MeasureSpec {
    fn from(g: GaussianSpec) -> Self {
        MeasureSpec::Gaussian(g)
    }
}

impl From<CubeSpec> for MeasureSpec {
    fn from(c: CubeSpec) -> Self {
        MeasureSpec::Cube(c)
    }
}

impl From<SphericalUniformSpec> for MeasureSpec {
    fn from(s: SphericalUniformSpec) -> Self {
        MeasureSpec::SphericalUniform(s)
    }
}

/// Finitely supported probability measure `Σ wⱼ δ_{yⱼ}`.
///
/// Atoms are pairwise distinct (within [`MERGE_TOL`]), weights are positive and
/// sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    points: Vec<HVec>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure, dropping zero-mass atoms and merging duplicates.
    pub fn new(points: Vec<HVec>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("discrete measure needs at least one atom"));
        }
        if points.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let d = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.dim(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        let (points, weights): (Vec<_>, Vec<_>) = points
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .unzip();
        let (points, mut weights) = merge_duplicates(points, weights);
        let total: f64 = weights.iter().sum();
        if total != 1.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        }
        Ok(DiscreteMeasure { points, weights })
    }

    /// Empirical measure `(1/n) Σ δ_{xᵢ}`; repeated points become one atom.
    pub fn empirical(points: Vec<HVec>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("empirical measure of an empty sample"));
        }
        let n = points.len();
        let w = 1.0 / n as f64;
        let merged = DiscreteMeasure::new(points, vec![w; n]);
        // Without duplicates keep the exact 1/n weights rather than renormalised ones.
        merged.map(|mut m| {
            if m.len() == n {
                m.weights.iter_mut().for_each(|x| *x = w);
            }
            m
        })
    }

    pub fn dirac(point: HVec) -> Self {
        DiscreteMeasure {
            points: vec![point],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn points(&self) -> &[HVec] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= 1e-12)
    }

    /// `max ‖yⱼ‖` over atoms.
    pub fn atom_radius(&self) -> f64 {
        self.points.iter().map(HVec::norm).fold(0.0, f64::max)
    }

    /// Law of `f(Y)` for `Y` distributed as `self`.
    pub fn pushforward(&self, f: impl Fn(&HVec) -> HVec) -> Result<Self> {
        let pts = self.points.iter().map(f).collect();
        DiscreteMeasure::new(pts, self.weights.clone())
    }

    pub fn translate(&self, shift: &HVec) -> Result<Self> {
        let pts = self
            .points
            .iter()
            .map(|p| p.checked_add(shift))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteMeasure {
            points: pts,
            weights: self.weights.clone(),
        })
    }
}

fn merge_duplicates(points: Vec<HVec>, weights: Vec<f64>) -> (Vec<HVec>, Vec<f64>) {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
    let mut owner: Vec<usize> = (0..n).collect();
    let mut merged = vec![false; n];
    for (pos, &i) in order.iter().enumerate() {
        if merged[i] {
            continue;
        }
        for &j in &order[pos + 1..] {
            if points[j][0] - points[i][0] > MERGE_TOL {
                break;
            }
            if !merged[j] && same_point(&points[i], &points[j]) {
                merged[j] = true;
                owner[j] = i;
            }
        }
    }
    if !merged.iter().any(|&m| m) {
        return (points, weights);
    }
    // Representatives are the earliest (lowest index) member of each class.
    let mut rep_of_class = vec![usize::MAX; n];
    for i in 0..n {
        let o = owner[i];
        rep_of_class[o] = rep_of_class[o].min(i);
    }
    let mut slot = vec![usize::MAX; n];
    let mut out_pts = Vec::new();
    let mut out_w: Vec<f64> = Vec::new();
    for i in 0..n {
        let o = owner[i];
        if slot[o] == usize::MAX {
            slot[o] = out_pts.len();
            out_pts.push(points[rep_of_class[o]].clone());
            out_w.push(0.0);
        }
        out_w[slot[o]] += weights[i];
    }
    (out_pts, out_w)
}

fn same_point(a: &HVec, b: &HVec) -> bool {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .all(|(x, y)| (x - y).abs() <= MERGE_TOL)
}

/// How a continuous reference measure is turned into `m` atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// `m` i.i.d. draws.
    SeededIid,
    /// The grid of quantiles at levels `i/(m+1)`; one-dimensional specs only.
    QuantileGrid,
    /// Randomly shifted Kronecker (R_d) sequence pushed through coordinatewise
    /// quantiles; cube and Gaussian specs.
    LowDiscrepancy,
}

/// Result of [`discretize_reference`], with the metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDiscretization {
    pub measure: DiscreteMeasure,
    pub strategy: Discretization,
    pub seed: u64,
    /// Radius of a ball centred at 0 containing every atom.
    pub bound: f64,
}

/// Uniform-weight `m`-atom approximation of `spec`.
pub fn discretize_reference(
    spec: &MeasureSpec,
    m: usize,
    strategy: Discretization,
    seed: u64,
) -> Result<ReferenceDiscretization> {
    let mut rng = rng::stream(seed, 0, rng::lane(rng::purpose::REFERENCE, m as u64));
    discretize_with(spec, m, strategy, &mut rng).map(|measure| ReferenceDiscretization {
        bound: spec
            .support_radius()
            .unwrap_or_else(|| measure.atom_radius()),
        measure,
        strategy,
        seed,
    })
}

/// As [`discretize_reference`], drawing randomness from `rng`.
pub fn discretize_with(
    spec: &MeasureSpec,
    m: usize,
    strategy: Discretization,
    rng: &mut StreamRng,
) -> Result<DiscreteMeasure> {
    if m == 0 {
        return Err(Error::invalid("reference needs at least one atom"));
    }
    let points = match strategy {
        Discretization::SeededIid => spec.sample_with(m, rng),
        Discretization::QuantileGrid => {
            if spec.dim() != 1 {
                return Err(Error::invalid("quantile-grid discretization is one-dimensional"));
            }
            let levels = (1..=m).map(|i| i as f64 / (m + 1) as f64);
            match spec {
                MeasureSpec::Cube(c) => levels.map(|u| c.point_at(&[u])).collect(),
                MeasureSpec::Gaussian(g) => levels
                    .map(|u| gaussian_quantile_point(g, &[u]))
                    .collect(),
                // In d = 1, U·G/|G| is uniform on (−1, 1).
                MeasureSpec::SphericalUniform(_) => levels
                    .map(|u| HVec::from_vec_unchecked(vec![2.0 * u - 1.0]))
                    .collect(),
            }
        }
        Discretization::LowDiscrepancy => {
            let d = spec.dim();
            let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let alpha = kronecker_step(d);
            let us = (1..=m).map(|k| {
                shift
                    .iter()
                    .zip(&alpha)
                    .map(|(s, a)| (s + k as f64 * a).fract())
                    .collect::<Vec<f64>>()
            });
            match spec {
                MeasureSpec::Cube(c) => us.map(|u| c.point_at(&u)).collect(),
                MeasureSpec::Gaussian(g) => {
                    // Avoid the infinite quantiles at 0.
                    us.map(|u| {
                        let u: Vec<f64> = u.iter().map(|x| x.max(f64::EPSILON)).collect();
                        gaussian_quantile_point(g, &u)
                    })
                    .collect()
                }
                MeasureSpec::SphericalUniform(_) => {
                    return Err(Error::invalid(
                        "low-discrepancy discretization is not defined for the spherical uniform",
                    ))
                }
            }
        }
    };
    DiscreteMeasure::empirical(points)
}

/// Step vector `(φ⁻¹, φ⁻², ..., φ⁻ᵈ)` of the R_d sequence, where φ is the
/// positive root of `x^(d+1) = x + 1`.
pub fn kronecker_step(d: usize) -> Vec<f64> {
    let mut phi = 2.0f64;
    for _ in 0..100 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|i| phi.powi(-(i as i32))).collect()
}

fn gaussian_quantile_point(g: &GaussianSpec, u: &[f64]) -> HVec {
    use statrs::distribution::{ContinuousCDF, Normal};
    let std_normal = Normal::standard();
    HVec::from_vec_unchecked(
        g.mean()
            .coeffs()
            .iter()
            .zip(g.stds())
            .zip(u)
            .map(|((m, s), u)| m + s * std_normal.inverse_cdf(*u))
            .collect(),
    )
}

/// Squared distance between two atoms, exposed for cost-matrix builders.
pub(crate) fn atom_cost(a: &HVec, b: &HVec) -> f64 {
    dist_sq(a.coeffs(), b.coeffs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::inner;
    use crate::stats::{ks_statistic, normal_cdf};

    fn gaussian(stds: &[f64]) -> MeasureSpec {
        GaussianSpec::from_stds(HVec::zeros(stds.len()), stds.to_vec())
            .unwrap()
            .into()
    }

    #[test]
    fn spectrum_rules() {
        let g = Spectrum::Geometric {
            scale: 1.0,
            ratio: 0.5,
        };
        assert_eq!(g.values(3).unwrap(), vec![0.5, 0.25, 0.125]);
        let p = Spectrum::Power {
            scale: 2.0,
            exponent: 1.0,
        };
        assert_eq!(p.values(2).unwrap(), vec![2.0, 1.0]);
        assert!(Spectrum::Constant { value: -1.0 }.values(2).is_err());
        assert!(Spectrum::Explicit { values: vec![1.0] }.values(2).is_err());
    }

    #[test]
    fn degenerate_gaussian_returns_the_mean() {
        let mean = HVec::new(vec![1.5, -2.0]).unwrap();
        let spec: MeasureSpec = GaussianSpec::from_stds(mean.clone(), vec![0.0, 0.0])
            .unwrap()
            .into();
        for x in spec.sample(20, 3).unwrap() {
            assert_eq!(x, mean);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let spec = gaussian(&[1.0, 0.5, 0.25]);
        let a = spec.sample(50, 11).unwrap();
        let b = spec.sample(50, 11).unwrap();
        let c = spec.sample(50, 12).unwrap();
        let bits = |v: &[HVec]| -> Vec<u64> {
            v.iter()
                .flat_map(|x| x.coeffs().iter().map(|c| c.to_bits()))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn negative_std_is_rejected() {
        assert!(GaussianSpec::from_stds(HVec::zeros(2), vec![1.0, -0.1]).is_err());
    }

    #[test]
    fn spherical_uniform_norms_are_uniform_below_one() {
        let spec: MeasureSpec = SphericalUniformSpec::new(
            GaussianSpec::from_stds(HVec::zeros(3), vec![1.0, 0.3, 2.0]).unwrap(),
        )
        .unwrap()
        .into();
        let xs = spec.sample(10_000, 5).unwrap();
        let norms: Vec<f64> = xs.iter().map(HVec::norm).collect();
        assert!(norms.iter().all(|&r| r < 1.0));
        let ks = ks_statistic(&norms, |r| r.clamp(0.0, 1.0));
        assert!(ks <= 0.02, "ks = {ks}");
    }

    #[test]
    fn cube_mean_is_one_half() {
        let spec: MeasureSpec = CubeSpec::new(
            HVec::zeros(2),
            2,
            Spectrum::Constant { value: 1.0 },
        )
        .unwrap()
        .into();
        let xs = spec.sample(100_000, 9).unwrap();
        for k in 0..2 {
            let m = xs.iter().map(|x| x[k]).sum::<f64>() / xs.len() as f64;
            assert!((m - 0.5).abs() < 0.01, "coordinate {k} mean {m}");
        }
    }

    #[test]
    fn gaussian_projections_pass_ks() {
        let stds = [1.0, 0.5, 0.25, 2.0];
        let mean = HVec::new(vec![0.5, -1.0, 0.0, 2.0]).unwrap();
        let spec: MeasureSpec = GaussianSpec::from_stds(mean.clone(), stds.to_vec())
            .unwrap()
            .into();
        let xs = spec.sample(10_000, 21).unwrap();
        let h = HVec::new(vec![0.3, -0.7, 1.1, 0.2]).unwrap();
        let m = inner(&mean, &h).unwrap();
        let s = stds
            .iter()
            .zip(h.coeffs())
            .map(|(s, h)| s * s * h * h)
            .sum::<f64>()
            .sqrt();
        let proj: Vec<f64> = xs.iter().map(|x| inner(x, &h).unwrap()).collect();
        let ks = ks_statistic(&proj, |t| normal_cdf((t - m) / s));
        // 1% critical value for n = 10⁴ is 1.63/√n.
        assert!(ks < 1.63 / 100.0, "ks = {ks}");
    }

    #[test]
    fn empirical_single_and_duplicate_points() {
        let x = HVec::new(vec![1.0, 2.0]).unwrap();
        let one = DiscreteMeasure::empirical(vec![x.clone()]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.weights(), &[1.0]);
        let two = DiscreteMeasure::empirical(vec![x.clone(), x.clone()]).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two.weights(), &[1.0]);
        assert!(DiscreteMeasure::empirical(vec![]).is_err());
    }

    #[test]
    fn near_duplicates_merge_with_summed_weight() {
        let a = HVec::new(vec![0.0, 1.0]).unwrap();
        let b = HVec::new(vec![1e-13, 1.0 - 1e-13]).unwrap();
        let c = HVec::new(vec![0.5, 0.5]).unwrap();
        let m = DiscreteMeasure::new(vec![c.clone(), a.clone(), b], vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(m.points(), &[c, a]);
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn zero_weights_are_dropped_and_bad_weights_rejected() {
        let a = HVec::new(vec![0.0]).unwrap();
        let b = HVec::new(vec![1.0]).unwrap();
        let m = DiscreteMeasure::new(vec![a.clone(), b.clone()], vec![1.0, 0.0]).unwrap();
        assert_eq!(m.len(), 1);
        assert!(DiscreteMeasure::new(vec![a.clone(), b.clone()], vec![0.7, 0.7]).is_err());
        assert!(DiscreteMeasure::new(vec![a, b], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn empirical_of_gaussian_draws_is_uniform() {
        let xs = gaussian(&[1.0, 1.0]).sample(500, 2).unwrap();
        let m = DiscreteMeasure::empirical(xs).unwrap();
        assert_eq!(m.len(), 500);
        assert!(m.weights().iter().all(|&w| w == 1.0 / 500.0));
        let total: f64 = m.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pushforward_is_a_valid_measure() {
        let xs = gaussian(&[1.0, 1.0]).sample(30, 4).unwrap();
        let m = DiscreteMeasure::empirical(xs).unwrap();
        // Collapsing map: every atom goes to its sign pattern.
        let p = m
            .pushforward(|x| x.map(|_, c| c.signum()).unwrap())
            .unwrap();
        assert!(p.len() <= 4);
        let total: f64 = p.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn quantile_grid_reproduces_i_over_n_plus_one() {
        let spec: MeasureSpec = CubeSpec::new(HVec::zeros(1), 1, Spectrum::Constant { value: 1.0 })
            .unwrap()
            .into();
        let r = discretize_reference(&spec, 9, Discretization::QuantileGrid, 0).unwrap();
        for (i, p) in r.measure.points().iter().enumerate() {
            assert!((p[0] - (i + 1) as f64 / 10.0).abs() < 1e-15);
        }
        assert!(r.measure.is_uniform());
        assert!(discretize_reference(
            &gaussian(&[1.0, 1.0]),
            4,
            Discretization::QuantileGrid,
            0
        )
        .is_err());
    }

    #[test]
    fn spherical_reference_atoms_lie_in_unit_ball() {
        let spec: MeasureSpec = SphericalUniformSpec::isotropic(3).unwrap().into();
        let r = discretize_reference(&spec, 64, Discretization::SeededIid, 8).unwrap();
        assert_eq!(r.measure.len(), 64);
        assert!(r.measure.points().iter().all(|p| p.norm() < 1.0));
        assert_eq!(r.bound, 1.0);
        let single = discretize_reference(&spec, 1, Discretization::SeededIid, 8).unwrap();
        assert_eq!(single.measure.len(), 1);
        assert!(single.measure.points()[0].norm() < 1.0);
    }

    #[test]
    fn low_discrepancy_cube_atoms_cover_each_axis_evenly() {
        let cube = CubeSpec::centered_in_ball(
            4,
            Spectrum::Geometric {
                scale: 1.0,
                ratio: 0.5,
            },
            1.0,
        )
        .unwrap();
        assert!((cube.support_radius() - 1.0).abs() < 1e-12);
        let spec: MeasureSpec = cube.clone().into();
        let r = discretize_reference(&spec, 256, Discretization::LowDiscrepancy, 3).unwrap();
        assert!(r.measure.points().iter().all(|p| p.norm() <= 1.0));
        for k in 0..4 {
            let u: Vec<f64> = r
                .measure
                .points()
                .iter()
                .map(|p| (p[k] - cube.shift()[k]) / cube.scales()[k])
                .collect();
            // Below the 5% critical value 1.36/√n for i.i.d. points.
            let ks = ks_statistic(&u, |x| x.clamp(0.0, 1.0));
            assert!(ks < 0.06, "axis {k}: ks = {ks}");
        }
    }

    #[test]
    fn kronecker_step_solves_its_polynomial() {
        for d in 1..8 {
            let a = kronecker_step(d);
            let phi = 1.0 / a[0];
            assert!((phi.powi(d as i32 + 1) - phi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn measure_spec_serde_round_trip() {
        let spec: MeasureSpec = GaussianSpec::centered(
            3,
            Spectrum::Geometric {
                scale: 1.0,
                ratio: 0.5,
            },
        )
        .unwrap()
        .into();
        let text = serde_json::to_string(&spec).unwrap();
        let back: MeasureSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let parsed: MeasureSpec = serde_json::from_str(
            r#"{"family":"cube","dim":2,"scales":{"rule":"constant","value":1.0}}"#,
        )
        .unwrap();
        assert_eq!(parsed.dim(), 2);
    }
}
