//! Closed-form monotone maps (diagonal Gaussian maps, separable Gaussian-to-cube
//! maps) and the unbounded diagonal operator `A eᵢ = baseⁱ eᵢ` with its
//! null-domain diagnostic.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{dot, HVec};
use crate::measures::{CubeSpec, GaussianSpec};
use crate::ot::MaxAffinePotential;
use crate::rng::{self, purpose};
use crate::stats::{normal_cdf, normal_pdf};

/// `x ↦ Σ rᵢ xᵢ eᵢ`, the gradient of `½ Σ rᵢ xᵢ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMap {
    ratios: Vec<f64>,
}

impl DiagonalMap {
    pub fn new(ratios: Vec<f64>) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::invalid("diagonal map needs at least one ratio"));
        }
        if let Some(r) = ratios.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::invalid(format!(
                "ratios must be finite and nonnegative, got {r}"
            )));
        }
        Ok(DiagonalMap { ratios })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.ratios.len()
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    fn check(&self, x: &HVec) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &HVec) -> Result<HVec> {
        self.check(x)?;
        x.map(|i, c| self.ratios[i] * c)
    }

    /// `½ Σ rᵢ xᵢ²`.
    pub fn potential(&self, x: &HVec) -> Result<f64> {
        self.check(x)?;
        Ok(0.5
            * self
                .ratios
                .iter()
                .zip(x.coeffs())
                .map(|(r, c)| r * c * c)
                .sum::<f64>())
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &DiagonalMap) -> Result<DiagonalMap> {
        if inner.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: inner.dim(),
            });
        }
        DiagonalMap::new(
            self.ratios
                .iter()
                .zip(&inner.ratios)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }
}

/// Monotone map between centred diagonal Gaussians: `rᵢ = tgt.σᵢ / src.σᵢ`.
pub fn gaussian_map(src: &GaussianSpec, tgt: &GaussianSpec) -> Result<DiagonalMap> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: tgt.dim(),
        });
    }
    if !src.is_centered() || !tgt.is_centered() {
        return Err(Error::invalid(
            "closed-form Gaussian maps need centred measures; use affine_gaussian_map",
        ));
    }
    if !src.is_non_degenerate() {
        return Err(Error::invalid("source Gaussian has a zero standard deviation"));
    }
    DiagonalMap::new(
        tgt.stds()
            .iter()
            .zip(src.stds())
            .map(|(t, s)| t / s)
            .collect(),
    )
}

/// `x ↦ m_tgt + R(x − m_src)` for diagonal Gaussians with arbitrary means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineGaussianMap {
    pub src_mean: HVec,
    pub tgt_mean: HVec,
    pub linear: DiagonalMap,
}

pub fn affine_gaussian_map(src: &GaussianSpec, tgt: &GaussianSpec) -> Result<AffineGaussianMap> {
    let centred = |g: &GaussianSpec| {
        GaussianSpec::from_stds(HVec::zeros(g.dim()), g.stds().to_vec())
    };
    Ok(AffineGaussianMap {
        src_mean: src.mean().clone(),
        tgt_mean: tgt.mean().clone(),
        linear: gaussian_map(&centred(src)?, &centred(tgt)?)?,
    })
}

impl AffineGaussianMap {
    pub fn apply(&self, x: &HVec) -> Result<HVec> {
        self.linear
            .apply(&x.checked_sub(&self.src_mean)?)?
            .checked_add(&self.tgt_mean)
    }

    /// `½ Σ rᵢ (xᵢ − m_src,ᵢ)² + ⟨m_tgt, x⟩`.
    pub fn potential(&self, x: &HVec) -> Result<f64> {
        let centred = x.checked_sub(&self.src_mean)?;
        Ok(self.linear.potential(&centred)? + dot(self.tgt_mean.coeffs(), x.coeffs()))
    }
}

/// Monotone map from a diagonal Gaussian to a cube measure, coordinatewise
/// `yᵢ = aᵢ + λᵢ Φ((xᵢ − mᵢ)/σᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableCubeMap {
    pub src: GaussianSpec,
    pub tgt: CubeSpec,
}

pub fn gaussian_to_cube(src: &GaussianSpec, tgt: &CubeSpec) -> Result<SeparableCubeMap> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: tgt.dim(),
        });
    }
    if !src.is_non_degenerate() {
        return Err(Error::invalid("source Gaussian has a zero standard deviation"));
    }
    Ok(SeparableCubeMap {
        src: src.clone(),
        tgt: tgt.clone(),
    })
}

impl SeparableCubeMap {
    fn check(&self, x: &HVec) -> Result<()> {
        if x.dim() != self.src.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.src.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    fn standardized(&self, x: &HVec) -> impl Iterator<Item = f64> + '_ {
        let x = x.coeffs().to_vec();
        self.src
            .mean()
            .coeffs()
            .iter()
            .zip(self.src.stds())
            .zip(x)
            .map(|((m, s), x)| (x - m) / s)
    }

    pub fn apply(&self, x: &HVec) -> Result<HVec> {
        self.check(x)?;
        let u: Vec<f64> = self.standardized(x).map(normal_cdf).collect();
        Ok(self.tgt.point_at(&u))
    }

    /// `Σ aᵢxᵢ + λᵢσᵢ (tᵢΦ(tᵢ) + φ(tᵢ))` with `tᵢ = (xᵢ − mᵢ)/σᵢ`.
    pub fn potential(&self, x: &HVec) -> Result<f64> {
        self.check(x)?;
        let linear = dot(self.tgt.shift().coeffs(), x.coeffs());
        let curved: f64 = self
            .standardized(x)
            .zip(self.tgt.scales())
            .zip(self.src.stds())
            .map(|((t, l), s)| l * s * (t * normal_cdf(t) + normal_pdf(t)))
            .sum();
        Ok(linear + curved)
    }
}

/// Population map `∇ψ` used as ground truth by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationMap {
    Identity { dim: usize },
    Gaussian(AffineGaussianMap),
    GaussianToCube(SeparableCubeMap),
    MaxAffine(MaxAffinePotential),
}

impl PopulationMap {
    pub fn dim(&self) -> usize {
        match self {
            PopulationMap::Identity { dim } => *dim,
            PopulationMap::Gaussian(g) => g.linear.dim(),
            PopulationMap::GaussianToCube(c) => c.src.dim(),
            PopulationMap::MaxAffine(p) => p.dim(),
        }
    }

    pub fn grad(&self, x: &HVec) -> Result<HVec> {
        match self {
            PopulationMap::Identity { dim } => {
                if x.dim() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        found: x.dim(),
                    });
                }
                Ok(x.clone())
            }
            PopulationMap::Gaussian(g) => g.apply(x),
            PopulationMap::GaussianToCube(c) => c.apply(x),
            PopulationMap::MaxAffine(p) => Ok(p.grad(x)?.value),
        }
    }

    pub fn potential(&self, x: &HVec) -> Result<f64> {
        match self {
            PopulationMap::Identity { .. } => Ok(0.5 * x.norm_sq()),
            PopulationMap::Gaussian(g) => g.potential(x),
            PopulationMap::GaussianToCube(c) => c.potential(x),
            PopulationMap::MaxAffine(p) => p.value(x),
        }
    }
}

/// The diagonal operator `A eᵢ = baseⁱ eᵢ` (one-based `i`), unbounded on the
/// full space and evaluated at a truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathologicalOperator {
    pub base: f64,
    pub dim: usize,
}

impl PathologicalOperator {
    pub fn new(base: f64, dim: usize) -> Result<Self> {
        if dim == 0 || !base.is_finite() || base <= 0.0 {
            return Err(Error::invalid("operator needs d ≥ 1 and a positive finite base"));
        }
        Ok(PathologicalOperator { base, dim })
    }

    pub fn apply(&self, x: &HVec) -> Result<HVec> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        x.map(|i, c| self.base.powi(i as i32 + 1) * c)
    }
}

/// Draws of `X = Σ ξᵢ/8ⁱ eᵢ` and their images `AX` under `A eᵢ = 4ⁱ eᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathologicalSample {
    pub xi: Vec<Vec<f64>>,
    pub inputs: Vec<HVec>,
    pub outputs: Vec<HVec>,
    /// Every output equals `Σ ξᵢ/2ⁱ eᵢ` bit for bit.
    pub exact: bool,
}

/// Pushes `ξ ↦ Σ ξᵢ/8ⁱ eᵢ` through `A eᵢ = 4ⁱ eᵢ`. All scalings are powers of
/// two, so `AX = Σ ξᵢ/2ⁱ eᵢ` holds exactly in floating point.
pub fn pathological_push_from(xi: Vec<Vec<f64>>) -> Result<PathologicalSample> {
    let d = xi.first().map_or(0, Vec::len);
    let op = PathologicalOperator::new(4.0, d.max(1))?;
    let mut inputs = Vec::with_capacity(xi.len());
    let mut outputs = Vec::with_capacity(xi.len());
    let mut exact = true;
    for z in &xi {
        if z.len() != d || d == 0 {
            return Err(Error::invalid("every ξ needs the same positive length"));
        }
        let x = HVec::new(
            z.iter()
                .enumerate()
                .map(|(i, v)| v / 8f64.powi(i as i32 + 1))
                .collect(),
        )?;
        let ax = op.apply(&x)?;
        exact &= ax
            .coeffs()
            .iter()
            .enumerate()
            .all(|(i, c)| *c == z[i] / 2f64.powi(i as i32 + 1));
        inputs.push(x);
        outputs.push(ax);
    }
    Ok(PathologicalSample {
        xi,
        inputs,
        outputs,
        exact,
    })
}

/// `n` seeded draws for [`pathological_push_from`].
pub fn pathological_push(d: usize, n: usize, seed: u64) -> Result<PathologicalSample> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let mut rng = rng::stream(seed, 0, rng::lane(purpose::MONTE_CARLO, d as u64));
    let xi = (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    pathological_push_from(xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullDomainRow {
    pub seed: u64,
    pub d: usize,
    pub s_d: f64,
}

/// Partial sums `S_d = Σ_{i≤d} 2ⁱ ξᵢ²` for `d = 1..=d_max`, one trajectory per
/// seed `0..seeds` (replication streams of `base_seed`). Rows are ordered by
/// seed, then `d`.
pub fn null_domain_diagnostic(d_max: usize, seeds: u64, base_seed: u64) -> Result<Vec<NullDomainRow>> {
    if d_max == 0 {
        return Err(Error::invalid("d_max must be at least 1"));
    }
    let rows: Vec<Vec<NullDomainRow>> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::stream(base_seed, s, rng::lane(purpose::MONTE_CARLO, 0));
            let xi: Vec<f64> = (0..d_max).map(|_| rng.sample(StandardNormal)).collect();
            null_domain_partial_sums(&xi)
                .into_iter()
                .enumerate()
                .map(|(k, s_d)| NullDomainRow {
                    seed: s,
                    d: k + 1,
                    s_d,
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// `S_1, ..., S_d` for a given `ξ`.
pub fn null_domain_partial_sums(xi: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    xi.iter()
        .enumerate()
        .map(|(i, x)| {
            acc += 2f64.powi(i as i32 + 1) * x * x;
            acc
        })
        .collect()
}

/// `E[S_d] = 2^(d+1) − 2`.
pub fn null_domain_expectation(d: usize) -> f64 {
    2f64.powi(d as i32 + 1) - 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Spectrum;

    fn v(c: &[f64]) -> HVec {
        HVec::new(c.to_vec()).unwrap()
    }

    fn geometric(d: usize, ratio: f64) -> GaussianSpec {
        GaussianSpec::centered(d, Spectrum::Geometric { scale: 1.0, ratio }).unwrap()
    }

    #[test]
    fn identical_gaussians_give_the_identity() {
        let g = geometric(4, 0.5);
        assert_eq!(gaussian_map(&g, &g).unwrap().ratios(), &[1.0; 4]);
    }

    #[test]
    fn degenerate_or_shifted_sources_are_rejected() {
        let flat = GaussianSpec::from_stds(HVec::zeros(2), vec![1.0, 0.0]).unwrap();
        let g = geometric(2, 0.5);
        assert!(gaussian_map(&flat, &g).is_err());
        let shifted = GaussianSpec::from_stds(v(&[1.0, 0.0]), vec![1.0, 1.0]).unwrap();
        assert!(gaussian_map(&shifted, &g).is_err());
        let aff = affine_gaussian_map(&shifted, &g).unwrap();
        // The source mean goes to the target mean.
        assert_eq!(aff.apply(&v(&[1.0, 0.0])).unwrap(), HVec::zeros(2));
    }

    #[test]
    fn composition_multiplies_ratios() {
        let p = geometric(3, 0.5);
        let q = geometric(3, 0.25);
        let r = geometric(3, 0.9);
        let direct = gaussian_map(&r, &q).unwrap();
        let composed = gaussian_map(&p, &q)
            .unwrap()
            .compose(&gaussian_map(&r, &p).unwrap())
            .unwrap();
        for (a, b) in direct.ratios().iter().zip(composed.ratios()) {
            assert!((a - b).abs() <= 1e-15 * a);
        }
    }

    #[test]
    fn cube_map_potential_differentiates_to_the_map() {
        let src = GaussianSpec::from_stds(v(&[0.2, -0.1]), vec![1.0, 0.5]).unwrap();
        let tgt = CubeSpec::centered(2, Spectrum::Explicit { values: vec![1.0, 0.4] }).unwrap();
        let map = gaussian_to_cube(&src, &tgt).unwrap();
        let x = v(&[0.3, 0.7]);
        let y = map.apply(&x).unwrap();
        let eps = 1e-6;
        for i in 0..2 {
            let e = HVec::basis(2, i).scale(eps);
            let fd = (map.potential(&x.checked_add(&e).unwrap()).unwrap()
                - map.potential(&x.checked_sub(&e).unwrap()).unwrap())
                / (2.0 * eps);
            assert!((fd - y[i]).abs() < 1e-8);
        }
        // Source mean goes to the cube centre.
        assert_eq!(map.apply(src.mean()).unwrap(), HVec::zeros(2));
    }

    #[test]
    fn unit_xi_example() {
        let s = pathological_push_from(vec![vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(s.inputs[0], v(&[0.125, 1.0 / 64.0, 1.0 / 512.0]));
        assert_eq!(s.outputs[0], v(&[0.5, 0.25, 0.125]));
        assert!(s.exact);
        let zero = pathological_push_from(vec![vec![0.0; 4]]).unwrap();
        assert_eq!(zero.outputs[0], HVec::zeros(4));
    }

    #[test]
    fn null_domain_partial_sums_are_nondecreasing() {
        let rows = null_domain_diagnostic(8, 5, 1).unwrap();
        assert_eq!(rows.len(), 40);
        for w in rows.windows(2) {
            if w[0].seed == w[1].seed {
                assert!(w[1].s_d >= w[0].s_d);
            }
        }
        assert_eq!(null_domain_partial_sums(&[1.0]), vec![2.0]);
        assert_eq!(null_domain_partial_sums(&[1.0, 0.5]), vec![2.0, 3.0]);
        assert_eq!(null_domain_expectation(1), 2.0);
        assert_eq!(null_domain_expectation(10), 2046.0);
    }
}
