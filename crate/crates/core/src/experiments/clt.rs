//! Gaussian fluctuations of the empirical transport cost `T₂(Pₙ, Q)` against a
//! fixed discrete target, with variance `Var_P(‖X‖² − 2ψ(X))`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, MeasureSpec};
use crate::ot::{semidiscrete_solve, solve_transport, MaxAffinePotential, SemidiscreteConfig};
use crate::rng::{self, purpose};
use crate::stats::{compensated_sum, ks_statistic, mean, moments, normal_cdf};

/// Smallest Monte-Carlo sample used for the variance formula.
pub const MIN_MC: usize = 100_000;
/// Smallest number of replications accepted by [`run_clt`].
pub const MIN_REPS: usize = 100;

/// Intercepts are rounded to this grid after canonicalisation.
const INTERCEPT_GRID: f64 = 1.0 / (1u64 << 30) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigma2Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimate of `Var_P(‖X‖² − 2ψ(X))` from `max(mc_n, 10⁵)` draws.
///
/// The variance ignores constants added to `ψ`. To make that hold exactly in
/// floating point, intercepts are taken relative to the first one and rounded
/// to a `2⁻³⁰` grid, so `ψ` and `ψ + c` evaluate identically.
pub fn sigma2_formula(
    psi: &MaxAffinePotential,
    p: &MeasureSpec,
    mc_n: usize,
    seed: u64,
) -> Result<Sigma2Estimate> {
    if psi.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: p.dim(),
        });
    }
    if p.is_point_mass() {
        return Ok(Sigma2Estimate {
            value: 0.0,
            std_error: 0.0,
        });
    }
    let b0 = psi.intercepts()[0];
    let intercepts = psi
        .intercepts()
        .iter()
        .map(|b| ((b - b0) / INTERCEPT_GRID).round() * INTERCEPT_GRID)
        .collect();
    let canonical = MaxAffinePotential::new(psi.slopes().to_vec(), intercepts)?;
    let mut rng = rng::stream(seed, 0, rng::lane(purpose::MONTE_CARLO, 0));
    let values: Vec<f64> = (0..mc_n.max(MIN_MC))
        .map(|_| {
            let x = p.draw(&mut rng);
            x.norm_sq() - 2.0 * canonical.argmax_raw(x.coeffs()).1
        })
        .collect();
    let m = moments(&values);
    Ok(Sigma2Estimate {
        value: m.variance,
        std_error: m.variance_se,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltConfig {
    pub p: MeasureSpec,
    pub q: DiscreteMeasure,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Settings for the potential `ψ` of `P → Q`; its seed is replaced by `seed`.
    #[serde(default)]
    pub semidiscrete: SemidiscreteConfig,
    #[serde(default = "default_mc_n")]
    pub mc_n: usize,
}

fn default_mc_n() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    /// `√n (T₂(Pₙ, Q) − mean over reps)`, one per replication.
    pub statistics: Vec<f64>,
    /// Raw costs `T₂(Pₙ, Q)`.
    pub costs: Vec<f64>,
    pub sigma2_formula: Sigma2Estimate,
    /// Unbiased sample variance of `statistics`.
    pub sigma2_empirical: f64,
    /// KS distance of `statistics / σ` to `N(0, 1)`; 0 when degenerate.
    pub ks_to_normal: f64,
    /// `sigma2_empirical / sigma2_formula`; absent when degenerate.
    pub variance_ratio: Option<f64>,
    /// `P` is a point mass, so the statistic is constant and `σ² = 0`.
    pub degenerate: bool,
    /// Validation mismatch of the semi-discrete solve; absent when degenerate.
    pub semidiscrete_mismatch: Option<f64>,
}

pub fn run_clt(config: &CltConfig) -> Result<CltReport> {
    if config.reps < MIN_REPS {
        return Err(Error::invalid(format!(
            "reps must be at least {MIN_REPS}, got {}",
            config.reps
        )));
    }
    if config.n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if config.p.dim() != config.q.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.q.dim(),
            found: config.p.dim(),
        });
    }
    let costs: Vec<f64> = (0..config.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(
                config.seed,
                rep,
                rng::lane(purpose::SOURCE, config.n as u64),
            );
            let src = DiscreteMeasure::empirical(config.p.sample_with(config.n, &mut rng))?;
            Ok(solve_transport(&src, &config.q)?.coupling.cost())
        })
        .collect::<Result<_>>()?;
    let centre = mean(&costs);
    let root_n = (config.n as f64).sqrt();
    let mut statistics: Vec<f64> = costs.iter().map(|c| root_n * (c - centre)).collect();
    // Remove the rounding residue so the statistics average to zero.
    let residue = compensated_sum(statistics.iter().copied()) / statistics.len() as f64;
    statistics.iter_mut().for_each(|s| *s -= residue);
    let sigma2_empirical = moments(&statistics).variance;

    if config.p.is_point_mass() {
        return Ok(CltReport {
            statistics,
            costs,
            sigma2_formula: Sigma2Estimate {
                value: 0.0,
                std_error: 0.0,
            },
            sigma2_empirical,
            ks_to_normal: 0.0,
            variance_ratio: None,
            degenerate: true,
            semidiscrete_mismatch: None,
        });
    }

    let sd_config = SemidiscreteConfig {
        seed: config.seed,
        ..config.semidiscrete.clone()
    };
    let solution = semidiscrete_solve(&config.p, &config.q, &sd_config)?;
    let sigma2 = sigma2_formula(&solution.potential, &config.p, config.mc_n, config.seed)?;
    let sigma = sigma2.value.sqrt();
    let standardized: Vec<f64> = statistics.iter().map(|s| s / sigma).collect();
    Ok(CltReport {
        ks_to_normal: ks_statistic(&standardized, normal_cdf),
        variance_ratio: Some(sigma2_empirical / sigma2.value),
        statistics,
        costs,
        sigma2_formula: sigma2,
        sigma2_empirical,
        degenerate: false,
        semidiscrete_mismatch: Some(solution.mismatch),
    })
}

/// Standard deviation of the sample variance over `draws` resamples (with
/// replacement) of `size` statistics.
pub fn bootstrap_variance_se(stats: &[f64], size: usize, draws: usize, seed: u64) -> Result<f64> {
    if stats.is_empty() || size < 2 || draws < 2 {
        return Err(Error::invalid(
            "bootstrap needs data, resample size ≥ 2 and at least 2 draws",
        ));
    }
    let variances: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, b, rng::lane(purpose::BOOTSTRAP, size as u64));
            let sample: Vec<f64> = (0..size)
                .map(|_| stats[rng.random_range(0..stats.len())])
                .collect();
            moments(&sample).variance
        })
        .collect();
    Ok(moments(&variances).variance.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::HVec;
    use crate::measures::GaussianSpec;

    #[test]
    fn point_mass_source_is_degenerate() {
        let p: MeasureSpec = GaussianSpec::from_stds(HVec::zeros(1), vec![0.0])
            .unwrap()
            .into();
        assert!(p.is_point_mass());
        let q = DiscreteMeasure::new(
            vec![HVec::new(vec![-1.0]).unwrap(), HVec::new(vec![1.0]).unwrap()],
            vec![0.5, 0.5],
        )
        .unwrap();
        let report = run_clt(&CltConfig {
            p: p.clone(),
            q,
            n: 1,
            reps: 100,
            seed: 0,
            semidiscrete: SemidiscreteConfig::default(),
            mc_n: MIN_MC,
        })
        .unwrap();
        assert!(report.degenerate);
        assert!(report.statistics.iter().all(|s| *s == 0.0));
        assert_eq!(report.ks_to_normal, 0.0);
        let psi = MaxAffinePotential::new(vec![HVec::zeros(1)], vec![0.0]).unwrap();
        assert_eq!(sigma2_formula(&psi, &p, 10, 0).unwrap().value, 0.0);
    }

    #[test]
    fn shift_leaves_sigma2_bit_identical() {
        let p: MeasureSpec = GaussianSpec::from_stds(HVec::zeros(2), vec![1.0, 0.5])
            .unwrap()
            .into();
        let psi = MaxAffinePotential::new(
            vec![
                HVec::new(vec![0.3, -0.2]).unwrap(),
                HVec::new(vec![-0.5, 0.1]).unwrap(),
            ],
            vec![0.013, -0.271],
        )
        .unwrap();
        let a = sigma2_formula(&psi, &p, MIN_MC, 9).unwrap();
        let b = sigma2_formula(&psi.shifted(7.3), &p, MIN_MC, 9).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn too_few_reps_rejected() {
        let p: MeasureSpec = GaussianSpec::from_stds(HVec::zeros(1), vec![1.0])
            .unwrap()
            .into();
        let config = CltConfig {
            p,
            q: DiscreteMeasure::dirac(HVec::zeros(1)),
            n: 10,
            reps: 99,
            seed: 0,
            semidiscrete: SemidiscreteConfig::default(),
            mc_n: MIN_MC,
        };
        assert!(matches!(run_clt(&config), Err(Error::InvalidInput(_))));
    }
}
