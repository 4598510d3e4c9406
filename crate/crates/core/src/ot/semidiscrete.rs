//! Semi-discrete transport from a sampled continuous source to a finite
//! target, by averaged stochastic ascent on the dual weights.
//!
//! With weights `w`, the cell of atom `j` is `{x : ‖x − yⱼ‖² − wⱼ minimal}`.
//! The dual is concave in `w` with gradient `qⱼ − P(cellⱼ)`, so ascent steps
//! `wⱼ += γₜ (qⱼ − P̂ₜ(cellⱼ))` drive every cell towards its target mass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MaxAffinePotential;
use crate::error::{Error, Result};
use crate::hilbert::HVec;
use crate::measures::{DiscreteMeasure, MeasureSpec};
use crate::rng::{self, purpose};

/// Smallest validation sample used to estimate cell masses.
pub const MIN_VALIDATION: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemidiscreteConfig {
    /// Source draws per ascent step.
    pub batch: usize,
    /// Maximum number of ascent steps.
    pub iters: usize,
    /// Step size `c/√t`.
    pub step: f64,
    pub seed: u64,
    /// Target for `maxⱼ |P̂(cellⱼ) − qⱼ|` on the validation sample.
    pub tol: f64,
    /// Validation sample size (raised to at least [`MIN_VALIDATION`]).
    pub validation: usize,
    /// Steps between convergence checks.
    pub check_every: usize,
    /// Point where the returned potential vanishes (origin when absent).
    pub anchor: Option<HVec>,
}

impl Default for SemidiscreteConfig {
    fn default() -> Self {
        SemidiscreteConfig {
            batch: 256,
            iters: 20_000,
            step: 1.0,
            seed: 0,
            tol: 0.005,
            validation: MIN_VALIDATION,
            check_every: 250,
            anchor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemidiscreteSolution {
    /// Normalised so that it vanishes at the anchor.
    pub potential: MaxAffinePotential,
    /// Averaged dual weights.
    pub weights: Vec<f64>,
    /// Ascent steps taken.
    pub iterations: usize,
    /// Final validation mismatch `maxⱼ |P̂(cellⱼ) − qⱼ|`.
    pub mismatch: f64,
}

/// Runs the ascent until the validation mismatch is at most `config.tol`.
pub fn semidiscrete_solve(
    src: &MeasureSpec,
    tgt: &DiscreteMeasure,
    config: &SemidiscreteConfig,
) -> Result<SemidiscreteSolution> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: tgt.dim(),
            found: src.dim(),
        });
    }
    if !src.is_regular() {
        return Err(Error::invalid(
            "semi-discrete source must be a non-degenerate Gaussian or full cube",
        ));
    }
    if config.batch == 0 || config.check_every == 0 || !(config.step > 0.0) {
        return Err(Error::invalid("batch, check_every and step must be positive"));
    }
    let anchor = match &config.anchor {
        Some(a) if a.dim() != tgt.dim() => {
            return Err(Error::DimensionMismatch {
                expected: tgt.dim(),
                found: a.dim(),
            })
        }
        Some(a) => a.clone(),
        None => HVec::zeros(tgt.dim()),
    };

    let m = tgt.len();
    let q = tgt.weights();
    let atoms = tgt.points();
    let mut val_rng = rng::stream(config.seed, 0, rng::lane(purpose::VALIDATION, 0));
    let validation = src.sample_with(config.validation.max(MIN_VALIDATION), &mut val_rng);
    let mismatch_of = |w: &[f64]| -> Result<f64> {
        let psi = MaxAffinePotential::from_weights(atoms, w)?;
        let counts = cell_counts(&psi, &validation);
        let n = validation.len() as f64;
        Ok(counts
            .iter()
            .zip(q)
            .map(|(c, q)| (*c as f64 / n - q).abs())
            .fold(0.0, f64::max))
    };
    let finish = |w: Vec<f64>, iterations: usize, mismatch: f64| -> Result<SemidiscreteSolution> {
        let potential = MaxAffinePotential::from_weights(atoms, &w)?.normalized_at(&anchor)?;
        Ok(SemidiscreteSolution {
            potential,
            weights: w,
            iterations,
            mismatch,
        })
    };

    let mut w = vec![0.0; m];
    let mismatch = mismatch_of(&w)?;
    if mismatch <= config.tol {
        return finish(w, 0, mismatch);
    }

    let mut rng = rng::stream(config.seed, 0, rng::lane(purpose::ASCENT, 0));
    // prefix[k] = sum of the iterates w_1..w_{k·check_every}
    let mut prefix: Vec<Vec<f64>> = vec![vec![0.0; m]];
    let mut running = vec![0.0; m];
    let mut last = (w.clone(), mismatch);
    let mut batch_counts = vec![0usize; m];
    for t in 1..=config.iters {
        let psi = MaxAffinePotential::from_weights(atoms, &w)?;
        batch_counts.fill(0);
        for _ in 0..config.batch {
            let x = src.draw(&mut rng);
            batch_counts[psi.argmax_raw(x.coeffs()).0] += 1;
        }
        let gamma = config.step / (t as f64).sqrt();
        let b = config.batch as f64;
        for j in 0..m {
            w[j] += gamma * (q[j] - batch_counts[j] as f64 / b);
        }
        for j in 0..m {
            running[j] += w[j];
        }
        if t % config.check_every == 0 {
            prefix.push(running.clone());
            let k = t / config.check_every;
            let half = k / 2;
            let span = (t - half * config.check_every) as f64;
            let avg: Vec<f64> = (0..m)
                .map(|j| (prefix[k][j] - prefix[half][j]) / span)
                .collect();
            let mismatch = mismatch_of(&avg)?;
            if mismatch <= config.tol {
                return finish(avg, t, mismatch);
            }
            last = (avg, mismatch);
        }
    }
    Err(Error::Convergence {
        iterations: config.iters,
        final_mismatch: last.1,
        tolerance: config.tol,
    })
}

/// Number of points falling in each cell (lowest index wins ties).
fn cell_counts(psi: &MaxAffinePotential, xs: &[HVec]) -> Vec<usize> {
    xs.par_chunks(4096)
        .map(|chunk| {
            let mut c = vec![0usize; psi.len()];
            for x in chunk {
                c[psi.argmax_raw(x.coeffs()).0] += 1;
            }
            c
        })
        .reduce(
            || vec![0usize; psi.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}
