//! Cyclic-monotonicity certificates: for a cycle `k₁, ..., k_L` of support
//! pairs, `Σ ⟨x_{k_l}, y_{k_{l+1}} − y_{k_l}⟩ ≤ 0` with `k_{L+1} = k₁`.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Coupling;
use crate::error::{Error, Result};
use crate::hilbert::{dot, HVec};
use crate::rng::{self, purpose};

/// Cycle count above which certification switches to random sampling.
pub const DEFAULT_CYCLE_BUDGET: u64 = 100_000;

/// A cyclic sum above this counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Number of independent RNG shards used in sampled mode.
const SHARDS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificationMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub max_cycle_len: usize,
    /// Cycles drawn in sampled mode.
    pub samples: u64,
    pub seed: u64,
    /// Exhaustive enumeration is used when the number of cycles is at most this.
    pub budget: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            max_cycle_len: 5,
            samples: DEFAULT_CYCLE_BUDGET,
            seed: 0,
            budget: DEFAULT_CYCLE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCertificate {
    pub mode: CertificationMode,
    /// Largest cyclic sum seen (`-inf` when no cycle exists).
    pub max_violation: f64,
    /// Positions in the support list of a cycle whose sum exceeds
    /// [`VIOLATION_TOL`], when one was found.
    pub witness: Option<Vec<usize>>,
    pub cycles_checked: u64,
}

impl MonotonicityCertificate {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Certifies the support of `coupling`, listed in entry order.
pub fn certify_cyclic_monotonicity(
    coupling: &Coupling,
    opts: &CertifyOptions,
) -> Result<MonotonicityCertificate> {
    let pairs: Vec<(HVec, HVec)> = coupling
        .entries()
        .iter()
        .map(|e| {
            (
                coupling.src().points()[e.i].clone(),
                coupling.tgt().points()[e.j].clone(),
            )
        })
        .collect();
    certify_pairs(&pairs, opts)
}

/// Certifies an arbitrary finite set of pairs `(x_k, y_k)`.
pub fn certify_pairs(
    pairs: &[(HVec, HVec)],
    opts: &CertifyOptions,
) -> Result<MonotonicityCertificate> {
    if opts.max_cycle_len < 2 {
        return Err(Error::invalid("cycles need length at least 2"));
    }
    if let Some((x, _)) = pairs.first() {
        let d = x.dim();
        if let Some((a, b)) = pairs.iter().find(|(a, b)| a.dim() != d || b.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: if a.dim() != d { a.dim() } else { b.dim() },
            });
        }
    }
    let s = pairs.len();
    // w[p][q] = ⟨x_p, y_q − y_p⟩, so a cycle's sum is the sum of its edge weights.
    let w: Vec<Vec<f64>> = pairs
        .iter()
        .map(|(x, yp)| {
            let base = dot(x.coeffs(), yp.coeffs());
            pairs
                .iter()
                .map(|(_, yq)| dot(x.coeffs(), yq.coeffs()) - base)
                .collect()
        })
        .collect();
    let max_len = opts.max_cycle_len.min(s);
    let total = cycle_count(s, max_len);
    let best = if total <= opts.budget as u128 {
        let per_start: Vec<Best> = (0..s)
            .into_par_iter()
            .map(|start| {
                let mut best = Best::default();
                let mut path = vec![start];
                let mut used = vec![false; s];
                used[start] = true;
                extend(&w, max_len, &mut path, &mut used, 0.0, &mut best);
                best
            })
            .collect();
        let mut best = Best::default();
        for b in per_start {
            best.merge(b);
        }
        best.mode = Some(CertificationMode::Exhaustive);
        best
    } else {
        let per_shard = opts.samples.div_ceil(SHARDS);
        let shards: Vec<Best> = (0..SHARDS)
            .into_par_iter()
            .map(|k| {
                let quota = per_shard.min(opts.samples.saturating_sub(k * per_shard));
                let mut rng = rng::stream(opts.seed, 0, rng::lane(purpose::CYCLES, k));
                let mut best = Best::default();
                for _ in 0..quota {
                    let len = rng.random_range(2..=max_len);
                    let cycle = index::sample(&mut rng, s, len).into_vec();
                    best.offer(cycle_sum(&w, &cycle), &cycle);
                }
                best
            })
            .collect();
        let mut best = Best::default();
        for b in shards {
            best.merge(b);
        }
        best.mode = Some(CertificationMode::Sampled);
        best
    };
    Ok(MonotonicityCertificate {
        mode: best.mode.unwrap_or(CertificationMode::Exhaustive),
        max_violation: best.value,
        witness: (best.value > VIOLATION_TOL).then_some(best.cycle),
        cycles_checked: best.count,
    })
}

/// Re-pairs `x_{k_l}` with `y_{k_{l+1}}` along `cycle`. The total cost
/// `Σ‖x − y‖²` changes by `−2 ×` the cycle's sum.
pub fn apply_cycle_swap(pairs: &[(HVec, HVec)], cycle: &[usize]) -> Vec<(HVec, HVec)> {
    let mut out = pairs.to_vec();
    for (l, &k) in cycle.iter().enumerate() {
        let next = cycle[(l + 1) % cycle.len()];
        out[k].1 = pairs[next].1.clone();
    }
    out
}

#[derive(Debug, Clone)]
struct Best {
    value: f64,
    cycle: Vec<usize>,
    count: u64,
    mode: Option<CertificationMode>,
}

impl Default for Best {
    fn default() -> Self {
        Best {
            value: f64::NEG_INFINITY,
            cycle: Vec::new(),
            count: 0,
            mode: None,
        }
    }
}

impl Best {
    fn offer(&mut self, value: f64, cycle: &[usize]) {
        self.count += 1;
        if value > self.value {
            self.value = value;
            self.cycle = cycle.to_vec();
        }
    }

    /// Merges in a fixed order so ties resolve the same way on any thread count.
    fn merge(&mut self, other: Best) {
        self.count += other.count;
        if other.value > self.value {
            self.value = other.value;
            self.cycle = other.cycle;
        }
    }
}

fn cycle_sum(w: &[Vec<f64>], cycle: &[usize]) -> f64 {
    (0..cycle.len())
        .map(|l| w[cycle[l]][cycle[(l + 1) % cycle.len()]])
        .sum()
}

/// Enumerates cycles whose smallest index is `path[0]`, each exactly once.
fn extend(
    w: &[Vec<f64>],
    max_len: usize,
    path: &mut Vec<usize>,
    used: &mut [bool],
    partial: f64,
    best: &mut Best,
) {
    let start = path[0];
    let last = *path.last().unwrap();
    for next in start + 1..w.len() {
        if used[next] {
            continue;
        }
        let p = partial + w[last][next];
        path.push(next);
        best.offer(p + w[next][start], path);
        if path.len() < max_len {
            used[next] = true;
            extend(w, max_len, path, used, p, best);
            used[next] = false;
        }
        path.pop();
    }
}

/// `Σ_{k=2}^{L} C(s, k)·(k − 1)!`, saturating.
fn cycle_count(s: usize, max_len: usize) -> u128 {
    let mut total: u128 = 0;
    for k in 2..=max_len {
        // C(s, k)·(k − 1)! = s·(s − 1)···(s − k + 1) / k
        let mut falling: u128 = 1;
        for t in 0..k {
            falling = falling.saturating_mul((s - t) as u128);
        }
        total = total.saturating_add(falling / k as u128);
    }
    total
}
