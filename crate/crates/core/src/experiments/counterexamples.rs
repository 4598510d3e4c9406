//! The two ways stability breaks: unbounded target supports (a diagonal
//! Gaussian map whose images blow up), and compact sets touching the boundary
//! of the source support (a one-dimensional quantile map).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HVec;
use crate::maps::gaussian_map;
use crate::measures::{GaussianSpec, Spectrum};

/// One row of the unbounded-support table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleARow {
    pub n: u64,
    /// Truncation level of `x_m = Σ_{i≤m} eᵢ/i`.
    pub m: usize,
    /// `‖Tₙ(x_m)‖`.
    pub norm: f64,
    /// `‖Tₙ(x_m)‖ > n` was achieved within the truncation.
    pub threshold_met: bool,
    /// One-based index `k` of the direction `h = e_k`.
    pub direction: usize,
    /// `|⟨h, Tₙ(x_m) − x_m⟩|`.
    pub gap: f64,
    /// `⟨e_d, Tₙ(x_d) − x_d⟩` at the full truncation.
    pub full_gap: f64,
    /// `‖Tₙ(x_d)‖` at the full truncation.
    pub full_norm: f64,
}

/// `Tₙ` maps the Gaussian with `σᵢ = 2⁻ⁱ` to the one with `σᵢ = (2 − 1/n)⁻ⁱ`,
/// so `Tₙ(x)ᵢ = (2/(2 − 1/n))ⁱ xᵢ`. For each `n`, `m(n)` is the smallest
/// truncation of `x = Σ eᵢ/i` with `‖Tₙ(x_m)‖ > n`; when none exists below
/// `d` the full truncation is used and the row is flagged.
pub fn run_counterexample_a(d: usize, n_grid: &[u64]) -> Result<Vec<CounterexampleARow>> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let src = GaussianSpec::centered(d, Spectrum::Geometric { scale: 1.0, ratio: 0.5 })?;
    let x_full = HVec::new((1..=d).map(|i| 1.0 / i as f64).collect())?;
    let truncate = |m: usize| x_full.map(|i, c| if i < m { c } else { 0.0 });
    n_grid
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::invalid("n must be at least 1"));
            }
            let tgt = GaussianSpec::centered(
                d,
                Spectrum::Geometric {
                    scale: 1.0,
                    ratio: 1.0 / (2.0 - 1.0 / n as f64),
                },
            )?;
            let t = gaussian_map(&src, &tgt)?;
            let mut chosen = None;
            for m in 1..=d {
                let xm = truncate(m)?;
                let norm = t.apply(&xm)?.norm();
                if norm > n as f64 {
                    chosen = Some((m, xm, norm, true));
                    break;
                }
            }
            let full_image = t.apply(&x_full)?;
            let (m, xm, norm, threshold_met) = match chosen {
                Some(c) => c,
                None => (d, x_full.clone(), full_image.norm(), false),
            };
            let image = t.apply(&xm)?;
            Ok(CounterexampleARow {
                n,
                m,
                norm,
                threshold_met,
                direction: d,
                gap: (image[d - 1] - xm[d - 1]).abs(),
                full_gap: full_image[d - 1] - x_full[d - 1],
                full_norm: full_image.norm(),
            })
        })
        .collect()
}

/// Uniform law on a disjoint union of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseUniform {
    intervals: Vec<(f64, f64)>,
    total: f64,
}

impl PiecewiseUniform {
    /// `intervals` must be sorted and disjoint; empty ones (`a == b`) are dropped.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.iter().any(|(a, b)| b < a || !a.is_finite() || !b.is_finite()) {
            return Err(Error::invalid("intervals must be finite with a ≤ b"));
        }
        let intervals: Vec<(f64, f64)> = intervals.into_iter().filter(|(a, b)| b > a).collect();
        if intervals.is_empty() {
            return Err(Error::invalid("need at least one interval"));
        }
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::invalid("intervals must be sorted and disjoint"));
            }
        }
        let total = intervals.iter().map(|(a, b)| b - a).sum();
        Ok(PiecewiseUniform { intervals, total })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let covered: f64 = self
            .intervals
            .iter()
            .map(|&(a, b)| (x.min(b) - a).max(0.0))
            .sum();
        covered / self.total
    }

    /// `inf {y : F(y) ≥ u}`, the left-continuous quantile.
    pub fn quantile_left(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.total;
        let mut acc = 0.0;
        for &(a, b) in &self.intervals {
            let len = b - a;
            if acc + len >= target {
                return a + (target - acc).max(0.0);
            }
            acc += len;
        }
        self.intervals.last().unwrap().1
    }

    /// `inf {y : F(y) > u}`, the right-continuous quantile.
    pub fn quantile_right(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.total;
        let mut acc = 0.0;
        for &(a, b) in &self.intervals {
            let len = b - a;
            if acc + len > target {
                return a + (target - acc).max(0.0);
            }
            acc += len;
        }
        self.intervals.last().unwrap().1
    }

    /// Subdifferential `[T(x−), T(x+)]` at `x` of the convex potential of the
    /// monotone map `T = G⁻¹ ∘ F` from `self` to `target`.
    pub fn monotone_subdifferential(&self, target: &PiecewiseUniform, x: f64) -> (f64, f64) {
        let u = self.cdf(x);
        (target.quantile_left(u), target.quantile_right(u))
    }
}

/// One `(n, probe)` row of the boundary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleBRow {
    pub n: u64,
    pub probe: f64,
    /// `∂ψₙ(probe) = [sub_lo, sub_hi]`.
    pub sub_lo: f64,
    pub sub_hi: f64,
    /// `sup_{y ∈ ∂ψₙ(probe)} |y − probe|`.
    pub gap: f64,
    /// Upper end of `∂ψ(probe)` for the limit problem `P = Q`, i.e. the limit of
    /// `sub_hi` as `n → ∞`.
    pub limit_value: f64,
    /// The printed piecewise formula at this probe, when it covers it.
    pub printed_lo: Option<f64>,
    pub printed_hi: Option<f64>,
    /// Derived and printed subdifferentials agree (within 1e-12); absent when
    /// the printed formula does not cover the probe.
    pub matches_printed: Option<bool>,
}

/// The printed piecewise subdifferential, reading its second case as the
/// interval `(1, 1 + 1/n)`. `None` where no case applies.
pub fn printed_subdifferential(n: u64, x: f64) -> Option<(f64, f64)> {
    let inv = 1.0 / n as f64;
    if x == 1.0 {
        Some((1.0, 2.0))
    } else if x < 1.0 || x > 2.0 + inv {
        Some((x, x))
    } else if x < 1.0 + inv {
        Some((x + 1.0, x + 1.0))
    } else if x <= 2.0 {
        Some((2.0 + inv, 2.0 + inv))
    } else {
        None
    }
}

/// `Pₙ = U((0, 1+1/n) ∪ (2+1/n, 3))` to `Q = U((0,1) ∪ (2,3))` in closed form.
pub fn run_counterexample_b(n_grid: &[u64], probes: &[f64]) -> Result<Vec<CounterexampleBRow>> {
    let q = PiecewiseUniform::new(vec![(0.0, 1.0), (2.0, 3.0)])?;
    let mut rows = Vec::new();
    for &n in n_grid {
        if n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        let inv = 1.0 / n as f64;
        let p_n = PiecewiseUniform::new(vec![(0.0, 1.0 + inv), (2.0 + inv, 3.0)])?;
        for &x in probes {
            let (lo, hi) = p_n.monotone_subdifferential(&q, x);
            let (_, limit) = q.monotone_subdifferential(&q, x);
            let printed = printed_subdifferential(n, x);
            rows.push(CounterexampleBRow {
                n,
                probe: x,
                sub_lo: lo,
                sub_hi: hi,
                gap: (lo - x).abs().max((hi - x).abs()),
                limit_value: limit,
                printed_lo: printed.map(|p| p.0),
                printed_hi: printed.map(|p| p.1),
                matches_printed: printed
                    .map(|(a, b)| (a - lo).abs() <= 1e-12 && (b - hi).abs() <= 1e-12),
            });
        }
    }
    Ok(rows)
}
