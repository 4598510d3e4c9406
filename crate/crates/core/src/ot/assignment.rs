//! Linear assignment between equal-size point clouds (Hungarian algorithm,
//! shortest augmenting paths with potentials, O(n³)).

use super::{cost_matrix, Coupling, CouplingEntry};
use crate::error::{Error, Result};
use crate::hilbert::HVec;
use crate::measures::DiscreteMeasure;

/// Optimal permutation coupling between the empirical measures of `xs` and `ys`.
///
/// Each pair carries mass `1/n`, so the reported cost is the transport cost
/// between the two empirical measures.
pub fn solve_assignment(xs: &[HVec], ys: &[HVec]) -> Result<Coupling> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "assignment needs equal sizes, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    let src = DiscreteMeasure::empirical(xs.to_vec())?;
    let tgt = DiscreteMeasure::empirical(ys.to_vec())?;
    if src.len() != n || tgt.len() != n {
        return Err(Error::invalid("assignment inputs must be pairwise distinct"));
    }
    let cost = cost_matrix(&src, &tgt);
    let perm = hungarian(&cost, n);
    let mass = 1.0 / n as f64;
    let entries = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| CouplingEntry { i, j, mass })
        .collect();
    Coupling::new(src, tgt, entries)
}

/// Returns `perm` with `perm[row] = column` minimising `Σ cost[row][perm[row]]`.
pub(crate) fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    debug_assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    // One-based arrays; column 0 is a virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let ui0 = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - ui0 - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts1(xs: &[f64]) -> Vec<HVec> {
        xs.iter().map(|&x| HVec::new(vec![x]).unwrap()).collect()
    }

    #[test]
    fn small_integer_matrix() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let perm = hungarian(&cost, 3);
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn identical_clouds_match_identically() {
        let xs = pts1(&[0.3, -1.0, 2.5, 0.0]);
        let c = solve_assignment(&xs, &xs).unwrap();
        assert_eq!(c.as_permutation().unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(c.cost(), 0.0);
    }

    #[test]
    fn three_points_on_a_line_match_in_sorted_order() {
        let xs = pts1(&[0.1, 0.9, 0.5]);
        let ys = pts1(&[0.2, 0.8, 0.4]);
        let c = solve_assignment(&xs, &ys).unwrap();
        // 0.1↔0.2, 0.9↔0.8, 0.5↔0.4
        assert_eq!(c.as_permutation().unwrap(), vec![0, 1, 2]);
        assert!((c.cost() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn size_mismatch_and_duplicates_are_rejected() {
        assert!(solve_assignment(&pts1(&[0.0, 1.0]), &pts1(&[0.0])).is_err());
        assert!(solve_assignment(&pts1(&[0.0, 0.0]), &pts1(&[0.0, 1.0])).is_err());
    }
}
