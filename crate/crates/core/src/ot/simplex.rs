//! Primal network simplex on the complete bipartite transportation graph.
//!
//! Nodes `0..m` are source atoms, `m..m+n` target atoms, and `m+n` is an
//! artificial root. Every node starts attached to the root by an artificial arc
//! of cost `max cost + 1`, which is an exact big-M for this problem: any
//! feasible plan can reroute artificial flow through real arcs at lower cost.
//! The spanning tree is kept strongly feasible (Cunningham's leaving rule), which
//! rules out cycling under degeneracy.

use super::{cost_matrix, instance_dump, Coupling, CouplingEntry, DualSolution};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// Optimal coupling together with a certifying dual.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub coupling: Coupling,
    pub dual: DualSolution,
}

/// Flows below this are treated as zero when the support is extracted.
const FLOW_EPS: f64 = 1e-14;

/// Exact optimal transport between two discrete measures.
pub fn solve_transport(src: &DiscreteMeasure, tgt: &DiscreteMeasure) -> Result<TransportPlan> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: tgt.dim(),
        });
    }
    let cost = cost_matrix(src, tgt);
    let mut ns = NetworkSimplex::new(src.weights(), tgt.weights(), &cost);
    ns.run().map_err(|message| Error::Solver {
        message,
        dump: instance_dump(src, tgt),
    })?;

    let (m, n) = (src.len(), tgt.len());
    let mut entries = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let f = ns.flow[i * n + j];
            if f > FLOW_EPS {
                entries.push(CouplingEntry { i, j, mass: f });
            }
        }
    }
    let dual = DualSolution {
        u: (0..m).map(|i| -ns.pi[i]).collect(),
        w: (0..n).map(|j| ns.pi[m + j]).collect(),
    };
    let coupling = Coupling::new(src.clone(), tgt.clone(), entries).map_err(|e| Error::Solver {
        message: format!("extracted plan failed validation: {e}"),
        dump: instance_dump(src, tgt),
    })?;
    Ok(TransportPlan { coupling, dual })
}

struct NetworkSimplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    art_cost: f64,
    /// Real arcs `0..m·n` (arc `i·n + j` is `i → m+j`), then one artificial arc
    /// per non-root node.
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// `pred[v]` points from `v` to its parent.
    up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    adj: Vec<Vec<usize>>,
    next_arc: usize,
    block: usize,
    tol: f64,
}

impl<'a> NetworkSimplex<'a> {
    fn new(a: &[f64], b: &[f64], cost: &'a [f64]) -> Self {
        let (m, n) = (a.len(), b.len());
        let nodes = m + n + 1;
        let root = m + n;
        let real = m * n;
        let arcs = real + m + n;
        let max_cost = cost.iter().copied().fold(0.0, f64::max);
        let art_cost = max_cost + 1.0;

        let mut flow = vec![0.0; arcs];
        let mut in_tree = vec![false; arcs];
        let parent = vec![root; nodes];
        let mut pred = vec![usize::MAX; nodes];
        let mut up = vec![false; nodes];
        let mut depth = vec![1; nodes];
        let mut pi = vec![0.0; nodes];
        let mut adj = vec![Vec::new(); nodes];
        depth[root] = 0;
        for v in 0..m + n {
            let arc = real + v;
            in_tree[arc] = true;
            pred[v] = arc;
            adj[v].push(arc);
            adj[root].push(arc);
            if v < m {
                up[v] = true;
                flow[arc] = a[v];
                pi[v] = -art_cost;
            } else {
                flow[arc] = b[v - m];
                pi[v] = art_cost;
            }
        }
        NetworkSimplex {
            m,
            n,
            cost,
            art_cost,
            flow,
            in_tree,
            parent,
            pred,
            up,
            depth,
            pi,
            adj,
            next_arc: 0,
            block: ((arcs as f64).sqrt() as usize).max(10),
            tol: 1e-12 * art_cost.max(1.0),
        }
    }

    fn root(&self) -> usize {
        self.m + self.n
    }

    fn arc_src(&self, a: usize) -> usize {
        let real = self.m * self.n;
        if a < real {
            a / self.n
        } else {
            let v = a - real;
            if v < self.m {
                v
            } else {
                self.root()
            }
        }
    }

    fn arc_tgt(&self, a: usize) -> usize {
        let real = self.m * self.n;
        if a < real {
            self.m + a % self.n
        } else {
            let v = a - real;
            if v < self.m {
                self.root()
            } else {
                v
            }
        }
    }

    fn arc_cost(&self, a: usize) -> f64 {
        if a < self.m * self.n {
            self.cost[a]
        } else {
            self.art_cost
        }
    }

    fn reduced_cost(&self, a: usize) -> f64 {
        self.arc_cost(a) + self.pi[self.arc_src(a)] - self.pi[self.arc_tgt(a)]
    }

    /// Block search pricing: the most negative reduced cost within the first
    /// block that contains any eligible arc.
    fn find_entering(&mut self) -> Option<usize> {
        let arcs = self.flow.len();
        let mut best = None;
        let mut min = -self.tol;
        let mut count = self.block;
        for k in 0..arcs {
            let a = (self.next_arc + k) % arcs;
            if !self.in_tree[a] {
                let c = self.reduced_cost(a);
                if c < min {
                    min = c;
                    best = Some(a);
                }
            }
            count -= 1;
            if count == 0 {
                if best.is_some() {
                    self.next_arc = (a + 1) % arcs;
                    return best;
                }
                count = self.block;
            }
        }
        best
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    fn run(&mut self) -> std::result::Result<(), String> {
        let arcs = self.flow.len();
        let cap = 50 * arcs + 100_000;
        for _ in 0..cap {
            let Some(e) = self.find_entering() else {
                return Ok(());
            };
            self.pivot(e)?;
        }
        Err(format!("network simplex hit its iteration cap of {cap}"))
    }

    fn pivot(&mut self, e: usize) -> std::result::Result<(), String> {
        let first = self.arc_src(e);
        let second = self.arc_tgt(e);
        let join = self.join(first, second);

        // Flow is pushed first → second along the entering arc, so around the
        // cycle it travels second → join → first. Ties on the first side are
        // broken towards the join, on the second side away from it.
        let mut delta = f64::INFINITY;
        let mut out: Option<(usize, bool)> = None;
        let mut v = first;
        while v != join {
            if self.up[v] {
                let d = self.flow[self.pred[v]];
                if d < delta {
                    delta = d;
                    out = Some((v, true));
                }
            }
            v = self.parent[v];
        }
        let mut v = second;
        while v != join {
            if !self.up[v] {
                let d = self.flow[self.pred[v]];
                if d <= delta {
                    delta = d;
                    out = Some((v, false));
                }
            }
            v = self.parent[v];
        }
        let Some((u_out, on_first)) = out else {
            return Err("unbounded pivot cycle".to_string());
        };
        let delta = delta.max(0.0);

        if delta > 0.0 {
            self.flow[e] += delta;
            let mut v = first;
            while v != join {
                let a = self.pred[v];
                if self.up[v] {
                    self.flow[a] -= delta;
                } else {
                    self.flow[a] += delta;
                }
                v = self.parent[v];
            }
            let mut v = second;
            while v != join {
                let a = self.pred[v];
                if self.up[v] {
                    self.flow[a] += delta;
                } else {
                    self.flow[a] -= delta;
                }
                v = self.parent[v];
            }
        }

        // Swap arcs in the tree and re-hang the cut subtree below the entering arc.
        let leaving = self.pred[u_out];
        let (ls, lt) = (self.arc_src(leaving), self.arc_tgt(leaving));
        self.in_tree[leaving] = false;
        self.adj[ls].retain(|&a| a != leaving);
        self.adj[lt].retain(|&a| a != leaving);
        self.flow[leaving] = 0.0;
        self.in_tree[e] = true;
        self.adj[first].push(e);
        self.adj[second].push(e);
        let (start, new_parent) = if on_first {
            (first, second)
        } else {
            (second, first)
        };
        self.rehang(start, new_parent, e);
        Ok(())
    }

    fn attach(&mut self, child: usize, parent: usize, arc: usize) {
        self.parent[child] = parent;
        self.pred[child] = arc;
        self.up[child] = self.arc_src(arc) == child;
        self.depth[child] = self.depth[parent] + 1;
        let c = self.arc_cost(arc);
        self.pi[child] = if self.up[child] {
            self.pi[parent] - c
        } else {
            self.pi[parent] + c
        };
    }

    fn rehang(&mut self, start: usize, parent: usize, arc: usize) {
        self.attach(start, parent, arc);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            let pred = self.pred[v];
            for k in 0..self.adj[v].len() {
                let a = self.adj[v][k];
                if a == pred {
                    continue;
                }
                let s = self.arc_src(a);
                let child = if s == v { self.arc_tgt(a) } else { s };
                self.attach(child, v, a);
                stack.push(child);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::HVec;

    fn pts1(xs: &[f64]) -> Vec<HVec> {
        xs.iter().map(|&x| HVec::new(vec![x]).unwrap()).collect()
    }

    #[test]
    fn dirac_target_collects_all_mass() {
        let src = DiscreteMeasure::empirical(pts1(&[0.0, 1.0, 3.0])).unwrap();
        let tgt = DiscreteMeasure::dirac(HVec::new(vec![1.0]).unwrap());
        let plan = solve_transport(&src, &tgt).unwrap();
        assert_eq!(plan.coupling.entries().len(), 3);
        assert!((plan.coupling.cost() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unequal_weights_in_one_dimension() {
        // Monotone rearrangement: 0 → {0 (0.5)}, 1 → {0 (0.1), 2 (0.4)} etc.
        let src = DiscreteMeasure::new(pts1(&[0.0, 1.0]), vec![0.5, 0.5]).unwrap();
        let tgt = DiscreteMeasure::new(pts1(&[0.0, 2.0]), vec![0.6, 0.4]).unwrap();
        let plan = solve_transport(&src, &tgt).unwrap();
        // 0 → 0 (0.5), 1 → 0 (0.1), 1 → 2 (0.4)
        assert!((plan.coupling.cost() - (0.1 + 0.4)).abs() < 1e-12);
        let d = &plan.dual;
        assert!(d.max_violation(&src, &tgt).unwrap() <= 1e-9);
        assert!(d.slackness_gap(&plan.coupling).unwrap() <= 1e-9);
        assert!((d.objective(&src, &tgt) - plan.coupling.cost()).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = DiscreteMeasure::dirac(HVec::zeros(1));
        let b = DiscreteMeasure::dirac(HVec::zeros(2));
        assert!(matches!(
            solve_transport(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
