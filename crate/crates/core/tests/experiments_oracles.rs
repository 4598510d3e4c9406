//! Experiment harnesses checked against direct summation, quantile algebra and
//! moment identities.

use hilbert_ot::experiments::{
    bootstrap_variance_se, printed_subdifferential, run_clt, run_counterexample_a,
    run_counterexample_b, run_stability, sigma2_formula, CltConfig, CompactSet, PiecewiseUniform,
    StabilityConfig,
};
use hilbert_ot::hilbert::HVec;
use hilbert_ot::maps::{affine_gaussian_map, PopulationMap};
use hilbert_ot::measures::{
    discretize_reference, DiscreteMeasure, Discretization, GaussianSpec, MeasureSpec,
    SphericalUniformSpec,
};
use hilbert_ot::ot::{MaxAffinePotential, SemidiscreteConfig};

#[test]
fn counterexample_a_norm_by_direct_summation() {
    let rows = run_counterexample_a(12, &[1]).unwrap();
    let mut sum = 0.0;
    for i in 1..=12 {
        let v = 2f64.powi(i) / i as f64;
        sum += v * v;
    }
    assert!((rows[0].full_norm - sum.sqrt()).abs() <= 1e-12 * sum.sqrt());
}

#[test]
fn counterexample_a_closed_form_gap() {
    let d = 12;
    let ns = [2u64, 4, 8, 16, 1 << 40];
    let rows = run_counterexample_a(d, &ns).unwrap();
    for (row, &n) in rows.iter().zip(&ns) {
        let rho = 2.0 / (2.0 - 1.0 / n as f64);
        let expected = (rho.powi(d as i32) - 1.0) / d as f64;
        assert!((row.full_gap - expected).abs() <= 1e-12, "n {n}");
        if row.threshold_met {
            assert!(row.norm > n as f64);
        }
    }
    // Ratios tend to 1, so the gap vanishes for very large n.
    assert!(rows.last().unwrap().full_gap.abs() < 1e-10);
}

#[test]
fn counterexample_b_map_is_monotone_on_a_fine_grid() {
    let q = PiecewiseUniform::new(vec![(0.0, 1.0), (2.0, 3.0)]).unwrap();
    for n in [1u64, 2, 5, 50] {
        let inv = 1.0 / n as f64;
        let p = PiecewiseUniform::new(vec![(0.0, 1.0 + inv), (2.0 + inv, 3.0)]).unwrap();
        let mut last_hi = f64::NEG_INFINITY;
        for k in 0..1000 {
            let x = -0.5 + 4.0 * k as f64 / 999.0;
            let (lo, hi) = p.monotone_subdifferential(&q, x);
            assert!(lo <= hi && lo >= last_hi, "n {n} x {x}");
            last_hi = hi;
        }
    }
}

#[test]
fn counterexample_b_interior_probes_converge() {
    let ns = [4u64, 16, 64, 256];
    let rows = run_counterexample_b(&ns, &[0.5, 1.0, 2.9]).unwrap();
    for r in &rows {
        if r.probe == 1.0 {
            assert_eq!(r.limit_value, 2.0);
            assert_eq!(r.sub_hi, 2.0);
            assert!((r.gap - 1.0).abs() < 1e-12);
        } else {
            assert!(r.gap <= 2.0 / r.n as f64, "{r:?}");
            assert!((r.limit_value - r.probe).abs() < 1e-12);
        }
    }
}

#[test]
fn printed_formula_agrees_where_it_applies() {
    for n in [2u64, 3, 10] {
        let inv = 1.0 / n as f64;
        let probes: Vec<f64> = (0..400).map(|k| -0.2 + 3.4 * k as f64 / 399.0).collect();
        let rows = run_counterexample_b(&[n], &probes).unwrap();
        for r in rows {
            let uncovered = r.probe > 2.0 && r.probe <= 2.0 + inv;
            // Outside [0, 3] neither measure has mass; the formula's identity
            // branch and the quantile map's clamping differ there.
            let outside = r.probe <= 0.0 || r.probe >= 3.0;
            match r.matches_printed {
                None => assert!(uncovered, "{r:?}"),
                Some(m) => assert!(m || outside, "{r:?}"),
            }
        }
        assert_eq!(printed_subdifferential(n, 2.0 + inv / 2.0), None);
    }
}

#[test]
fn sigma2_single_atom_is_chi_square_variance() {
    let p = MeasureSpec::from(GaussianSpec::from_stds(HVec::zeros(1), vec![1.0]).unwrap());
    // One atom at 0.7: ψ(x) = 0.7x, ‖x‖² − 2ψ(x) = (x − 0.7)² − 0.49.
    let psi = MaxAffinePotential::new(vec![HVec::new(vec![0.7]).unwrap()], vec![0.0]).unwrap();
    let est = sigma2_formula(&psi, &p, 1_000_000, 4).unwrap();
    // Var((ξ − a)²) = 2 + 4a² for ξ ~ N(0,1).
    let expected = 2.0 + 4.0 * 0.49;
    assert!(
        (est.value - expected).abs() <= 3.0 * est.std_error,
        "{} ± {} vs {expected}",
        est.value,
        est.std_error
    );
    let centred = MaxAffinePotential::new(vec![HVec::zeros(1)], vec![0.0]).unwrap();
    let est = sigma2_formula(&centred, &p, 1_000_000, 5).unwrap();
    assert!((est.value - 2.0).abs() <= 3.0 * est.std_error);
}

fn small_clt(reps: usize) -> CltConfig {
    let p = MeasureSpec::from(GaussianSpec::from_stds(HVec::zeros(1), vec![1.0]).unwrap());
    let q = discretize_reference(
        &MeasureSpec::from(SphericalUniformSpec::isotropic(1).unwrap()),
        4,
        Discretization::QuantileGrid,
        0,
    )
    .unwrap()
    .measure;
    CltConfig {
        p,
        q,
        n: 100,
        reps,
        seed: 12,
        semidiscrete: SemidiscreteConfig::default(),
        mc_n: 200_000,
    }
}

#[test]
fn clt_statistics_are_centred_and_scaled() {
    let report = run_clt(&small_clt(400)).unwrap();
    let mean = report.statistics.iter().sum::<f64>() / report.statistics.len() as f64;
    let scale = report.statistics.iter().map(|s| s.abs()).fold(0.0, f64::max);
    assert!(mean.abs() <= 1e-12 * scale);
    assert!(!report.degenerate);
    assert!(report.sigma2_formula.value > 0.0);
    assert!((0.0..=1.0).contains(&report.ks_to_normal));
    let costs_mean = report.costs.iter().sum::<f64>() / report.costs.len() as f64;
    let s0 = 10.0 * (report.costs[0] - costs_mean);
    assert!((report.statistics[0] - s0).abs() <= 1e-9 * (1.0 + s0.abs()));
}

#[test]
fn bootstrap_error_shrinks_by_root_two_when_reps_double() {
    let report = run_clt(&small_clt(1000)).unwrap();
    let half = bootstrap_variance_se(&report.statistics, 500, 2000, 1).unwrap();
    let full = bootstrap_variance_se(&report.statistics, 1000, 2000, 1).unwrap();
    let ratio = half / full;
    assert!(
        (ratio / std::f64::consts::SQRT_2 - 1.0).abs() <= 0.2,
        "ratio {ratio}"
    );
}

#[test]
fn stability_directional_gap_is_bounded_by_norm_gap() {
    let g = GaussianSpec::from_stds(HVec::zeros(3), vec![1.0, 0.7, 0.3]).unwrap();
    let t = GaussianSpec::from_stds(HVec::zeros(3), vec![0.4, 0.4, 0.9]).unwrap();
    let h = vec![
        HVec::new(vec![1.0, 0.0, 0.0]).unwrap(),
        HVec::new(vec![0.6, 0.8, 0.0]).unwrap(),
        HVec::new(vec![2.0, -1.0, 0.5]).unwrap(),
    ];
    let config = StabilityConfig {
        p: g.clone().into(),
        q: t.clone().into(),
        target_strategy: Discretization::SeededIid,
        target_atoms: None,
        population: PopulationMap::Gaussian(affine_gaussian_map(&g, &t).unwrap()),
        n_grid: vec![50, 200],
        k: CompactSet::ball(1.2),
        directions: h.clone(),
        seed: 77,
        reps: 3,
        bound: None,
        anchor: None,
        potential_grid: None,
    };
    let report = run_stability(&config).unwrap();
    for r in &report.rows {
        let hn = h[r.direction].norm();
        let (gap, norm) = (r.gap.unwrap(), r.norm_gap.unwrap());
        assert!(gap >= 0.0);
        assert!(gap <= hn * norm * (1.0 + 1e-12));
    }
}

#[test]
fn empty_compact_set_reports_missing_data() {
    let g = GaussianSpec::from_stds(HVec::zeros(1), vec![1.0]).unwrap();
    let config = StabilityConfig {
        p: g.clone().into(),
        q: g.clone().into(),
        target_strategy: Discretization::SeededIid,
        target_atoms: None,
        population: PopulationMap::Identity { dim: 1 },
        n_grid: vec![10],
        k: CompactSet {
            radius: 100.0,
            lower: Some(vec![50.0]),
            upper: None,
        },
        directions: vec![HVec::basis(1, 0)],
        seed: 0,
        reps: 1,
        bound: None,
        anchor: None,
        potential_grid: None,
    };
    let report = run_stability(&config).unwrap();
    assert_eq!(report.rows[0].gap, None);
    assert_eq!(report.rows[0].pairs_in_k, 0);
    assert!(!report.verdicts[0].decreasing);
}

#[test]
fn clt_rejects_mismatched_dimensions() {
    let mut config = small_clt(100);
    config.q = DiscreteMeasure::dirac(HVec::zeros(2));
    assert!(run_clt(&config).is_err());
}
