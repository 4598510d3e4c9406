//! Rank maps checked against exhaustive search and closed-form distribution
//! functions.

use hilbert_ot::experiments::CompactSet;
use hilbert_ot::hilbert::HVec;
use hilbert_ot::maps::{gaussian_to_cube, PopulationMap};
use hilbert_ot::measures::{
    discretize_reference, CubeSpec, DiscreteMeasure, Discretization, GaussianSpec, MeasureSpec,
    SphericalUniformSpec, Spectrum,
};
use hilbert_ot::ot::{certify_pairs, CertifyOptions};
use hilbert_ot::ranks::{
    fit_rank, fit_rank_to_spec, local_gc_experiment, project_curves, BasisKind, CurveTable,
    LocalGcConfig, ProjectionConfig, Quadrature,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn random_curves(n: usize, grid: usize, rng: &mut ChaCha20Rng) -> CurveTable {
    let t: Vec<f64> = (0..grid).map(|k| k as f64 / (grid - 1) as f64).collect();
    let curves = (0..n)
        .map(|_| {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            let c: f64 = rng.random_range(-0.5..0.5);
            t.iter()
                .map(|&s| a + b * (3.0 * s).sin() + c * s * s)
                .collect()
        })
        .collect();
    CurveTable { grid: t, curves }
}

fn brute_force_cost(xs: &[HVec], ys: &[HVec]) -> f64 {
    let n = xs.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    // Heap's algorithm.
    let mut c = vec![0usize; n];
    let cost = |p: &[usize]| -> f64 {
        p.iter()
            .enumerate()
            .map(|(i, &j)| {
                xs[i]
                    .coeffs()
                    .iter()
                    .zip(ys[j].coeffs())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum()
    };
    best = best.min(cost(&perm));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

#[test]
fn functional_ranks_match_exhaustive_assignment() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let reference = MeasureSpec::from(SphericalUniformSpec::isotropic(8).unwrap());
    for seed in 0..10 {
        let table = random_curves(6, 64, &mut rng);
        let config = ProjectionConfig {
            basis: BasisKind::Cosine,
            size: 8,
            quadrature: Quadrature::Trapezoid,
        };
        let data = project_curves(&table, &config).unwrap();
        let rank = fit_rank_to_spec(&data, &reference, Discretization::SeededIid, seed).unwrap();
        let atoms: Vec<HVec> = rank.ranks().to_vec();
        let fitted: f64 = data
            .iter()
            .zip(&atoms)
            .map(|(x, r)| x.dist_sq(r).unwrap())
            .sum();
        let best = brute_force_cost(&data, &atoms);
        assert!(fitted <= best + 1e-9 * (1.0 + best), "seed {seed}: {fitted} vs {best}");
    }
}

#[test]
fn rank_support_is_cyclically_monotone() {
    let reference = MeasureSpec::from(SphericalUniformSpec::isotropic(3).unwrap());
    let data = MeasureSpec::from(GaussianSpec::from_stds(HVec::zeros(3), vec![1.0, 2.0, 0.5]).unwrap())
        .sample(40, 5)
        .unwrap();
    let rank = fit_rank_to_spec(&data, &reference, Discretization::SeededIid, 5).unwrap();
    let cert = certify_pairs(&rank.pairs(), &CertifyOptions::default()).unwrap();
    assert!(cert.passed(), "violation {}", cert.max_violation);
}

#[test]
fn pushforward_equals_reference_atom_for_atom() {
    let reference = MeasureSpec::from(SphericalUniformSpec::isotropic(5).unwrap());
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for seed in 0..20 {
        let table = random_curves(30, 50, &mut rng);
        let data = project_curves(
            &table,
            &ProjectionConfig {
                basis: BasisKind::Fourier,
                size: 5,
                quadrature: Quadrature::Trapezoid,
            },
        )
        .unwrap();
        let disc = discretize_reference(&reference, 30, Discretization::SeededIid, seed).unwrap();
        let rank = fit_rank(&data, &disc.measure).unwrap();
        assert!(rank.reproduces(&disc.measure));
        let push = rank.pushforward().unwrap();
        let mut a: Vec<Vec<f64>> = push.points().iter().map(|p| p.coeffs().to_vec()).collect();
        let mut b: Vec<Vec<f64>> = disc.measure.points().iter().map(|p| p.coeffs().to_vec()).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn one_dimensional_ranks_follow_the_normal_cdf() {
    let phi = Normal::new(0.0, 1.0).unwrap();
    let g = GaussianSpec::from_stds(HVec::zeros(1), vec![1.0]).unwrap();
    let u01 = CubeSpec::new(HVec::zeros(1), 1, Spectrum::Constant { value: 1.0 }).unwrap();
    let config = LocalGcConfig {
        data: g.clone().into(),
        reference: u01.clone().into(),
        strategy: Discretization::QuantileGrid,
        population: PopulationMap::GaussianToCube(gaussian_to_cube(&g, &u01).unwrap()),
        n_grid: vec![64, 256, 1024],
        k: CompactSet::ball(1.5),
        directions: vec![HVec::basis(1, 0)],
        seed: 8,
        reps: 1,
    };
    let rows = local_gc_experiment(&config).unwrap();
    let mut sups = Vec::new();
    for &n in &config.n_grid {
        // Independent recomputation: the rank of the k-th order statistic is k/(n+1).
        let data = MeasureSpec::from(g.clone());
        let mut rng = hilbert_ot::rng::stream(8, 0, hilbert_ot::rng::lane(hilbert_ot::rng::purpose::SOURCE, n as u64));
        let mut xs: Vec<f64> = data.sample_with(n, &mut rng).iter().map(|x| x[0]).collect();
        xs.sort_by(f64::total_cmp);
        let sup = xs
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() <= 1.5)
            .map(|(k, x)| ((k + 1) as f64 / (n + 1) as f64 - phi.cdf(*x)).abs())
            .fold(0.0, f64::max);
        let row = rows.iter().find(|r| r.n == n).unwrap();
        assert!((row.gap.unwrap() - sup).abs() <= 1e-9, "n {n}");
        sups.push(sup);
    }
    assert!(sups.windows(2).all(|w| w[1] < w[0]), "{sups:?}");
}

#[test]
fn gaussian_ranks_gap_shrinks_in_two_dimensions() {
    let p = GaussianSpec::from_stds(HVec::zeros(2), vec![1.0, 0.5]).unwrap();
    let q = GaussianSpec::from_stds(HVec::zeros(2), vec![0.5, 1.5]).unwrap();
    let config = LocalGcConfig {
        data: p.clone().into(),
        reference: q.clone().into(),
        strategy: Discretization::SeededIid,
        population: PopulationMap::Gaussian(hilbert_ot::maps::affine_gaussian_map(&p, &q).unwrap()),
        n_grid: vec![64, 1024],
        k: CompactSet::ball(1.0),
        directions: vec![HVec::basis(2, 0), HVec::basis(2, 1)],
        seed: 21,
        reps: 5,
    };
    let rows = local_gc_experiment(&config).unwrap();
    for rep in 0..5 {
        for dir in 0..2 {
            let at = |n: usize| {
                rows.iter()
                    .find(|r| r.rep == rep && r.n == n && r.direction == dir)
                    .and_then(|r| r.gap)
                    .unwrap()
            };
            assert!(at(1024) < at(64), "rep {rep} dir {dir}");
        }
    }
}

#[test]
fn rank_rejects_size_mismatch() {
    let data = vec![HVec::new(vec![0.0]).unwrap(), HVec::new(vec![1.0]).unwrap()];
    let reference = DiscreteMeasure::dirac(HVec::new(vec![0.5]).unwrap());
    assert!(fit_rank(&data, &reference).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn increasing_affine_maps_keep_the_assignment(
        xs in proptest::collection::hash_set(-1000i32..1000, 2..12),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let xs: Vec<f64> = xs.into_iter().map(|x| x as f64 / 100.0).collect();
        let n = xs.len();
        let reference = DiscreteMeasure::empirical(
            (1..=n).map(|i| HVec::new(vec![i as f64 / (n + 1) as f64]).unwrap()).collect(),
        ).unwrap();
        let data: Vec<HVec> = xs.iter().map(|&x| HVec::new(vec![x]).unwrap()).collect();
        let moved: Vec<HVec> = xs.iter().map(|&x| HVec::new(vec![scale * x + shift]).unwrap()).collect();
        let a = fit_rank(&data, &reference).unwrap();
        let b = fit_rank(&moved, &reference).unwrap();
        prop_assert_eq!(a.ranks(), b.ranks());
    }
}
