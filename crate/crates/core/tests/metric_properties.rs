use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rmsmd_core::metric::{
    is_mutually_nearest, msmd_accelerated, msmd_bruteforce, msmd_voronoi_form, paired_rmsmd,
    Backend, MsmdBreakdown,
};
use rmsmd_core::{PointSet, Space};

/// Independent oracle: plain double loop, no shared helpers.
fn oracle_msmd(x: &[(f64, f64)], s: &[(f64, f64)]) -> f64 {
    let d2 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    let fwd: f64 = x
        .iter()
        .map(|&p| s.iter().map(|&q| d2(p, q)).fold(f64::INFINITY, f64::min))
        .sum();
    let bwd: f64 = s
        .iter()
        .map(|&q| x.iter().map(|&p| d2(p, q)).fold(f64::INFINITY, f64::min))
        .sum();
    (fwd + bwd) / (x.len() + s.len()) as f64
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn backends() -> [Backend; 4] {
    [
        Backend::KdTree,
        Backend::GridHash { bucket: None },
        Backend::GridHash { bucket: Some(50.0) },
        Backend::GridHash { bucket: Some(1e-3) },
    ]
}

fn assert_all_routes_agree(space: &Space, x: &PointSet, s: &PointSet) -> MsmdBreakdown {
    let brute = msmd_bruteforce(space, x, s).unwrap();
    for b in backends() {
        let acc = msmd_accelerated(space, x, s, b).unwrap();
        // same minima, same summation order
        assert_eq!(acc, brute, "{b:?}");
    }
    let vor = msmd_voronoi_form(space, x, s).unwrap();
    assert!(rel(vor.msmd, brute.msmd) <= 1e-12);
    assert!(rel(vor.forward_sum, brute.forward_sum) <= 1e-12);
    assert!(rel(vor.backward_sum, brute.backward_sum) <= 1e-12);
    brute
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| (rng.random_range(lo..hi), rng.random_range(lo..hi)))
        .collect()
}

#[test]
fn hand_example_matches_oracle() {
    let x = [(0.0, 0.0), (10.0, 0.0)];
    let s = [(1.0, 0.0)];
    assert_eq!(oracle_msmd(&x, &s), 83.0 / 3.0);
    let r = msmd_bruteforce(
        &Space::Euclidean,
        &PointSet::from_xy(&x).unwrap(),
        &PointSet::from_xy(&s).unwrap(),
    )
    .unwrap();
    assert_eq!(r.msmd, 83.0 / 3.0);
}

#[test]
fn random_500_point_pairs_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..10 {
        let nx = rng.random_range(1..=500);
        let ns = rng.random_range(1..=500);
        let x = random_set(&mut rng, nx, -500.0, 500.0);
        let s = random_set(&mut rng, ns, -300.0, 700.0);
        let px = PointSet::from_xy(&x).unwrap();
        let ps = PointSet::from_xy(&s).unwrap();
        let r = assert_all_routes_agree(&Space::Euclidean, &px, &ps);
        assert!(rel(r.msmd, oracle_msmd(&x, &s)) <= 1e-12);
    }
}

#[test]
fn two_thousand_points_on_a_torus() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let space = Space::torus(vec![3200.0, 3200.0]).unwrap();
    let x = PointSet::from_xy(&random_set(&mut rng, 2000, 0.0, 3200.0)).unwrap();
    let s = PointSet::from_xy(&random_set(&mut rng, 256, 0.0, 3200.0)).unwrap();
    assert_all_routes_agree(&space, &x, &s);
}

#[test]
fn three_dimensional_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let gen = |rng: &mut ChaCha8Rng, n: usize| {
        let v: Vec<f64> = (0..3 * n).map(|_| rng.random_range(0.0..100.0)).collect();
        PointSet::from_flat(3, v).unwrap()
    };
    let x = gen(&mut rng, 300);
    let s = gen(&mut rng, 40);
    assert_all_routes_agree(&Space::Euclidean, &x, &s);
    let t = Space::torus(vec![100.0, 100.0, 100.0]).unwrap();
    assert_all_routes_agree(&t, &x, &s);
}

#[test]
fn torus_agrees_with_plane_away_from_seams() {
    // every point at least a/2 from the seams of a 1000-wide torus, sets
    // closer to each other than to any seam
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let x = random_set(&mut rng, 200, 300.0, 700.0);
    let s = random_set(&mut rng, 50, 300.0, 700.0);
    let px = PointSet::from_xy(&x).unwrap();
    let ps = PointSet::from_xy(&s).unwrap();
    let t = Space::torus(vec![1000.0, 1000.0]).unwrap();
    assert_eq!(
        msmd_bruteforce(&t, &px, &ps).unwrap(),
        msmd_bruteforce(&Space::Euclidean, &px, &ps).unwrap()
    );
}

#[test]
fn paired_equals_full_under_mutual_nearest() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut s = Vec::new();
    for i in 0..8 {
        for j in 0..8 {
            s.push((i as f64 * 200.0, j as f64 * 200.0));
        }
    }
    let xhat: Vec<(f64, f64)> = s
        .iter()
        .map(|&(a, b)| (a + rng.random_range(-40.0..40.0), b + rng.random_range(-40.0..40.0)))
        .collect();
    let px = PointSet::from_xy(&xhat).unwrap();
    let ps = PointSet::from_xy(&s).unwrap();
    assert!(is_mutually_nearest(&Space::Euclidean, &px, &ps));
    let paired = paired_rmsmd(&Space::Euclidean, &px, &ps).unwrap();
    let full = oracle_msmd(&xhat, &s).sqrt();
    assert!(rel(paired, full) <= 1e-12);
}

fn int_set(max_len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(
        (-1000i32..1000, -1000i32..1000).prop_map(|(a, b)| (a as f64, b as f64)),
        1..max_len,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_and_backend_equivalent(x in int_set(120), s in int_set(120)) {
        let px = PointSet::from_xy(&x).unwrap();
        let ps = PointSet::from_xy(&s).unwrap();
        let ab = assert_all_routes_agree(&Space::Euclidean, &px, &ps);
        let ba = msmd_bruteforce(&Space::Euclidean, &ps, &px).unwrap();
        prop_assert_eq!(ab.msmd, ba.msmd);
        prop_assert!(ab.msmd >= 0.0 && ab.msmd.is_finite());
    }

    #[test]
    fn identity(x in int_set(200)) {
        let px = PointSet::from_xy(&x).unwrap();
        for b in backends() {
            prop_assert_eq!(msmd_accelerated(&Space::Euclidean, &px, &px, b).unwrap().msmd, 0.0);
        }
        prop_assert_eq!(msmd_voronoi_form(&Space::Euclidean, &px, &px).unwrap().msmd, 0.0);
    }

    #[test]
    fn translation_invariance(x in int_set(80), s in int_set(80), tx in -5000i32..5000, ty in -5000i32..5000) {
        let px = PointSet::from_xy(&x).unwrap();
        let ps = PointSet::from_xy(&s).unwrap();
        let t = [tx as f64 + 0.25, ty as f64 - 0.5];
        let base = msmd_bruteforce(&Space::Euclidean, &px, &ps).unwrap().msmd;
        let moved = msmd_bruteforce(&Space::Euclidean, &px.translated(&t), &ps.translated(&t)).unwrap().msmd;
        prop_assert!(rel(base, moved) <= 1e-12);
    }

    #[test]
    fn quadratic_scaling(x in int_set(80), s in int_set(80), c in 1e-3f64..1e3) {
        let px = PointSet::from_xy(&x).unwrap();
        let ps = PointSet::from_xy(&s).unwrap();
        let base = msmd_bruteforce(&Space::Euclidean, &px, &ps).unwrap().msmd;
        let scaled = msmd_bruteforce(&Space::Euclidean, &px.scaled(c), &ps.scaled(c)).unwrap().msmd;
        prop_assert!(rel(c * c * base, scaled) <= 1e-12);
    }

    #[test]
    fn torus_backends_agree(seed in any::<u64>(), nx in 1usize..300, ns in 1usize..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = Space::torus(vec![800.0, 600.0]).unwrap();
        let x: Vec<(f64, f64)> = (0..nx).map(|_| (rng.random_range(0.0..800.0), rng.random_range(0.0..600.0))).collect();
        let s: Vec<(f64, f64)> = (0..ns).map(|_| (rng.random_range(0.0..800.0), rng.random_range(0.0..600.0))).collect();
        assert_all_routes_agree(&space, &PointSet::from_xy(&x).unwrap(), &PointSet::from_xy(&s).unwrap());
    }
}
