use greynoise::fockspace::wick_product;
use greynoise::kondratiev::{convolve, random_element, vage_constant, verify_vage, WeightSystem};
use greynoise::{GradedSeries, MultiIndex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

#[test]
fn thousand_random_pairs() {
    let w = WeightSystem::default();
    let c = vage_constant(4, 1, &w, 200).unwrap();
    assert!(c.tight <= c.product);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let f = random_element(&mut rng, 50, 8, 10);
        let g = random_element(&mut rng, 50, 8, 10);
        let r = verify_vage(&f, &g, 4, 1, &w, &c).unwrap();
        assert!(r.passed, "lhs {} rhs {}", r.lhs, r.rhs);
        worst = worst.max(r.ratio);
    }
    assert!(worst < 1.0);
}

#[test]
fn stress_sum_of_coordinates() {
    let w = WeightSystem::default();
    let c = vage_constant(4, 1, &w, 200).unwrap();
    let f = GradedSeries::from_terms((0..30).map(|j| (MultiIndex::unit(j), Complex64::new(1.0, 0.0))));
    let r = verify_vage(&f, &f, 4, 1, &w, &c).unwrap();
    assert!(r.passed && r.ratio > 0.0);
}

#[test]
fn convolution_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let f = random_element(&mut rng, 20, 5, 4);
        let g = random_element(&mut rng, 20, 5, 4);
        let fv: Vec<_> = f.iter().collect();
        let gv: Vec<_> = g.iter().collect();
        let mut brute: HashMap<MultiIndex, Complex64> = HashMap::new();
        for (fa, fc) in &fv {
            for (ga, gc) in &gv {
                let k = MultiIndex::new((0..4).map(|p| fa.get(p) + ga.get(p)).collect());
                *brute.entry(k).or_default() += *fc * *gc;
            }
        }
        let h = convolve(&f, &g);
        for (k, v) in &brute {
            assert!((h.get(k) - v).norm() < 1e-14);
        }
        assert_eq!(h.len(), brute.values().filter(|v| v.norm() != 0.0).count());
        assert_eq!(h, wick_product(&f, &g));
    }
}

#[test]
fn constructed_weights_are_supermultiplicative() {
    let w = WeightSystem::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let n = rng.random_range(0..10);
        let m = rng.random_range(0..10);
        let a = MultiIndex::new((0..5).map(|_| rng.random_range(0..4)).collect());
        let b = MultiIndex::new((0..5).map(|_| rng.random_range(0..4)).collect());
        let lhs = w.ln_weight_split(n + m, &a.add(&b));
        let rhs = w.ln_weight_split(n, &a) + w.ln_weight_split(m, &b);
        assert!(lhs >= rhs - 1e-12);
    }
}
