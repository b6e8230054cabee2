use greynoise::mlfun::{exact_moment_weights, exact_taylor};
use greynoise::moments::{
    coefficient_factor_exact, coefficient_oracle, isserlis_oracle, moment, moment_factor_exact, radial_moment,
};
use greynoise::multiindex::enumerate_up_to;
use greynoise::{make_ml, moment_weights, GramMatrix, MultiIndex, PhiDescriptor};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gram(rng: &mut ChaCha8Rng, d: usize) -> GramMatrix {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    GramMatrix::new(a.transpose() * a).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn gaussian_moments_match_pairings_and_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = moment_weights(&make_ml(&PhiDescriptor::Exp, 16).unwrap());
    let mut worst: f64 = 0.0;
    for trial in 0..25 {
        let d = 1 + trial % 4;
        let g = random_gram(&mut rng, d);
        for gamma in enumerate_up_to(d, 8).iter().filter(|g| g.degree() % 2 == 0) {
            let a = moment(gamma, &g, &m).unwrap().value;
            let b = isserlis_oracle(gamma, &g).unwrap();
            let c = coefficient_oracle(gamma, &g, &m).unwrap();
            worst = worst.max(rel(a, b)).max(rel(a, c));
        }
    }
    assert!(worst < 1e-12, "worst relative deviation {worst:e}");
}

#[test]
fn non_gaussian_moments_match_coefficient_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let phi = make_ml(&PhiDescriptor::ml(0.7), 16).unwrap();
    let m = moment_weights(&phi);
    let g = random_gram(&mut rng, 2);
    let gamma = MultiIndex::new(vec![4, 2]);
    let a = moment(&gamma, &g, &m).unwrap().value;
    let b = coefficient_oracle(&gamma, &g, &m).unwrap();
    assert!(rel(a, b) < 1e-12);
}

#[test]
fn scaling_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let m = moment_weights(&make_ml(&PhiDescriptor::ml(0.5), 16).unwrap());
    let g = random_gram(&mut rng, 3);
    let c = 1.7;
    for gamma in enumerate_up_to(3, 6) {
        let a = moment(&gamma, &g.scaled(c), &m).unwrap().value;
        let b = c.powi(gamma.degree() as i32 / 2) * moment(&gamma, &g, &m).unwrap().value;
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{gamma}");
    }
}

#[test]
fn radial_is_single_variable_moment() {
    let m = moment_weights(&make_ml(&PhiDescriptor::ml(0.8), 16).unwrap());
    let s2 = 0.6;
    let g = GramMatrix::from_rows(&[vec![s2]]).unwrap();
    for n in 0..=6u32 {
        let a = radial_moment(n, s2, &m).unwrap();
        let b = moment(&MultiIndex::new(vec![2 * n]), &g, &m).unwrap().value;
        assert!((a - b).abs() <= 1e-13 * a);
    }
}

#[test]
fn exact_route_agrees_with_exact_oracle() {
    let g: Vec<Vec<BigRational>> = vec![
        vec![BigRational::new(BigInt::from(3), BigInt::from(2)), BigRational::new(BigInt::from(-1), BigInt::from(3))],
        vec![BigRational::new(BigInt::from(-1), BigInt::from(3)), BigRational::new(BigInt::from(5), BigInt::from(7))],
    ];
    for gamma in enumerate_up_to(2, 10) {
        assert_eq!(moment_factor_exact(&gamma, &g).unwrap(), coefficient_factor_exact(&gamma, &g).unwrap(), "{gamma}");
    }
    // Gaussian weights make (2n)! m_n = (2n-1)!!
    let m = exact_moment_weights(&exact_taylor(&PhiDescriptor::Exp, 8).unwrap());
    let r = greynoise::moments::radial_moment_exact(4, &BigRational::from_integer(BigInt::from(1)), &m).unwrap();
    assert_eq!(r, BigRational::from_integer(BigInt::from(105)));
}
