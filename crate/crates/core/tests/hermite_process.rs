use greynoise::hermite::verify_hermite_bounds;
use greynoise::kondratiev::WeightSystem;
use greynoise::process::{covariance_table, derivative_rate};
use greynoise::{make_ml, PhiDescriptor};

#[test]
fn envelope_holds_up_to_500() {
    let r = verify_hermite_bounds(500, 0.01).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.envelope.gamma > 0.0);
    assert!(r.envelope.a <= 0.7512 * 1.05);
}

#[test]
fn difference_quotient_is_linear_in_h() {
    let env = verify_hermite_bounds(100, 0.01).unwrap().envelope;
    let w = WeightSystem::default();
    for d in [PhiDescriptor::Exp, PhiDescriptor::ml(0.5)] {
        let phi = make_ml(&d, 32).unwrap();
        for t in [0.3, 1.0, 2.2] {
            let r = derivative_rate(t, 100, &phi, &w, 1, &env).unwrap();
            assert!(r.passed, "{d} t={t}: {r:?}");
        }
    }
}

#[test]
fn covariance_defect_shrinks_like_inverse_root() {
    // The defect at t = s comes from the two jumps of the indicator and
    // decays as J^{-1/2}; off-diagonal entries converge faster.
    let grid = [0.75, 1.5, 3.0];
    let coarse = covariance_table(&grid, 100).unwrap();
    let fine = covariance_table(&grid, 400).unwrap();
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(f.error < c.error, "{c:?} {f:?}");
        if c.t == c.s {
            let rate = c.error / f.error;
            assert!((1.7..2.3).contains(&rate), "{rate}");
        }
    }
}
