use greynoise::mlfun::{exact_moment_weights, exact_taylor};
use greynoise::orthopoly::{
    hermite_product_coeffs, orthonormal_basis, pphi_exponential_coeffs, pphi_exponential_combinatorial,
    recurrence_blocks, Prefactor,
};
use greynoise::{make_ml, moment_weights, GramMatrix, PhiDescriptor};

#[test]
fn orthonormal_and_three_term_for_exp_and_grey_noise() {
    for desc in [PhiDescriptor::Exp, PhiDescriptor::ml(0.5)] {
        let m = moment_weights(&make_ml(&desc, 16).unwrap());
        for d in 1..=3 {
            let basis = orthonormal_basis(d, 5, &GramMatrix::identity(d), &m).unwrap();
            assert!(basis.orthonormality_error() < 1e-8, "{desc} d={d}: {:e}", basis.orthonormality_error());
            assert!(basis.is_triangular());
            for j in 0..d {
                let mut prev_a = None;
                for n in 0..5 {
                    let r = recurrence_blocks(&basis, j, n).unwrap();
                    assert!(r.residual < 1e-8, "{desc} d={d} j={j} n={n}: {:e}", r.residual);
                    assert!(r.b.amax() < 1e-10, "{desc} d={d} j={j} n={n}: B = {:e}", r.b.amax());
                    if let Some(a) = prev_a {
                        let diff: nalgebra::DMatrix<f64> = r.c.clone() - nalgebra::DMatrix::<f64>::transpose(&a);
                        assert!(diff.amax() < 1e-8);
                    }
                    prev_a = Some(r.a.clone());
                }
            }
        }
    }
}

#[test]
fn gaussian_basis_is_hermite_products() {
    let m = moment_weights(&make_ml(&PhiDescriptor::Exp, 16).unwrap());
    for d in 1..=2 {
        let basis = orthonormal_basis(d, 6, &GramMatrix::identity(d), &m).unwrap();
        for (i, gamma) in basis.indices.iter().enumerate() {
            let he = hermite_product_coeffs(gamma, d);
            for (j, delta) in basis.indices.iter().enumerate() {
                let expect = he.get(delta).copied().unwrap_or(0.0);
                assert!((basis.coeffs[(i, j)] - expect).abs() < 1e-8, "{gamma} on {delta}");
            }
        }
    }
}

#[test]
fn pphi_routes_agree_exactly() {
    for desc in [PhiDescriptor::Exp, PhiDescriptor::bell(), PhiDescriptor::parse("custom:[1,0.5,0.25,0.125]").unwrap()] {
        let m = exact_moment_weights(&exact_taylor(&desc, 10).unwrap());
        let a = pphi_exponential_coeffs(&m, 10).unwrap();
        let b = pphi_exponential_combinatorial(&m, 10, Prefactor::Corrected).unwrap();
        assert_eq!(a, b, "{desc}");
    }
}
