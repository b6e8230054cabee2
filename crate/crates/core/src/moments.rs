//! Mixed moments E[Q^γ] of the coordinates Q_{s_1}, …, Q_{s_d}.
//!
//! The main route sums over the solutions β of the symmetric Diophantine
//! system:
//!
//! ```text
//! E[Q^γ] = (2n)! m_n · Num / Den,  |γ| = 2n
//! Num = Σ_β (n; β) Π_{i<j} 2^{β_ij} g_ij^{β_ij} Π_i g_ii^{β_ii}
//! Den = Num with every g replaced by 1
//! ```
//!
//! Two independent oracles are provided: the coefficient of t^γ in
//! (tᵀGt)ⁿ, and (for φ = exp only) the sum over perfect matchings.

use crate::error::{Error, Result};
use crate::graded::{Coeff, GradedSeries};
use crate::mlfun::MomentWeights;
use crate::multiindex::{factorial, multinomial, solve_diophantine, MultiIndex, PairAssignment};
use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub const DEFAULT_MAX_DEGREE: u32 = 12;
pub const DEFAULT_MAX_DIM: usize = 6;
const PSD_TOL: f64 = 1e-10;

/// Gram matrix g_ij = ⟨s_i, s_j⟩ of the test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    g: DMatrix<f64>,
}

impl GramMatrix {
    /// Validates symmetry and positive semidefiniteness.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() || g.nrows() == 0 {
            return Err(Error::InvalidParameter("Gram matrix must be square and nonempty".into()));
        }
        let scale = g.amax().max(1.0);
        if (&g - g.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidParameter("Gram matrix is not symmetric".into()));
        }
        let min = g.clone().symmetric_eigenvalues().min();
        if min < -PSD_TOL * scale {
            return Err(Error::InvalidParameter(format!("Gram matrix is not PSD (min eigenvalue {min:e})")));
        }
        Ok(Self { g })
    }

    pub fn identity(d: usize) -> Self {
        Self { g: DMatrix::identity(d, d) }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter("Gram matrix rows must all have length d".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// c·G
    pub fn scaled(&self, c: f64) -> Self {
        Self { g: &self.g * c }
    }
}

/// A moment together with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentResult {
    pub value: f64,
    /// Half-degree n (|γ| = 2n); for odd degree this is ⌊|γ|/2⌋.
    pub n: u32,
    pub solution_count: usize,
}

/// Exact ingredients of the Diophantine sum: Σ_β (n;β)·2^{off-diagonal |β|}.
pub fn diophantine_den(gamma: &MultiIndex) -> BigUint {
    solve_diophantine(gamma).iter().map(pair_weight).sum()
}

/// (n; β) Π_{i<j} 2^{β_ij} with n = |β|.
fn pair_weight(beta: &PairAssignment) -> BigUint {
    let parts: Vec<u32> = beta.iter_upper().map(|(_, _, b)| b).collect();
    let off: u32 = beta.iter_upper().filter(|(i, j, _)| i != j).map(|(_, _, b)| b).sum();
    multinomial(beta.total(), &parts).expect("parts sum to |β| by construction") << off as usize
}

fn check_limits(gamma: &MultiIndex, d: usize, max_degree: u32) -> Result<()> {
    if gamma.support_len() > d {
        return Err(Error::InvalidParameter(format!("{gamma} has support beyond the Gram dimension {d}")));
    }
    if gamma.degree() > max_degree {
        return Err(Error::DegreeLimit { degree: gamma.degree() as usize, max: max_degree as usize });
    }
    Ok(())
}

/// E[Q^γ] with the default degree limit.
pub fn moment(gamma: &MultiIndex, g: &GramMatrix, m: &MomentWeights) -> Result<MomentResult> {
    moment_with_limit(gamma, g, m, DEFAULT_MAX_DEGREE)
}

/// E[Q^γ] refusing |γ| above `max_degree`.
pub fn moment_with_limit(gamma: &MultiIndex, g: &GramMatrix, m: &MomentWeights, max_degree: u32) -> Result<MomentResult> {
    check_limits(gamma, g.dim(), max_degree)?;
    let deg = gamma.degree();
    let n = deg / 2;
    if deg % 2 == 1 {
        return Ok(MomentResult { value: 0.0, n, solution_count: 0 });
    }
    let sols = solve_diophantine(gamma);
    let mut num = 0.0;
    let mut den = BigUint::zero();
    for beta in &sols {
        let w = pair_weight(beta);
        let mut prod = w.to_f64().unwrap_or(f64::INFINITY);
        for (i, j, b) in beta.iter_upper() {
            if b > 0 {
                prod *= g.get(i, j).powi(b as i32);
            }
        }
        num += prod;
        den += w;
    }
    let lead = BigRational::new(BigInt::from(factorial(2 * n)), BigInt::from(den));
    let value = lead.to_f64().unwrap_or(f64::NAN) * m.get(n as usize)? * num;
    Ok(MomentResult { value, n, solution_count: sols.len() })
}

/// R(γ, G) such that E[Q^γ] = R · m_n, exactly for rational G.
/// Returns zero for odd degree.
pub fn moment_factor_exact(gamma: &MultiIndex, g: &[Vec<BigRational>]) -> Result<BigRational> {
    check_limits(gamma, g.len(), DEFAULT_MAX_DEGREE)?;
    let deg = gamma.degree();
    if deg % 2 == 1 {
        return Ok(BigRational::zero());
    }
    let mut num = BigRational::zero();
    let mut den = BigUint::zero();
    for beta in solve_diophantine(gamma) {
        let w = pair_weight(&beta);
        let mut prod = BigRational::from_integer(BigInt::from(w.clone()));
        for (i, j, b) in beta.iter_upper() {
            for _ in 0..b {
                prod *= &g[i][j];
            }
        }
        num += prod;
        den += w;
    }
    Ok(BigRational::from_integer(BigInt::from(factorial(deg))) * num / BigRational::from_integer(BigInt::from(den)))
}

/// E[Q_s^{2n}] = (2n)! m_n ‖s‖^{2n}.
pub fn radial_moment(n: u32, s_norm_sq: f64, m: &MomentWeights) -> Result<f64> {
    if s_norm_sq < 0.0 {
        return Err(Error::InvalidParameter("‖s‖² must be nonnegative".into()));
    }
    Ok(crate::special::factorial(2 * n) * m.get(n as usize)? * s_norm_sq.powi(n as i32))
}

/// Exact radial moment for rational weights and ‖s‖².
pub fn radial_moment_exact(n: u32, s_norm_sq: &BigRational, m: &[BigRational]) -> Result<BigRational> {
    let mn = m.get(n as usize).ok_or(Error::DegreeLimit { degree: n as usize, max: m.len().saturating_sub(1) })?;
    let mut pow = BigRational::one();
    for _ in 0..n {
        pow *= s_norm_sq;
    }
    Ok(BigRational::from_integer(BigInt::from(factorial(2 * n))) * mn * pow)
}

/// L(s) = Σ m_n ‖s‖^{2n} with a tail estimate.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceValue {
    pub value: f64,
    pub tail_bound: f64,
}

pub fn laplace_transform(m: &MomentWeights, s_norm_sq: f64) -> Result<LaplaceValue> {
    let w = m.as_slice();
    let k = w.len() - 1;
    let value = crate::series::horner(w, s_norm_sq);
    let mut rho: f64 = 0.0;
    let mut all_zero = true;
    for i in k.saturating_sub(3).max(1)..=k {
        if w[i] > 0.0 {
            all_zero = false;
        }
        if w[i - 1] > 0.0 {
            rho = rho.max(w[i] / w[i - 1]);
        }
    }
    let tail_bound = if all_zero {
        0.0
    } else {
        let q = rho * s_norm_sq;
        if q >= 1.0 {
            f64::INFINITY
        } else {
            w[k] * s_norm_sq.powi(k as i32) * q / (1.0 - q)
        }
    };
    if !(tail_bound <= 1e-12 * value.abs()) {
        return Err(Error::Accuracy(format!("Laplace series tail {tail_bound:e} too large at ‖s‖² = {s_norm_sq}")));
    }
    Ok(LaplaceValue { value, tail_bound })
}

/// Σ over perfect matchings of the expanded variable list of Π g over the
/// matched pairs. Equals E[Q^γ] only for φ = exp.
pub fn isserlis_oracle(gamma: &MultiIndex, g: &GramMatrix) -> Result<f64> {
    if gamma.degree() > DEFAULT_MAX_DEGREE {
        return Err(Error::DegreeLimit { degree: gamma.degree() as usize, max: DEFAULT_MAX_DEGREE as usize });
    }
    if gamma.degree() % 2 == 1 {
        return Ok(0.0);
    }
    let vars: Vec<usize> = gamma.entries().iter().enumerate().flat_map(|(j, &c)| std::iter::repeat_n(j, c as usize)).collect();
    let mut used = vec![false; vars.len()];
    Ok(matchings(&vars, &mut used, g))
}

fn matchings(vars: &[usize], used: &mut [bool], g: &GramMatrix) -> f64 {
    let Some(first) = used.iter().position(|u| !u) else { return 1.0 };
    used[first] = true;
    let mut acc = 0.0;
    for k in first + 1..vars.len() {
        if !used[k] {
            used[k] = true;
            acc += g.get(vars[first], vars[k]) * matchings(vars, used, g);
            used[k] = false;
        }
    }
    used[first] = false;
    acc
}

/// [t^γ] (Σ_ij g_ij t_i t_j)^n by expanding the power, keeping only
/// monomials dominated by γ.
fn quadratic_form_coefficient<T: Coeff + One>(gamma: &MultiIndex, g: &[Vec<T>]) -> T {
    let d = g.len();
    let n = gamma.degree() / 2;
    let mut q = GradedSeries::<T>::new();
    for i in 0..d {
        for j in i..d {
            let mut e = vec![0u32; d];
            e[i] += 1;
            e[j] += 1;
            let c = if i == j { g[i][i].clone() } else { g[i][j].clone() + g[i][j].clone() };
            q.add_term(MultiIndex::new(e), c);
        }
    }
    let dominated = |k: &MultiIndex| (0..d.max(k.support_len())).all(|j| k.get(j) <= gamma.get(j));
    let mut p = GradedSeries::<T>::one();
    for _ in 0..n {
        let next = p.convolve(&q);
        p = GradedSeries::from_terms(next.iter().filter(|(k, _)| dominated(k)).map(|(k, v)| (k.clone(), v.clone())));
    }
    p.get(gamma)
}

/// E[Q^γ] = γ! · m_n · [t^γ](tᵀGt)ⁿ.
pub fn coefficient_oracle(gamma: &MultiIndex, g: &GramMatrix, m: &MomentWeights) -> Result<f64> {
    check_limits(gamma, g.dim(), DEFAULT_MAX_DEGREE)?;
    if gamma.degree() % 2 == 1 {
        return Ok(0.0);
    }
    let rows: Vec<Vec<f64>> = (0..g.dim()).map(|i| (0..g.dim()).map(|j| g.get(i, j)).collect()).collect();
    let coef = quadratic_form_coefficient(gamma, &rows);
    let fact = gamma.factorial().to_f64().unwrap_or(f64::INFINITY);
    Ok(fact * m.get(gamma.degree() as usize / 2)? * coef)
}

/// Exact version of [`coefficient_oracle`] without the m_n factor.
pub fn coefficient_factor_exact(gamma: &MultiIndex, g: &[Vec<BigRational>]) -> Result<BigRational> {
    check_limits(gamma, g.len(), DEFAULT_MAX_DEGREE)?;
    if gamma.degree() % 2 == 1 {
        return Ok(BigRational::zero());
    }
    let coef = quadratic_form_coefficient(gamma, g);
    Ok(BigRational::from_integer(BigInt::from(gamma.factorial())) * coef)
}

/// Rational identity matrix.
pub fn rational_identity(d: usize) -> Vec<Vec<BigRational>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlfun::{make_ml, moment_weights, PhiDescriptor};
    use crate::multiindex::enumerate_graded;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn weights(d: &PhiDescriptor) -> MomentWeights {
        moment_weights(&make_ml(d, 16).unwrap())
    }

    #[test]
    fn worked_example_symbolic() {
        // (4! m_2 / 6)·[2 g11 g22 + 4 g12²]
        let g = GramMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.5]]).unwrap();
        for d in [PhiDescriptor::Exp, PhiDescriptor::ml(0.5), PhiDescriptor::bell()] {
            let m = weights(&d);
            let r = moment(&mi(&[2, 2]), &g, &m).unwrap();
            let expect = 24.0 * m.as_slice()[2] / 6.0 * (2.0 * 2.0 * 1.5 + 4.0 * 0.25);
            assert!((r.value - expect).abs() < 1e-14 * expect);
            assert_eq!(r.solution_count, 2);
        }
    }

    #[test]
    fn gaussian_examples() {
        let m = weights(&PhiDescriptor::Exp);
        assert!((moment(&mi(&[2, 2]), &GramMatrix::identity(2), &m).unwrap().value - 1.0).abs() < 1e-15);
        assert_eq!(moment(&mi(&[1, 2]), &GramMatrix::identity(2), &m).unwrap().value, 0.0);
        assert!((radial_moment(2, 1.0, &m).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(radial_moment(0, 3.0, &m).unwrap(), 1.0);
        let mh = weights(&PhiDescriptor::ml(0.5));
        assert!((radial_moment(1, 1.0, &mh).unwrap() - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-14);
    }

    #[test]
    fn denominator_is_multinomial() {
        for d in 1..=3 {
            for n in (0..=8).step_by(2) {
                for gamma in enumerate_graded(d, n) {
                    let expect = factorial(n) / gamma.factorial();
                    assert_eq!(diophantine_den(&gamma), expect, "{gamma}");
                }
            }
        }
        assert_eq!(diophantine_den(&mi(&[2, 2])), BigUint::from(6u32));
    }

    #[test]
    fn degree_limit_and_support() {
        let m = weights(&PhiDescriptor::Exp);
        assert!(matches!(moment(&mi(&[14]), &GramMatrix::identity(1), &m), Err(Error::DegreeLimit { .. })));
        assert!(moment(&mi(&[0, 0, 2]), &GramMatrix::identity(2), &m).is_err());
    }

    #[test]
    fn laplace_examples() {
        let m = moment_weights(&make_ml(&PhiDescriptor::Exp, 64).unwrap());
        assert!((laplace_transform(&m, 1.0).unwrap().value - 0.5f64.exp()).abs() < 1e-14);
        assert_eq!(laplace_transform(&m, 0.0).unwrap().value, 1.0);
        let m1 = moment_weights(&make_ml(&PhiDescriptor::ml(1.0), 64).unwrap());
        assert!((laplace_transform(&m1, 2.0).unwrap().value - 1f64.exp()).abs() < 1e-14);
        let short = moment_weights(&make_ml(&PhiDescriptor::Exp, 6).unwrap());
        assert!(matches!(laplace_transform(&short, 10.0), Err(Error::Accuracy(_))));
    }

    #[test]
    fn isserlis_examples() {
        let one = GramMatrix::identity(1);
        assert_eq!(isserlis_oracle(&mi(&[2]), &one).unwrap(), 1.0);
        assert_eq!(isserlis_oracle(&mi(&[4]), &one).unwrap(), 3.0);
        let rho = 0.3;
        let g = GramMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
        assert!((isserlis_oracle(&mi(&[2, 2]), &g).unwrap() - (1.0 + 2.0 * rho * rho)).abs() < 1e-15);
    }

    #[test]
    fn coefficient_oracle_examples() {
        let m = weights(&PhiDescriptor::Exp);
        assert!((coefficient_oracle(&mi(&[2, 2]), &GramMatrix::identity(2), &m).unwrap() - 1.0).abs() < 1e-15);
        let mh = weights(&PhiDescriptor::ml(0.7));
        let c = 2.5;
        let g = GramMatrix::from_rows(&[vec![c]]).unwrap();
        let v = coefficient_oracle(&mi(&[2]), &g, &mh).unwrap();
        assert!((v - 2.0 * mh.as_slice()[1] * c).abs() < 1e-15);
        let exact = coefficient_factor_exact(&mi(&[2, 2]), &rational_identity(2)).unwrap();
        assert_eq!(exact, BigRational::from_integer(8.into()));
        assert_eq!(moment_factor_exact(&mi(&[2, 2]), &rational_identity(2)).unwrap(), exact);
    }

    #[test]
    fn rejects_non_psd_gram() {
        assert!(GramMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(GramMatrix::from_rows(&[vec![1.0, 0.1], vec![0.2, 1.0]]).is_err());
    }
}
