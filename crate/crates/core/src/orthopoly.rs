//! Orthonormal polynomial chaos in the coordinates Q_{s_1}, …, Q_{s_d}.
//!
//! Monomials Q^γ are ordered by [`MultiIndex`]'s graded order and
//! orthonormalized against the moment inner product ⟨Q^γ, Q^δ⟩ = E[Q^{γ+δ}].
//! Each Q̃^γ is stored as a coefficient row over the monomials up to γ.

use crate::error::{Error, Result};
use crate::mlfun::MomentWeights;
use crate::moments::{moment_with_limit, GramMatrix};
use crate::multiindex::{enumerate_up_to, MultiIndex};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::HashMap;

const DEGENERATE_TOL: f64 = 1e-10;

/// Monomial Gram matrix ⟨Q^γ, Q^δ⟩ over all |γ|, |δ| ≤ n, in graded order.
pub fn gram_matrix(d: usize, n: u32, g: &GramMatrix, m: &MomentWeights) -> Result<(Vec<MultiIndex>, DMatrix<f64>)> {
    if g.dim() < d {
        return Err(Error::InvalidParameter(format!("Gram matrix has dimension {} < d = {d}", g.dim())));
    }
    let idx = enumerate_up_to(d, n);
    let mut cache: HashMap<MultiIndex, f64> = HashMap::new();
    let mut gm = DMatrix::zeros(idx.len(), idx.len());
    for (a, ga) in idx.iter().enumerate() {
        for (b, gb) in idx.iter().enumerate().skip(a) {
            let key = ga.add(gb);
            let v = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let v = moment_with_limit(&key, g, m, 2 * n)?.value;
                    cache.insert(key, v);
                    v
                }
            };
            gm[(a, b)] = v;
            gm[(b, a)] = v;
        }
    }
    Ok((idx, gm))
}

/// Orthonormal family Q̃^γ for |γ| ≤ N.
#[derive(Debug, Clone)]
pub struct ChaosBasis {
    pub d: usize,
    pub max_degree: u32,
    /// Graded-order monomial indices; row i of `coeffs` is Q̃^{indices[i]}.
    pub indices: Vec<MultiIndex>,
    /// Lower-triangular change of basis: Q̃^{γ_i} = Σ_j coeffs[(i,j)] Q^{γ_j}.
    pub coeffs: DMatrix<f64>,
    /// Monomial Gram matrix used for the construction.
    pub gram: DMatrix<f64>,
}

/// Graded Gram-Schmidt with one reorthogonalization pass.
pub fn orthonormal_basis(d: usize, n: u32, g: &GramMatrix, m: &MomentWeights) -> Result<ChaosBasis> {
    let (indices, gram) = gram_matrix(d, n, g, m)?;
    let min_eig = gram.clone().symmetric_eigenvalues().min();
    if min_eig <= DEGENERATE_TOL {
        return Err(Error::Degenerate(format!(
            "moment Gram matrix is not positive definite (min eigenvalue {min_eig:e}); the test functions are linearly dependent"
        )));
    }
    let len = indices.len();
    let mut coeffs = DMatrix::<f64>::zeros(len, len);
    let inner = |u: &[f64], v: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (i, ui) in u.iter().enumerate() {
            if *ui == 0.0 {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                acc += ui * gram[(i, j)] * vj;
            }
        }
        acc
    };
    for i in 0..len {
        let mut v = vec![0.0; len];
        v[i] = 1.0;
        for _pass in 0..2 {
            for k in 0..i {
                let qk: Vec<f64> = coeffs.row(k).iter().copied().collect();
                let p = inner(&v, &qk);
                for (vj, qj) in v.iter_mut().zip(&qk) {
                    *vj -= p * qj;
                }
            }
        }
        let norm2 = inner(&v, &v);
        if norm2 <= DEGENERATE_TOL * gram[(i, i)] {
            return Err(Error::Degenerate(format!("Q^{} is numerically dependent on lower monomials", indices[i])));
        }
        let mut norm = norm2.sqrt();
        if v[i] < 0.0 {
            norm = -norm;
        }
        for (j, vj) in v.iter().enumerate() {
            coeffs[(i, j)] = vj / norm;
        }
    }
    Ok(ChaosBasis { d, max_degree: n, indices, coeffs, gram })
}

impl ChaosBasis {
    pub fn position(&self, gamma: &MultiIndex) -> Option<usize> {
        self.indices.iter().position(|x| x == gamma)
    }

    /// ⟨Q̃^γ, Q̃^δ⟩ recomputed from the moment Gram matrix.
    pub fn recomputed_gram(&self) -> DMatrix<f64> {
        &self.coeffs * &self.gram * self.coeffs.transpose()
    }

    /// max |recomputed Gram - I|.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.indices.len();
        (self.recomputed_gram() - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// Whether every Q̃^γ uses only monomials ≤ γ (exact zero check).
    pub fn is_triangular(&self) -> bool {
        let n = self.indices.len();
        (0..n).all(|i| (i + 1..n).all(|j| self.coeffs[(i, j)] == 0.0) && self.coeffs[(i, i)] > 0.0)
    }

    /// Positions of the indices of total degree `level`.
    pub fn level(&self, level: u32) -> Vec<usize> {
        (0..self.indices.len()).filter(|&i| self.indices[i].degree() == level).collect()
    }

    fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, ui) in u.iter().enumerate() {
            if *ui == 0.0 {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                acc += ui * self.gram[(i, j)] * vj;
            }
        }
        acc
    }

    /// Monomial coefficients of Q_j · Q̃^{γ_i} (requires |γ_i| < max degree).
    fn times_coordinate(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.indices.len()];
        for (k, c) in self.coeffs.row(i).iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let shifted = self.indices[k].raise(j);
            let pos = self.position(&shifted).ok_or(Error::DegreeLimit {
                degree: shifted.degree() as usize,
                max: self.max_degree as usize,
            })?;
            out[pos] += c;
        }
        Ok(out)
    }

    /// JSON export of the indices and coefficient rows.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Row<'a> {
            index: &'a [u32],
            coefficients: Vec<(Vec<u32>, f64)>,
        }
        let rows: Vec<Row> = self
            .indices
            .iter()
            .enumerate()
            .map(|(i, g)| Row {
                index: g.entries(),
                coefficients: (0..=i)
                    .filter(|&j| self.coeffs[(i, j)] != 0.0)
                    .map(|j| (self.indices[j].entries().to_vec(), self.coeffs[(i, j)]))
                    .collect(),
            })
            .collect();
        serde_json::json!({ "d": self.d, "max_degree": self.max_degree, "basis": rows })
    }
}

/// Blocks of Q_j Q̃_N = A_N Q̃_{N+1} + B_N Q̃_N + C_N Q̃_{N-1}, rows indexed
/// by the level-N indices and columns by the target level.
#[derive(Debug, Clone)]
pub struct RecurrenceBlocks {
    pub j: usize,
    pub n: u32,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Largest moment norm of Q_j Q̃^γ minus its three-level reconstruction.
    pub residual: f64,
}

impl RecurrenceBlocks {
    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> { m.row_iter().map(|r| r.iter().copied().collect()).collect() };
        serde_json::json!({
            "j": self.j, "n": self.n,
            "a": rows(&self.a), "b": rows(&self.b), "c": rows(&self.c),
            "residual": self.residual,
        })
    }
}

pub fn recurrence_blocks(basis: &ChaosBasis, j: usize, n: u32) -> Result<RecurrenceBlocks> {
    if j >= basis.d {
        return Err(Error::InvalidParameter(format!("variable {j} outside dimension {}", basis.d)));
    }
    if n + 1 > basis.max_degree {
        return Err(Error::DegreeLimit { degree: n as usize + 1, max: basis.max_degree as usize });
    }
    let rows = basis.level(n);
    let up = basis.level(n + 1);
    let same = rows.clone();
    let down = if n > 0 { basis.level(n - 1) } else { Vec::new() };
    let mut a = DMatrix::zeros(rows.len(), up.len());
    let mut b = DMatrix::zeros(rows.len(), same.len());
    let mut c = DMatrix::zeros(rows.len(), down.len());
    let mut residual: f64 = 0.0;
    for (r, &i) in rows.iter().enumerate() {
        let p = basis.times_coordinate(i, j)?;
        let mut rest = p.clone();
        for (target, cols) in [(&mut a, &up), (&mut b, &same), (&mut c, &down)] {
            for (col, &k) in cols.iter().enumerate() {
                let qk: Vec<f64> = basis.coeffs.row(k).iter().copied().collect();
                let proj = basis.inner(&p, &qk);
                target[(r, col)] = proj;
                for (x, q) in rest.iter_mut().zip(&qk) {
                    *x -= proj * q;
                }
            }
        }
        residual = residual.max(basis.inner(&rest, &rest).max(0.0).sqrt());
    }
    Ok(RecurrenceBlocks { j, n, a, b, c, residual })
}

/// Monomial coefficients of the normalized probabilists' Hermite product
/// Π_j He_{γ_j}(x_j)/√(γ_j!), as a map over the basis indices.
pub fn hermite_product_coeffs(gamma: &MultiIndex, d: usize) -> HashMap<MultiIndex, f64> {
    let mut acc: HashMap<MultiIndex, f64> = HashMap::from([(MultiIndex::zero(), 1.0)]);
    for var in 0..d {
        let k = gamma.get(var) as usize;
        let he = normalized_hermite(k);
        let mut next = HashMap::new();
        for (idx, c) in &acc {
            for (p, h) in he.iter().enumerate() {
                if *h == 0.0 {
                    continue;
                }
                let mut e = idx.padded(d);
                e[var] += p as u32;
                *next.entry(MultiIndex::new(e)).or_insert(0.0) += c * h;
            }
        }
        acc = next;
    }
    acc
}

/// Coefficients of He_k(x)/√(k!) in powers of x.
fn normalized_hermite(k: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    let mut cur = vec![0.0, 1.0];
    if k == 0 {
        return prev;
    }
    for n in 1..k {
        // He_{n+1} = x He_n - n He_{n-1}
        let mut next = vec![0.0; n + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= n as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    let norm = crate::special::factorial(k as u32).sqrt();
    cur.iter().map(|c| c / norm).collect()
}

/// Coefficient of tⁿ in the P_φ-exponential e^{tQ_s}/L(ts), written as
/// Σ_k coeff[k] ‖s‖^{2k} Q_s^{n-2k}.
#[derive(Debug, Clone, PartialEq)]
pub struct PphiCoefficient {
    pub n: u32,
    /// coeff[k] for k = 0..=⌊n/2⌋.
    pub coeff: Vec<BigRational>,
}

/// Coefficients of 1/L(x) with L(x) = Σ m_k x^k.
fn reciprocal_laplace(m: &[BigRational], order: usize) -> Vec<BigRational> {
    let mut l = vec![BigRational::zero(); order + 1];
    for (k, mk) in m.iter().enumerate().take(order + 1) {
        l[k] = mk.clone();
    }
    crate::series::recip_unit_trunc(&l, order)
}

/// Division route: e^{tQ} / L(t²‖s‖²) as a formal series in t.
pub fn pphi_exponential_coeffs(m: &[BigRational], n_max: u32) -> Result<Vec<PphiCoefficient>> {
    if n_max > 20 {
        return Err(Error::DegreeLimit { degree: n_max as usize, max: 20 });
    }
    if m.first() != Some(&BigRational::one()) {
        return Err(Error::InvalidParameter("moment weights must start with m_0 = 1".into()));
    }
    let half = n_max as usize / 2;
    if m.len() <= half {
        return Err(Error::DegreeLimit { degree: n_max as usize, max: 2 * (m.len() - 1) });
    }
    let r = reciprocal_laplace(m, half);
    let fact = |k: u32| BigRational::from_integer(BigInt::from(crate::multiindex::factorial(k)));
    Ok((0..=n_max)
        .map(|n| PphiCoefficient { n, coeff: (0..=n / 2).map(|k| &r[k as usize] / fact(n - 2 * k)).collect() })
        .collect())
}

/// How the combinatorial route divides the inner sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prefactor {
    /// 1/(n-2k)!, the factor produced by e^{tQ}.
    Corrected,
    /// 1/(n-k)!; kept to show that it does not reproduce the series.
    Unshifted,
}

/// Combinatorial route: the inner sum over α with Σ_i i·α_{2i} = k of
/// (-1)^{|α|} (|α|; α) Π_i m_i^{α_{2i}}, times the chosen prefactor.
pub fn pphi_exponential_combinatorial(m: &[BigRational], n_max: u32, prefactor: Prefactor) -> Result<Vec<PphiCoefficient>> {
    if n_max > 20 {
        return Err(Error::DegreeLimit { degree: n_max as usize, max: 20 });
    }
    let fact = |k: u32| BigRational::from_integer(BigInt::from(crate::multiindex::factorial(k)));
    let half = n_max / 2;
    let inner: Vec<BigRational> = (0..=half).map(|k| partition_sum(m, k)).collect::<Result<_>>()?;
    Ok((0..=n_max)
        .map(|n| PphiCoefficient {
            n,
            coeff: (0..=n / 2)
                .map(|k| {
                    let den = match prefactor {
                        Prefactor::Corrected => fact(n - 2 * k),
                        Prefactor::Unshifted => fact(n - k),
                    };
                    &inner[k as usize] / den
                })
                .collect(),
        })
        .collect())
}

fn partition_sum(m: &[BigRational], k: u32) -> Result<BigRational> {
    let mut total = BigRational::zero();
    let mut parts = vec![0u32; k as usize + 1];
    walk_partitions(k, 1, &mut parts, m, &mut total)?;
    Ok(total)
}

/// Enumerates α_1, α_2, … (multiplicities of part sizes i ≥ `min_part`) with
/// Σ i α_i = remaining.
fn walk_partitions(remaining: u32, min_part: u32, parts: &mut Vec<u32>, m: &[BigRational], total: &mut BigRational) -> Result<()> {
    if remaining == 0 {
        let counts: Vec<u32> = parts[1..].to_vec();
        let size: u32 = counts.iter().sum();
        let coef = crate::multiindex::multinomial(size, &counts)?;
        let mut term = BigRational::from_integer(BigInt::from(coef));
        for (i, a) in counts.iter().enumerate() {
            let mi = m.get(i + 1).ok_or(Error::DegreeLimit { degree: i + 1, max: m.len() - 1 })?;
            for _ in 0..*a {
                term *= mi;
            }
        }
        if size % 2 == 1 {
            term = -term;
        }
        *total += term;
        return Ok(());
    }
    for i in min_part..=remaining {
        let max_mult = remaining / i;
        for a in 1..=max_mult {
            parts[i as usize] = a;
            walk_partitions(remaining - a * i, i + 1, parts, m, total)?;
        }
        parts[i as usize] = 0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlfun::{exact_moment_weights, exact_taylor, make_ml, moment_weights, PhiDescriptor};
    use crate::special::gamma;

    fn weights(d: &PhiDescriptor) -> MomentWeights {
        moment_weights(&make_ml(d, 16).unwrap())
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn gram_examples() {
        let (_, g) = gram_matrix(1, 2, &GramMatrix::identity(1), &weights(&PhiDescriptor::Exp)).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 3.0]);
        assert!((g - expect).amax() < 1e-14);
        let alpha = 0.6;
        let (_, g) = gram_matrix(1, 1, &GramMatrix::identity(1), &weights(&PhiDescriptor::ml(alpha))).unwrap();
        assert_eq!(g[(0, 0)], 1.0);
        assert!((g[(1, 1)] - 1.0 / gamma(alpha + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn gaussian_second_chaos() {
        let b = orthonormal_basis(1, 2, &GramMatrix::identity(1), &weights(&PhiDescriptor::Exp)).unwrap();
        let s = 2f64.sqrt();
        assert!((b.coeffs[(2, 0)] + 1.0 / s).abs() < 1e-14);
        assert!((b.coeffs[(2, 2)] - 1.0 / s).abs() < 1e-14);
        assert_eq!(b.coeffs[(0, 0)], 1.0);
        assert!(b.is_triangular());
        let b2 = orthonormal_basis(2, 2, &GramMatrix::identity(2), &weights(&PhiDescriptor::Exp)).unwrap();
        let i = b2.position(&MultiIndex::new(vec![1, 1])).unwrap();
        for j in 0..b2.indices.len() {
            let expect = if j == i { 1.0 } else { 0.0 };
            assert!((b2.coeffs[(i, j)] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_configuration() {
        let g = GramMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let r = orthonormal_basis(2, 1, &g, &weights(&PhiDescriptor::Exp));
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn gaussian_recurrence_is_hermite() {
        let b = orthonormal_basis(1, 6, &GramMatrix::identity(1), &weights(&PhiDescriptor::Exp)).unwrap();
        for n in 0..6u32 {
            let r = recurrence_blocks(&b, 0, n).unwrap();
            assert!((r.a[(0, 0)] - ((n + 1) as f64).sqrt()).abs() < 1e-10);
            assert!(r.b[(0, 0)].abs() < 1e-10);
            if n > 0 {
                assert!((r.c[(0, 0)] - (n as f64).sqrt()).abs() < 1e-10);
            }
            assert!(r.residual < 1e-8);
        }
        assert!(recurrence_blocks(&b, 0, 6).is_err());
    }

    #[test]
    fn pphi_examples() {
        let m = exact_moment_weights(&exact_taylor(&PhiDescriptor::Exp, 10).unwrap());
        let c = pphi_exponential_coeffs(&m, 6).unwrap();
        assert_eq!(c[0].coeff, vec![q(1, 1)]);
        assert_eq!(c[1].coeff, vec![q(1, 1)]);
        // (Q³ - 3Q)/3!
        assert_eq!(c[3].coeff, vec![q(1, 6), q(-1, 2)]);
        let comb = pphi_exponential_combinatorial(&m, 6, Prefactor::Corrected).unwrap();
        assert_eq!(comb, c);
        let unshifted = pphi_exponential_combinatorial(&m, 6, Prefactor::Unshifted).unwrap();
        assert_ne!(unshifted[3], c[3]);
    }
}
