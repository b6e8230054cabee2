//! The generalized Fock space with reproducing kernel ∏_j φ(z_j w̄_j).
//!
//! Weights use Taylor coefficients: the monomial z^γ has weight
//! φ_γ = ∏_j c_{γ_j} and squared norm 1/φ_γ. Monomials whose weight
//! vanishes (possible for custom φ with a zero coefficient) are excluded
//! from the space and reported as [`Error::ExcludedDirection`].

use crate::error::{Error, Result};
use crate::graded::{Coeff, GradedSeries};
use crate::mlfun::MLFunction;
use crate::multiindex::{enumerate_up_to, MultiIndex};
use num_complex::Complex64;
use num_traits::One;
use std::fmt::Debug;
use std::ops::{Div, Sub};

/// Scalars with field operations; implemented for f64, Complex64 and BigRational.
pub trait Scalar: Coeff + One + Sub<Output = Self> + Div<Output = Self> + Debug {}

impl<T: Coeff + One + Sub<Output = T> + Div<Output = T> + Debug> Scalar for T {}

/// Weight system of the Fock space, built from Taylor coefficients c_0..c_K.
#[derive(Debug, Clone)]
pub struct FockGeometry<S = Complex64> {
    taylor: Vec<S>,
}

impl<S: Scalar> FockGeometry<S> {
    pub fn new(taylor: Vec<S>) -> Result<Self> {
        if taylor.len() < 2 || taylor[0] != S::one() {
            return Err(Error::InvalidParameter("Fock weights need c_0 = 1 and at least c_1".into()));
        }
        Ok(Self { taylor })
    }

    /// Highest power covered by the truncation.
    pub fn order(&self) -> usize {
        self.taylor.len() - 1
    }

    /// c_k, with c_{-1} treated by callers.
    pub fn coeff(&self, k: usize) -> Result<S> {
        self.taylor.get(k).cloned().ok_or(Error::DegreeLimit { degree: k, max: self.order() })
    }

    fn positive_coeff(&self, k: usize, index: &MultiIndex) -> Result<S> {
        let c = self.coeff(k)?;
        if c.is_zero() {
            return Err(Error::ExcludedDirection(index.to_string()));
        }
        Ok(c)
    }

    /// φ_γ = ∏_j c_{γ_j}.
    pub fn weight(&self, gamma: &MultiIndex) -> Result<S> {
        let mut w = S::one();
        for &g in gamma.entries() {
            w = w * self.positive_coeff(g as usize, gamma)?;
        }
        Ok(w)
    }

    /// ⟨f, g⟩_φ = Σ_α f_α conj(g_α) / φ_α.
    pub fn inner(&self, f: &GradedSeries<S>, g: &GradedSeries<S>) -> Result<S> {
        let mut acc = S::zero();
        for (alpha, fa) in f.iter() {
            let ga = g.get(alpha);
            if ga.is_zero() {
                continue;
            }
            acc = acc + fa.clone() * ga.conj() / self.weight(alpha)?;
        }
        Ok(acc)
    }

    /// Truncation of the kernel K_φ(·, w) = Σ_α φ_α w̄^α z^α to |α| ≤ n.
    /// Excluded monomials have zero weight and are simply absent.
    pub fn kernel_series(&self, w: &[S], n: u32) -> Result<GradedSeries<S>> {
        let mut out = GradedSeries::new();
        for alpha in enumerate_up_to(w.len(), n) {
            let mut c = S::one();
            for (j, &a) in alpha.padded(w.len()).iter().enumerate() {
                c = c * self.coeff(a as usize)?;
                for _ in 0..a {
                    c = c * w[j].conj();
                }
            }
            out.add_term(alpha, c);
        }
        Ok(out)
    }

    /// Gelfond-Leontiev derivative of a one-variable sequence:
    /// a_k z^k ↦ (c_{k-1}/c_k) a_k z^{k-1}.
    pub fn gl_derivative(&self, a: &[S]) -> Result<Vec<S>> {
        let mut out = Vec::with_capacity(a.len().saturating_sub(1));
        for (k, ak) in a.iter().enumerate().skip(1) {
            let ck = self.coeff(k)?;
            if ck.is_zero() {
                return Err(Error::Degenerate(format!("c_{k} = 0 makes the ratio c_{}/c_{k} undefined", k - 1)));
            }
            out.push(self.coeff(k - 1)? / ck * ak.clone());
        }
        Ok(out)
    }

    /// ∂_j^φ acting on coordinate j of a multivariate series.
    pub fn gl_partial(&self, f: &GradedSeries<S>, j: usize) -> Result<GradedSeries<S>> {
        let mut out = GradedSeries::new();
        for (alpha, fa) in f.iter() {
            let k = alpha.get(j) as usize;
            if k == 0 {
                continue;
            }
            let ck = self.coeff(k)?;
            if ck.is_zero() {
                return Err(Error::Degenerate(format!("c_{k} = 0 makes the ratio c_{}/c_{k} undefined", k - 1)));
            }
            let lowered = alpha.lower(j).expect("entry is positive");
            out.add_term(lowered, self.coeff(k - 1)? / ck * fa.clone());
        }
        Ok(out)
    }

    /// Both sides of ⟨∂^φ z^k, z^ℓ⟩ = ⟨z^k, M_z z^ℓ⟩, each computed by
    /// applying the operators and the inner product.
    pub fn pairing(&self, k: usize, l: usize) -> Result<(S, S)> {
        let zk = monomial1(k);
        let zl = monomial1(l);
        let dzk = self.gl_partial(&zk, 0)?;
        let lhs = self.inner(&dzk, &zl)?;
        let rhs = self.inner(&zk, &monomial1(l + 1))?;
        Ok((lhs, rhs))
    }

    /// Closed form of [∂^φ, M_z] z^k = λ_k z^k:
    /// λ_k = (c_k² - c_{k-1} c_{k+1}) / (c_k c_{k+1}), with c_{-1} = 0.
    pub fn commutator_eigenvalue(&self, k: usize) -> Result<S> {
        let ck = self.coeff(k)?;
        let ck1 = self.coeff(k + 1)?;
        let prev = if k == 0 { S::zero() } else { self.coeff(k - 1)? };
        if ck.is_zero() || ck1.is_zero() {
            return Err(Error::Degenerate(format!("c_{k} or c_{} vanishes", k + 1)));
        }
        Ok((ck.clone() * ck.clone() - prev * ck1.clone()) / (ck * ck1))
    }

    /// [∂^φ, M_z] z^k evaluated by applying the operators; returns the
    /// coefficient of z^k and fails if any other monomial survives.
    pub fn commutator_direct(&self, k: usize) -> Result<S> {
        let zk = monomial1(k);
        let a = self.gl_partial(&times_z(&zk, 0), 0)?;
        let b = times_z(&self.gl_partial(&zk, 0)?, 0);
        let diff = a.sum(&b.scale(&(S::zero() - S::one())));
        let key = MultiIndex::new(vec![k as u32]);
        if diff.iter().any(|(idx, _)| *idx != key) {
            return Err(Error::Degenerate("commutator is not diagonal on monomials".into()));
        }
        Ok(diff.get(&key))
    }
}

impl FockGeometry<Complex64> {
    /// Geometry of an ML function's truncated Taylor series.
    pub fn from_ml(phi: &MLFunction) -> Self {
        Self { taylor: phi.taylor().iter().map(|c| Complex64::new(*c, 0.0)).collect() }
    }

    pub fn norm(&self, f: &GradedSeries<Complex64>) -> Result<f64> {
        Ok(self.inner(f, f)?.re.max(0.0).sqrt())
    }

    /// Maps chaos coefficients (coordinates in the orthonormal basis Q̃^γ)
    /// to the monomial coefficients of the image function.
    ///
    /// The normalized monomials of this space are √φ_γ·z^γ, so Q̃^γ is sent
    /// to √φ_γ·z^γ. This keeps the map isometric for every φ; for φ = exp
    /// in one coordinate of degree one it is the identity.
    pub fn phi_transform(&self, chaos: &GradedSeries<Complex64>) -> Result<GradedSeries<Complex64>> {
        let mut out = GradedSeries::new();
        for (gamma, c) in chaos.iter() {
            let w = self.weight(gamma)?.re;
            out.add_term(gamma.clone(), c * w.sqrt());
        }
        Ok(out)
    }
}

fn monomial1<S: Scalar>(k: usize) -> GradedSeries<S> {
    GradedSeries::monomial(MultiIndex::new(vec![k as u32]), S::one())
}

/// Multiplication by z_j.
pub fn times_z<S: Scalar>(f: &GradedSeries<S>, j: usize) -> GradedSeries<S> {
    GradedSeries::from_terms(f.iter().map(|(a, v)| (a.raise(j), v.clone())))
}

/// Wick product on chaos coefficients: Q̃^γ ◊ Q̃^δ = Q̃^{γ+δ}.
pub fn wick_product<T: Coeff>(f: &GradedSeries<T>, g: &GradedSeries<T>) -> GradedSeries<T> {
    f.convolve(g)
}

/// K_φ(z, w) = ∏_j φ(z_j w̄_j) over the joint support of two finite sequences.
pub fn kernel_eval(z: &[Complex64], w: &[Complex64], phi: &MLFunction) -> Result<Complex64> {
    let mut acc = Complex64::one();
    for j in 0..z.len().max(w.len()) {
        let zj = z.get(j).copied().unwrap_or_default();
        let wj = w.get(j).copied().unwrap_or_default();
        let x = zj * wj.conj();
        if x != Complex64::new(0.0, 0.0) {
            acc *= phi.eval(x)?.value;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainVerdict {
    InDomain,
    Diverges,
    Inconclusive,
}

/// Outcome of [`domain_check`].
#[derive(Debug, Clone)]
pub struct DomainReport {
    /// Partial sums of |1 - φ(|z_j|²)|.
    pub partial_sums: Vec<f64>,
    /// Estimated remainder beyond the prefix (0 for finite support).
    pub tail_estimate: f64,
    /// Fitted decay exponent p in |1 - φ(|z_j|²)| ≈ C j^{-p}, when fitted.
    pub decay_exponent: Option<f64>,
    pub verdict: DomainVerdict,
}

/// Judges whether Σ_j |1 - φ(|z_j|²)| converges from a prefix of the sequence.
///
/// A prefix whose last quarter vanishes is read as finitely supported.
/// Otherwise a power law is fitted to the last half of the nonzero terms:
/// exponent above 1.05 counts as convergent, below 0.95 as divergent.
pub fn domain_check(z: &[Complex64], phi: &MLFunction) -> Result<DomainReport> {
    let mut terms = Vec::with_capacity(z.len());
    for zj in z {
        terms.push((1.0 - phi.eval_real(zj.norm_sqr())?).abs());
    }
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut s = 0.0;
    for t in &terms {
        s += t;
        partial_sums.push(s);
    }
    let n = terms.len();
    let tail_start = n - n / 4;
    if terms[tail_start..].iter().all(|t| *t == 0.0) && n >= 4 || terms.iter().all(|t| *t == 0.0) {
        return Ok(DomainReport { partial_sums, tail_estimate: 0.0, decay_exponent: None, verdict: DomainVerdict::InDomain });
    }
    let pts: Vec<(f64, f64)> = (n / 2..n)
        .filter(|&j| terms[j] > 0.0)
        .map(|j| (((j + 1) as f64).ln(), terms[j].ln()))
        .collect();
    if pts.len() < 8 {
        return Ok(DomainReport {
            partial_sums,
            tail_estimate: f64::NAN,
            decay_exponent: None,
            verdict: DomainVerdict::Inconclusive,
        });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let p = -sxy / sxx;
    let (verdict, tail_estimate) = if p > 1.05 {
        // Σ_{j>n} C j^{-p} ≈ C n^{1-p}/(p-1) with C fitted at the last term.
        let c = terms[n - 1] * (n as f64).powf(p);
        (DomainVerdict::InDomain, c * (n as f64).powf(1.0 - p) / (p - 1.0))
    } else if p < 0.95 {
        (DomainVerdict::Diverges, f64::INFINITY)
    } else {
        (DomainVerdict::Inconclusive, f64::NAN)
    };
    Ok(DomainReport { partial_sums, tail_estimate, decay_exponent: Some(p), verdict })
}
