//! Finitely supported maps from multi-indices to scalars.
//!
//! This is the common container for Fock-space elements, chaos expansions
//! and elements of the Kondratiev-type spaces.

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::{Add, Mul};

/// Scalars usable as coefficients.
pub trait Coeff: Clone + Zero + PartialEq + Add<Output = Self> + Mul<Output = Self> {
    fn conj(&self) -> Self;
}

impl Coeff for f64 {
    fn conj(&self) -> Self {
        *self
    }
}

impl Coeff for Complex64 {
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
}

impl Coeff for BigRational {
    fn conj(&self) -> Self {
        self.clone()
    }
}

/// Σ_γ f_γ z^γ with finite support; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedSeries<T = Complex64> {
    coeffs: BTreeMap<MultiIndex, T>,
}

impl<T: Coeff> Default for GradedSeries<T> {
    fn default() -> Self {
        Self { coeffs: BTreeMap::new() }
    }
}

impl<T: Coeff> GradedSeries<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// The single term c·z^γ.
    pub fn monomial(index: MultiIndex, c: T) -> Self {
        let mut s = Self::new();
        s.add_term(index, c);
        s
    }

    /// The unit 1 = z^0.
    pub fn one() -> Self
    where
        T: num_traits::One,
    {
        Self::monomial(MultiIndex::zero(), T::one())
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, T)>>(terms: I) -> Self {
        let mut s = Self::new();
        for (k, v) in terms {
            s.add_term(k, v);
        }
        s
    }

    /// Adds c to the coefficient of z^γ, pruning a resulting zero.
    pub fn add_term(&mut self, index: MultiIndex, c: T) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.remove(&index) {
            Some(old) => {
                let v = old + c;
                if !v.is_zero() {
                    self.coeffs.insert(index, v);
                }
            }
            None => {
                self.coeffs.insert(index, c);
            }
        }
    }

    pub fn get(&self, index: &MultiIndex) -> T {
        self.coeffs.get(index).cloned().unwrap_or_else(T::zero)
    }

    /// Terms in graded order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest total degree in the support.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|k| k.degree()).max()
    }

    pub fn map<U: Coeff, F: Fn(&MultiIndex, &T) -> U>(&self, f: F) -> GradedSeries<U> {
        GradedSeries::from_terms(self.coeffs.iter().map(|(k, v)| (k.clone(), f(k, v))))
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|_, v| v.clone() * c.clone())
    }

    pub fn sum(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.add_term(k.clone(), v.clone());
        }
        out
    }

    /// Coefficient convolution (f∗g)_γ = Σ_{α+β=γ} f_α g_β.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = Self::new();
        for (a, fa) in self.iter() {
            for (b, gb) in other.iter() {
                out.add_term(a.add(b), fa.clone() * gb.clone());
            }
        }
        out
    }

    /// Terms of total degree ≤ n.
    pub fn truncate(&self, n: u32) -> Self {
        Self { coeffs: self.coeffs.iter().filter(|(k, _)| k.degree() <= n).map(|(k, v)| (k.clone(), v.clone())).collect() }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    index: Vec<u32>,
    re: f64,
    im: f64,
}

impl GradedSeries<Complex64> {
    /// JSON list of `{index, re, im}` in graded order.
    pub fn to_json(&self) -> String {
        let terms: Vec<JsonTerm> =
            self.iter().map(|(k, v)| JsonTerm { index: k.entries().to_vec(), re: v.re, im: v.im }).collect();
        serde_json::to_string(&terms).expect("serializing plain numbers cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let terms: Vec<JsonTerm> = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Self::from_terms(terms.into_iter().map(|t| (MultiIndex::new(t.index), Complex64::new(t.re, t.im)))))
    }

    pub fn from_real(s: &GradedSeries<f64>) -> Self {
        s.map(|_, v| Complex64::new(*v, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn zero_terms_are_pruned() {
        let mut s = GradedSeries::<f64>::new();
        s.add_term(mi(&[1]), 2.0);
        s.add_term(mi(&[1]), -2.0);
        s.add_term(mi(&[2]), 0.0);
        assert!(s.is_empty());
    }

    #[test]
    fn json_round_trip() {
        let s = GradedSeries::from_terms([
            (mi(&[1, 2]), Complex64::new(0.5, -1.0)),
            (MultiIndex::zero(), Complex64::new(1.0, 0.0)),
        ]);
        let text = s.to_json();
        assert!(text.starts_with("[{\"index\":[],"));
        assert_eq!(GradedSeries::from_json(&text).unwrap(), s);
        assert!(GradedSeries::from_json("{").is_err());
    }

    #[test]
    fn convolution_by_hand() {
        let f = GradedSeries::from_terms([(MultiIndex::zero(), 1.0), (mi(&[1]), 1.0)]);
        let g = GradedSeries::from_terms([(MultiIndex::zero(), 1.0), (mi(&[0, 1]), 1.0)]);
        let h = f.convolve(&g);
        assert_eq!(h.len(), 4);
        for k in [mi(&[]), mi(&[1]), mi(&[0, 1]), mi(&[1, 1])] {
            assert_eq!(h.get(&k), 1.0);
        }
    }
}
