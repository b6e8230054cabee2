//! Weighted sequence spaces H_p(a, b), their convolution, and numerical
//! verification of the Våge-type bound ‖f∗g‖_p ≤ √A·‖f‖_q·‖g‖_p.
//!
//! Variable positions are 0-based in [`MultiIndex`] and 1-based for the
//! weights: position j carries a_{j+1}. The weight of z^α in H_p is
//! d_α = b_{|α|}·∏_j a_{j+1}^{α_j}.

use crate::error::{Error, Result};
use crate::graded::GradedSeries;
use crate::multiindex::MultiIndex;
use num_complex::Complex64;
use rand::Rng;
use std::fmt;
use std::str::FromStr;

/// Geometric weights a_j = a_base^j, b_n = b_base^n with summability exponent d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSystem {
    pub a_base: f64,
    pub b_base: f64,
    pub d: u32,
}

impl Default for WeightSystem {
    fn default() -> Self {
        Self { a_base: 2.0, b_base: 2.0, d: 2 }
    }
}

impl WeightSystem {
    pub fn new(a_base: f64, b_base: f64, d: u32) -> Result<Self> {
        let w = Self { a_base, b_base, d };
        w.validate()?;
        Ok(w)
    }

    /// Checks submultiplicativity on a prefix and the summability of
    /// a_n^{-d} and b_n^{-d}. Geometric sequences satisfy both iff the
    /// bases exceed one.
    pub fn validate(&self) -> Result<()> {
        if !(self.a_base > 1.0 && self.b_base >= 1.0) || !self.a_base.is_finite() || !self.b_base.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "weights need a_base > 1 and b_base ≥ 1, got a_base = {}, b_base = {}",
                self.a_base, self.b_base
            )));
        }
        if self.d < 1 {
            return Err(Error::InvalidParameter("summability exponent d must be at least 1".into()));
        }
        for n in 1..=16 {
            for m in 1..=16 {
                if self.a(n) * self.a(m) > self.a(n + m) * (1.0 + 1e-12)
                    || self.b(n) * self.b(m) > self.b(n + m) * (1.0 + 1e-12)
                {
                    return Err(Error::InvalidParameter(format!("weights are not submultiplicative at ({n}, {m})")));
                }
            }
        }
        if self.b_base == 1.0 {
            return Err(Error::InvalidParameter("Σ b_n^{-d} diverges for b_base = 1".into()));
        }
        Ok(())
    }

    /// a_j for 1-based j.
    pub fn a(&self, j: usize) -> f64 {
        self.a_base.powi(j as i32)
    }

    pub fn b(&self, n: usize) -> f64 {
        self.b_base.powi(n as i32)
    }

    /// ln d_α for the weight d_α = b_{|α|} a^α.
    pub fn ln_weight(&self, alpha: &MultiIndex) -> f64 {
        let mut s = alpha.degree() as f64 * self.b_base.ln();
        for (j, &k) in alpha.entries().iter().enumerate() {
            s += k as f64 * (j + 1) as f64 * self.a_base.ln();
        }
        s
    }

    /// ln of b_n·a^α with the degree n chosen independently of α.
    pub fn ln_weight_split(&self, n: usize, alpha: &MultiIndex) -> f64 {
        let mut s = n as f64 * self.b_base.ln();
        for (j, &k) in alpha.entries().iter().enumerate() {
            s += k as f64 * (j + 1) as f64 * self.a_base.ln();
        }
        s
    }
}

impl fmt::Display for WeightSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a={}^j,b={}^n,d={}", self.a_base, self.b_base, self.d)
    }
}

impl FromStr for WeightSystem {
    type Err = Error;

    /// Parses `a=2^j,b=2^n,d=2`; omitted keys keep their defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut w = Self::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
            let base = |v: &str, var: &str| -> Result<f64> {
                let b = v.strip_suffix(&format!("^{var}")).unwrap_or(v);
                b.parse::<f64>().map_err(|_| Error::Parse(format!("bad weight base `{v}`")))
            };
            match key.trim() {
                "a" => w.a_base = base(val.trim(), "j")?,
                "b" => w.b_base = base(val.trim(), "n")?,
                "d" => w.d = val.trim().parse().map_err(|_| Error::Parse(format!("bad exponent `{val}`")))?,
                other => return Err(Error::Parse(format!("unknown weight key `{other}`"))),
            }
        }
        w.validate()?;
        Ok(w)
    }
}

/// Squared norm Σ_α |f_α|² d_α^{-p}.
pub fn hp_norm_sq(f: &GradedSeries<Complex64>, p: i32, w: &WeightSystem) -> f64 {
    f.iter().map(|(alpha, v)| v.norm_sqr() * (-(p as f64) * w.ln_weight(alpha)).exp()).sum()
}

/// ‖f‖_p, the square root of [`hp_norm_sq`].
pub fn hp_norm(f: &GradedSeries<Complex64>, p: i32, w: &WeightSystem) -> f64 {
    hp_norm_sq(f, p, w).sqrt()
}

/// (f∗g)_γ = Σ_{α+β=γ} f_α g_β. Same routine as the Wick product.
pub fn convolve(f: &GradedSeries<Complex64>, g: &GradedSeries<Complex64>) -> GradedSeries<Complex64> {
    crate::fockspace::wick_product(f, g)
}

/// Both forms of the Våge constant for r = p - q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VageConstant {
    pub r: i32,
    /// Σ_α (a^α b_{|α|})^{-r}.
    pub tight: f64,
    /// ∏_j (1 - a_j^{-r})^{-1}.
    pub a_factor: f64,
    /// Σ_n b_n^{-r}.
    pub b_sum: f64,
    /// a_factor · b_sum.
    pub product: f64,
    /// Bound on the truncation error of `tight` and `product`.
    pub tail_bound: f64,
}

/// Evaluates the Våge constant with `trunc` variables and degrees.
///
/// The tight sum is Σ_n b_n^{-r} h_n with h_n the complete homogeneous
/// symmetric sums of x_j = a_j^{-r}, built by the recursion
/// h_n ← h_n + x_j h_{n-1}. Variables stop once x_j < 1e-17.
pub fn vage_constant(p: i32, q: i32, w: &WeightSystem, trunc: usize) -> Result<VageConstant> {
    let r = p - q;
    if r <= w.d as i32 {
        return Err(Error::InadmissibleGap { gap: r as i64, d: w.d });
    }
    let rf = r as f64;
    let xs: Vec<f64> = (1..=trunc).map(|j| w.a(j).powf(-rf)).take_while(|x| *x >= 1e-17).collect();
    let mut h = vec![0.0; trunc + 1];
    h[0] = 1.0;
    for x in &xs {
        for n in 1..=trunc {
            h[n] += x * h[n - 1];
        }
    }
    let a_factor: f64 = xs.iter().map(|x| 1.0 / (1.0 - x)).product();
    let y = w.b_base.powf(-rf);
    let b_sum: f64 = (0..=trunc).map(|n| y.powi(n as i32)).sum();
    let tight: f64 = (0..=trunc).map(|n| y.powi(n as i32) * h[n]).sum();
    // Dropped variables: ∏_{j>J}(1-x_j)^{-1} - 1 ≤ e^{Σ x_j/(1-x_j)} - 1 with a
    // geometric Σ. Dropped degrees: H·y^{N+1}/(1-y).
    let next = w.a(xs.len() + 1).powf(-rf);
    let dropped_vars = (next / (1.0 - w.a_base.powf(-rf)) / (1.0 - next)).exp_m1();
    let dropped_degs = a_factor * y.powi(trunc as i32 + 1) / (1.0 - y);
    let tail = (dropped_vars * a_factor * b_sum).max(dropped_vars * tight) + dropped_degs;
    let out = VageConstant { r, tight, a_factor, b_sum, product: a_factor * b_sum, tail_bound: tail };
    if out.tight > out.product * (1.0 + 1e-14) {
        return Err(Error::Accuracy(format!("tight constant {} exceeds product form {}", out.tight, out.product)));
    }
    Ok(out)
}

/// Outcome of [`verify_vage`].
#[derive(Debug, Clone, Copy)]
pub struct VageReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub lhs_sq: f64,
    pub rhs_sq: f64,
    pub passed: bool,
}

/// Checks ‖f∗g‖_p ≤ √A_tight·‖f‖_q·‖g‖_p for one pair.
pub fn verify_vage(
    f: &GradedSeries<Complex64>,
    g: &GradedSeries<Complex64>,
    p: i32,
    q: i32,
    w: &WeightSystem,
    constant: &VageConstant,
) -> Result<VageReport> {
    if p - q != constant.r {
        return Err(Error::InvalidParameter(format!("constant was computed for r = {}, not {}", constant.r, p - q)));
    }
    if p - q <= w.d as i32 {
        return Err(Error::InadmissibleGap { gap: (p - q) as i64, d: w.d });
    }
    let lhs_sq = hp_norm_sq(&convolve(f, g), p, w);
    let rhs_sq = constant.tight * hp_norm_sq(f, q, w) * hp_norm_sq(g, p, w);
    let (lhs, rhs) = (lhs_sq.sqrt(), rhs_sq.sqrt());
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(VageReport { lhs, rhs, ratio, lhs_sq, rhs_sq, passed: lhs <= rhs * (1.0 + 1e-12) })
}

/// A random element with at most `max_terms` terms, total degree ≤
/// `max_degree`, in the first `vars` variables, coefficients uniform in the
/// unit square.
pub fn random_element<R: Rng>(rng: &mut R, max_terms: usize, max_degree: u32, vars: usize) -> GradedSeries<Complex64> {
    let terms = rng.random_range(1..=max_terms);
    let mut out = GradedSeries::new();
    for _ in 0..terms {
        let deg = rng.random_range(0..=max_degree);
        let mut e = vec![0u32; vars];
        for _ in 0..deg {
            e[rng.random_range(0..vars)] += 1;
        }
        out.add_term(
            MultiIndex::new(e),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        );
    }
    out
}
