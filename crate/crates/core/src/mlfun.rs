//! Entire functions of the ML class: construction, combinators and evaluation.
//!
//! A member φ(z) = Σ c_n zⁿ is stored through its Taylor coefficients `c_n`
//! (the convention of the Fock kernel and of the isometry). Moment formulas
//! use the divided weights `m_n = c_n / 2ⁿ`, exposed separately as
//! [`MomentWeights`] so the two conventions never share a symbol.
//!
//! Truncated series are only trusted inside a reliability radius derived
//! from a ratio-test tail bound. On the negative real axis, which is where
//! characteristic functions φ(-y²/2) live, evaluation follows the
//! construction tree instead, so that e.g. E_α(-x) can be evaluated for
//! large x through its integral representation or asymptotic expansion.

use crate::error::{Error, Result};
use crate::series;
use crate::special::{ln_gamma, recip_gamma};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Default truncation order K.
pub const DEFAULT_ORDER: usize = 64;
/// Tail tolerance used for the reliability radius.
pub const TAIL_TOL: f64 = 1e-12;
const NEG_COEFF_TOL: f64 = 1e-14;

/// Recipe for an ML-class function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiDescriptor {
    Exp,
    MittagLeffler { alpha: f64 },
    Custom { coefficients: Vec<f64> },
    /// Convex combination Σ wᵢ φᵢ.
    Mix { weights: Vec<f64>, children: Vec<PhiDescriptor> },
    /// Pointwise product Π φᵢ.
    Product { children: Vec<PhiDescriptor> },
    /// Normalized composition φ(ψ(z)) / φ(1).
    Compose { outer: Box<PhiDescriptor>, inner: Box<PhiDescriptor> },
}

impl PhiDescriptor {
    pub fn ml(alpha: f64) -> Self {
        PhiDescriptor::MittagLeffler { alpha }
    }

    /// e^{e^z - 1}, whose Taylor coefficients are Bell numbers over k!.
    pub fn bell() -> Self {
        PhiDescriptor::Compose { outer: Box::new(PhiDescriptor::Exp), inner: Box::new(PhiDescriptor::Exp) }
    }

    /// Parses the compact form used on the command line:
    /// `exp`, `ml:<alpha>`, `bell`, `custom:[c0,c1,...]`,
    /// `mix(<w>*<desc>, ...)`, `product(<desc>, ...)`, `compose(<outer>, <inner>)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exp" {
            return Ok(PhiDescriptor::Exp);
        }
        if s == "bell" {
            return Ok(PhiDescriptor::bell());
        }
        if let Some(a) = s.strip_prefix("ml:") {
            let alpha = parse_f64(a)?;
            return Ok(PhiDescriptor::MittagLeffler { alpha });
        }
        if let Some(rest) = s.strip_prefix("custom:") {
            let inner = rest
                .trim()
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| Error::Parse(format!("custom coefficients must be bracketed: {s}")))?;
            let coefficients = inner.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
            return Ok(PhiDescriptor::Custom { coefficients });
        }
        for head in ["mix", "product", "compose"] {
            if let Some(rest) = s.strip_prefix(head) {
                let body = rest
                    .trim()
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::Parse(format!("expected parentheses after {head}: {s}")))?;
                let args = split_top_level(body);
                return match head {
                    "mix" => {
                        let mut weights = Vec::new();
                        let mut children = Vec::new();
                        for a in args {
                            let (w, d) = a
                                .split_once('*')
                                .ok_or_else(|| Error::Parse(format!("mix term needs <weight>*<desc>: {a}")))?;
                            weights.push(parse_f64(w)?);
                            children.push(PhiDescriptor::parse(d)?);
                        }
                        Ok(PhiDescriptor::Mix { weights, children })
                    }
                    "product" => Ok(PhiDescriptor::Product {
                        children: args.iter().map(|a| PhiDescriptor::parse(a)).collect::<Result<_>>()?,
                    }),
                    _ => {
                        if args.len() != 2 {
                            return Err(Error::Parse(format!("compose takes two arguments: {s}")));
                        }
                        Ok(PhiDescriptor::Compose {
                            outer: Box::new(PhiDescriptor::parse(&args[0])?),
                            inner: Box::new(PhiDescriptor::parse(&args[1])?),
                        })
                    }
                };
            }
        }
        Err(Error::Parse(format!("unknown φ descriptor `{s}`")))
    }

    /// Parses the key=value configuration form:
    ///
    /// ```text
    /// kind = mix            # exp | ml | custom | mix | product | compose
    /// alpha = 0.5           # ml
    /// coefficients = 1, 1, 0.5
    /// weights = 0.25, 0.75  # mix
    /// children = exp; ml:0.5
    /// outer = exp           # compose
    /// inner = exp
    /// ```
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut kv = std::collections::BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{line}`")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| kv.get(k).ok_or_else(|| Error::Parse(format!("missing key `{k}`")));
        let list = |v: &str| v.split(',').map(parse_f64).collect::<Result<Vec<_>>>();
        let children = |v: &str| v.split(';').map(PhiDescriptor::parse).collect::<Result<Vec<_>>>();
        match get("kind")?.as_str() {
            "exp" => Ok(PhiDescriptor::Exp),
            "ml" | "mittag_leffler" => Ok(PhiDescriptor::MittagLeffler { alpha: parse_f64(get("alpha")?)? }),
            "custom" => Ok(PhiDescriptor::Custom { coefficients: list(get("coefficients")?)? }),
            "mix" => Ok(PhiDescriptor::Mix { weights: list(get("weights")?)?, children: children(get("children")?)? }),
            "product" => Ok(PhiDescriptor::Product { children: children(get("children")?)? }),
            "compose" => Ok(PhiDescriptor::Compose {
                outer: Box::new(PhiDescriptor::parse(get("outer")?)?),
                inner: Box::new(PhiDescriptor::parse(get("inner")?)?),
            }),
            other => Err(Error::Parse(format!("unknown kind `{other}`"))),
        }
    }
}

impl fmt::Display for PhiDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiDescriptor::Exp => write!(f, "exp"),
            PhiDescriptor::MittagLeffler { alpha } => write!(f, "ml:{alpha}"),
            PhiDescriptor::Custom { coefficients } => {
                let c: Vec<String> = coefficients.iter().map(|x| x.to_string()).collect();
                write!(f, "custom:[{}]", c.join(","))
            }
            PhiDescriptor::Mix { weights, children } => {
                let parts: Vec<String> = weights.iter().zip(children).map(|(w, c)| format!("{w}*{c}")).collect();
                write!(f, "mix({})", parts.join(", "))
            }
            PhiDescriptor::Product { children } => {
                let parts: Vec<String> = children.iter().map(|c| c.to_string()).collect();
                write!(f, "product({})", parts.join(", "))
            }
            PhiDescriptor::Compose { outer, inner } => write!(f, "compose({outer}, {inner})"),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: `{}`", s.trim())))
}

fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if ch == ',' && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(ch);
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

#[derive(Debug, Clone)]
enum Node {
    Exp,
    MittagLeffler { alpha: f64 },
    Custom,
    Mix { weights: Vec<f64>, children: Vec<MLFunction> },
    Product(Vec<MLFunction>),
    Compose { outer: Box<MLFunction>, inner: Box<MLFunction>, norm: f64 },
}

/// A member of the ML class, truncated at order K.
#[derive(Debug, Clone)]
pub struct MLFunction {
    taylor: Vec<f64>,
    node: Node,
    descriptor: PhiDescriptor,
    /// Degree when φ is a polynomial fully captured by the truncation.
    poly_degree: Option<usize>,
}

/// Moment weights m_n = c_n / 2ⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentWeights {
    m: Vec<f64>,
}

impl MomentWeights {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.first() != Some(&1.0) || m.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidParameter("moment weights need m_0 = 1 and m_n ≥ 0".into()));
        }
        Ok(Self { m })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.m
    }

    /// m_n, or an error when n exceeds the truncation.
    pub fn get(&self, n: usize) -> Result<f64> {
        self.m.get(n).copied().ok_or(Error::DegreeLimit { degree: n, max: self.m.len() - 1 })
    }

    pub fn order(&self) -> usize {
        self.m.len() - 1
    }
}

/// Value of a truncated series with its tail estimate.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// Outcome of [`psd_sample_check`].
#[derive(Debug, Clone)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    /// max over pairs of |φ(z w̄)|² - φ(|z|²) φ(|w|²) (≤ 0 when the bound holds).
    pub max_pair_excess: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Builds an ML function from its descriptor to truncation order `order`.
pub fn make_ml(desc: &PhiDescriptor, order: usize) -> Result<MLFunction> {
    if order < 2 {
        return Err(Error::InvalidParameter(format!("truncation order must be at least 2, got {order}")));
    }
    let (mut taylor, node, poly_degree) = match desc {
        PhiDescriptor::Exp => {
            let mut c = vec![1.0; order + 1];
            for k in 1..=order {
                c[k] = c[k - 1] / k as f64;
            }
            (c, Node::Exp, None)
        }
        PhiDescriptor::MittagLeffler { alpha } => {
            if !(*alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::InvalidParameter(format!("Mittag-Leffler parameter must be positive, got {alpha}")));
            }
            let c = (0..=order).map(|k| recip_gamma(alpha * k as f64 + 1.0)).collect();
            (c, Node::MittagLeffler { alpha: *alpha }, None)
        }
        PhiDescriptor::Custom { coefficients } => {
            if coefficients.len() < 2 {
                return Err(Error::NotInClass("need at least c_0 and c_1".into()));
            }
            let mut c = vec![0.0; order + 1];
            for (k, x) in coefficients.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NotInClass(format!("coefficient c_{k} is not finite")));
                }
                if k <= order {
                    c[k] = *x;
                }
            }
            let deg = coefficients.iter().rposition(|x| *x != 0.0).unwrap_or(0);
            (c, Node::Custom, Some(deg))
        }
        PhiDescriptor::Mix { weights, children } => {
            if weights.len() != children.len() || weights.is_empty() {
                return Err(Error::InvalidParameter("mix needs one weight per child".into()));
            }
            if weights.iter().any(|w| *w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter("mix weights must be nonnegative and sum to 1".into()));
            }
            let kids = children.iter().map(|c| make_ml(c, order)).collect::<Result<Vec<_>>>()?;
            let mut c = vec![0.0; order + 1];
            for (w, k) in weights.iter().zip(&kids) {
                for (ci, ki) in c.iter_mut().zip(&k.taylor) {
                    *ci += w * ki;
                }
            }
            let deg = kids.iter().map(|k| k.poly_degree).try_fold(0, |m, d| d.map(|d| m.max(d)));
            (c, Node::Mix { weights: weights.clone(), children: kids }, deg)
        }
        PhiDescriptor::Product { children } => {
            if children.is_empty() {
                return Err(Error::InvalidParameter("product needs at least one factor".into()));
            }
            let kids = children.iter().map(|c| make_ml(c, order)).collect::<Result<Vec<_>>>()?;
            let mut c = kids[0].taylor.clone();
            for k in &kids[1..] {
                c = series::mul_trunc(&c, &k.taylor, order);
            }
            let deg = kids.iter().map(|k| k.poly_degree).try_fold(0, |s, d| d.map(|d| s + d));
            (c, Node::Product(kids), deg)
        }
        PhiDescriptor::Compose { outer, inner } => {
            let inner_fn = make_ml(inner, order)?;
            let (outer_fn, shifted) = shifted_coefficients(outer, order)?;
            let norm = shifted[0];
            let mut w = inner_fn.taylor.clone();
            w[0] = 0.0;
            let mut c = series::compose_trunc(&shifted, &w, order);
            for x in c.iter_mut() {
                *x /= norm;
            }
            let deg = match (outer_fn.poly_degree, inner_fn.poly_degree) {
                (Some(a), Some(b)) => Some(a * b),
                _ => None,
            };
            (c, Node::Compose { outer: Box::new(outer_fn), inner: Box::new(inner_fn), norm }, deg)
        }
    };
    validate_coefficients(&mut taylor)?;
    Ok(MLFunction { taylor, node, descriptor: desc.clone(), poly_degree })
}

/// Taylor coefficients of the outer function re-expanded around 1:
/// d_k = Σ_{n≥k} C(n,k) a_n, with the outer order grown until the omitted
/// terms are negligible.
fn shifted_coefficients(outer: &PhiDescriptor, order: usize) -> Result<(MLFunction, Vec<f64>)> {
    let mut ext = (2 * order).max(order + 64);
    loop {
        let f = make_ml(outer, ext)?;
        let a = &f.taylor;
        let top = a.iter().rposition(|x| *x > 0.0).unwrap_or(0);
        let mut d = vec![0.0; order + 1];
        let mut last_rel: f64 = 0.0;
        for (k, dk) in d.iter_mut().enumerate() {
            let mut acc = 0.0;
            let mut last = 0.0;
            for (n, an) in a.iter().enumerate().skip(k) {
                if *an <= 0.0 {
                    continue;
                }
                let ln_binom = ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
                let term = (ln_binom + an.ln()).exp();
                acc += term;
                last = term;
            }
            *dk = acc;
            if acc > 0.0 {
                last_rel = last_rel.max(last / acc);
            }
        }
        let exact = f.poly_degree.is_some_and(|deg| deg <= ext) || top < ext;
        if exact || last_rel < 1e-17 {
            return Ok((f, d));
        }
        if ext >= 8192 {
            return Err(Error::Accuracy(format!(
                "re-expansion of the outer function around 1 did not converge (relative tail {last_rel:e})"
            )));
        }
        ext *= 2;
    }
}

fn validate_coefficients(c: &mut [f64]) -> Result<()> {
    if (c[0] - 1.0).abs() > 1e-12 {
        return Err(Error::NotInClass(format!("c_0 = {} but φ(0) must equal 1", c[0])));
    }
    c[0] = 1.0;
    if !(c[1] > 0.0) {
        return Err(Error::NotInClass(format!("c_1 = {} but φ'(0) must be positive", c[1])));
    }
    let scale = c.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for (k, x) in c.iter_mut().enumerate() {
        if *x < 0.0 {
            if *x < -NEG_COEFF_TOL * scale {
                return Err(Error::NotInClass(format!("negative Taylor coefficient c_{k} = {x}")));
            }
            *x = 0.0;
        }
    }
    Ok(())
}

impl MLFunction {
    /// Taylor coefficients c_0..c_K.
    pub fn taylor(&self) -> &[f64] {
        &self.taylor
    }

    pub fn order(&self) -> usize {
        self.taylor.len() - 1
    }

    pub fn descriptor(&self) -> &PhiDescriptor {
        &self.descriptor
    }

    /// c_1 = φ'(0), the isometry constant.
    pub fn c1(&self) -> f64 {
        self.taylor[1]
    }

    /// Whether the truncation represents φ exactly (φ is a polynomial of degree ≤ K).
    pub fn is_exact_polynomial(&self) -> bool {
        self.poly_degree.is_some_and(|d| d <= self.order())
    }

    /// Ratio-test slope ρ ≈ c_k / c_{k-1} at the end of the truncation;
    /// `None` when the truncation is exact.
    fn tail_ratio(&self) -> Option<f64> {
        if self.is_exact_polynomial() {
            return None;
        }
        let k_max = self.order();
        let mut rho: f64 = 0.0;
        for k in (k_max.saturating_sub(3).max(1))..=k_max {
            if self.taylor[k - 1] > 0.0 {
                rho = rho.max(self.taylor[k] / self.taylor[k - 1]);
            }
        }
        Some(rho)
    }

    /// Upper estimate of Σ_{k>K} c_k r^k from a geometric majorant.
    pub fn tail_bound(&self, r: f64) -> f64 {
        let Some(rho) = self.tail_ratio() else { return 0.0 };
        let q = rho * r;
        if q >= 1.0 {
            return f64::INFINITY;
        }
        let k = self.order() as i32;
        self.taylor[k as usize] * r.powi(k) * q / (1.0 - q)
    }

    /// Largest radius at which the truncation tail stays below `TAIL_TOL`.
    pub fn reliability_radius(&self) -> f64 {
        if self.tail_ratio().is_none() {
            return f64::INFINITY;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while self.tail_bound(hi) < TAIL_TOL {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return hi;
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.tail_bound(mid) < TAIL_TOL {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Truncated series Σ_{k≤K} c_k x^k with its tail estimate.
    pub fn eval(&self, x: Complex64) -> Result<Evaluation> {
        let tail_bound = self.tail_bound(x.norm());
        let value = series::horner(&self.taylor.iter().map(|c| Complex64::new(*c, 0.0)).collect::<Vec<_>>(), x);
        if !(tail_bound <= TAIL_TOL * value.norm().max(1.0)) {
            return Err(Error::Accuracy(format!(
                "|x| = {} is outside the reliability radius {} of the order-{} truncation",
                x.norm(),
                self.reliability_radius(),
                self.order()
            )));
        }
        Ok(Evaluation { value, tail_bound })
    }

    /// Series evaluation on the real line, accepted only if the tail is small
    /// and cancellation loses fewer than ~4 digits.
    fn eval_series_real(&self, x: f64) -> Option<f64> {
        let tail = self.tail_bound(x.abs());
        let value = series::horner(&self.taylor, x);
        let abs_sum = series::horner(&self.taylor, x.abs());
        let ok = abs_sum.is_finite() && tail <=TAIL_TOL * value.abs().max(1e-300) && abs_sum <= 1e4 * value.abs();
        ok.then_some(value)
    }

    /// φ(x) for real x, following the construction tree whenever the plain
    /// series is unreliable. This is the route used for characteristic
    /// functions φ(-y²/2).
    pub fn eval_real(&self, x: f64) -> Result<f64> {
        if self.is_exact_polynomial() {
            return Ok(series::horner(&self.taylor, x));
        }
        if let Some(v) = self.eval_series_real(x) {
            return Ok(v);
        }
        match &self.node {
            Node::Exp => Ok(x.exp()),
            Node::MittagLeffler { alpha } => {
                if (*alpha - 1.0).abs() < 1e-15 {
                    Ok(x.exp())
                } else if *alpha < 1.0 && x < 0.0 {
                    mittag_leffler_negative(*alpha, -x)
                } else {
                    Err(Error::Accuracy(format!(
                        "no reliable evaluation route for E_{alpha}({x}) outside the series radius"
                    )))
                }
            }
            Node::Custom => Ok(series::horner(&self.taylor, x)),
            Node::Mix { weights, children } => {
                let mut acc = 0.0;
                for (w, c) in weights.iter().zip(children) {
                    acc += w * c.eval_real(x)?;
                }
                Ok(acc)
            }
            Node::Product(children) => children.iter().try_fold(1.0, |acc, c| Ok(acc * c.eval_real(x)?)),
            Node::Compose { outer, inner, norm } => Ok(outer.eval_real(inner.eval_real(x)?)? / norm),
        }
    }

    /// The one-dimensional characteristic function y ↦ φ(-y²/2).
    pub fn char_fn(&self, y: f64) -> Result<f64> {
        self.eval_real(-0.5 * y * y)
    }

    /// Exact rational Taylor coefficients when φ has them (exp, custom,
    /// rational mixes and products, compositions with an exp or polynomial
    /// outer function). Mittag-Leffler coefficients are irrational.
    pub fn exact_taylor(&self) -> Option<Vec<BigRational>> {
        exact_taylor(&self.descriptor, self.order())
    }
}

/// Exact Taylor coefficients of a descriptor to order `order`, if rational.
pub fn exact_taylor(desc: &PhiDescriptor, order: usize) -> Option<Vec<BigRational>> {
    let one = BigRational::one();
    match desc {
        PhiDescriptor::Exp => {
            let mut c = vec![one.clone(); order + 1];
            for k in 1..=order {
                c[k] = &c[k - 1] / BigRational::from_integer(BigInt::from(k));
            }
            Some(c)
        }
        PhiDescriptor::MittagLeffler { alpha } if *alpha == 1.0 => exact_taylor(&PhiDescriptor::Exp, order),
        PhiDescriptor::MittagLeffler { .. } => None,
        PhiDescriptor::Custom { coefficients } => {
            let mut c = vec![BigRational::zero(); order + 1];
            for (k, x) in coefficients.iter().enumerate().take(order + 1) {
                c[k] = BigRational::from_float(*x)?;
            }
            Some(c)
        }
        PhiDescriptor::Mix { weights, children } => {
            let mut c = vec![BigRational::zero(); order + 1];
            for (w, ch) in weights.iter().zip(children) {
                let w = BigRational::from_float(*w)?;
                for (ci, x) in c.iter_mut().zip(exact_taylor(ch, order)?) {
                    *ci += &w * x;
                }
            }
            Some(c)
        }
        PhiDescriptor::Product { children } => {
            let mut c = exact_taylor(children.first()?, order)?;
            for ch in &children[1..] {
                c = series::mul_trunc(&c, &exact_taylor(ch, order)?, order);
            }
            Some(c)
        }
        PhiDescriptor::Compose { outer, inner } => {
            let mut w = exact_taylor(inner, order)?;
            w[0] = BigRational::zero();
            // exp(ψ) / exp(1) = exp(ψ - 1)
            let shifted = match outer.as_ref() {
                PhiDescriptor::Exp => exact_taylor(&PhiDescriptor::Exp, order)?,
                PhiDescriptor::Custom { coefficients } => {
                    let a: Vec<BigRational> =
                        coefficients.iter().map(|x| BigRational::from_float(*x)).collect::<Option<_>>()?;
                    let mut d = vec![BigRational::zero(); order + 1];
                    for (n, an) in a.iter().enumerate() {
                        let mut binom = BigInt::one();
                        for k in 0..=n.min(order) {
                            if k > 0 {
                                binom = binom * BigInt::from(n + 1 - k) / BigInt::from(k);
                            }
                            d[k] += an * BigRational::from_integer(binom.clone());
                        }
                    }
                    let norm = d[0].clone();
                    d.into_iter().map(|x| x / &norm).collect()
                }
                _ => return None,
            };
            Some(series::compose_trunc(&shifted, &w, order))
        }
    }
}

/// E_α(-s) for 0 < α < 1 and s > 0: asymptotic expansion when it has
/// converged to working precision, otherwise the completely monotone
/// integral representation
/// E_α(-t^α) = ∫_0^∞ e^{-rt} K_α(r) dr,
/// K_α(r) = r^{α-1} sin(απ) / (π (r^{2α} + 2 r^α cos(απ) + 1)),
/// integrated by the trapezoid rule after r = e^{v/α}.
pub(crate) fn mittag_leffler_negative(alpha: f64, s: f64) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) || s < 0.0 {
        return Err(Error::InvalidParameter(format!("E_α(-s) route needs 0<α<1, s≥0 (α={alpha}, s={s})")));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    if let Some(v) = ml_negative_asymptotic(alpha, s) {
        return Ok(v);
    }
    Ok(ml_negative_integral(alpha, s))
}

fn ml_negative_asymptotic(alpha: f64, s: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let ln_s = s.ln();
    for k in 1..60 {
        let rg = recip_gamma(1.0 - alpha * k as f64);
        if rg == 0.0 {
            continue;
        }
        let mag = (rg.abs().ln() - k as f64 * ln_s).exp();
        if mag > prev {
            return None;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * rg.signum() * mag;
        prev = mag;
        if k > 1 && mag <= 1e-17 * sum.abs() {
            return Some(sum);
        }
    }
    None
}

fn ml_negative_integral(alpha: f64, s: f64) -> f64 {
    let t = s.powf(1.0 / alpha);
    let width = ((1.0 - alpha) * PI).min(0.5 * alpha * PI);
    let h = width / 8.0;
    let (sin_a, cos_a) = (alpha * PI).sin_cos();
    let f = |v: f64| (-t * (v / alpha).exp()).exp() / (2.0 * v.cosh() + 2.0 * cos_a);
    // the integrand decays like e^{-|v|} on the left; on the right the
    // double exponential takes over once t e^{v/α} is large
    let v_hi = (alpha * (60.0 / t).ln()).min(45.0);
    let v_lo = -45.0;
    let n = ((v_hi - v_lo) / h).ceil() as usize;
    let h = (v_hi - v_lo) / n as f64;
    let mut acc = 0.5 * (f(v_lo) + f(v_hi));
    for i in 1..n {
        acc += f(v_lo + i as f64 * h);
    }
    acc * h * sin_a / (alpha * PI)
}

/// φ coefficients divided by 2ⁿ.
pub fn moment_weights(phi: &MLFunction) -> MomentWeights {
    let mut scale = 1.0;
    let m = phi
        .taylor
        .iter()
        .map(|c| {
            let v = c * scale;
            scale *= 0.5;
            v
        })
        .collect();
    MomentWeights { m }
}

/// Exact moment weights from exact Taylor coefficients.
pub fn exact_moment_weights(taylor: &[BigRational]) -> Vec<BigRational> {
    let mut pow = BigRational::one();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    taylor
        .iter()
        .map(|c| {
            let v = c * &pow;
            pow = &pow * &half;
            v
        })
        .collect()
}

/// φ(z) evaluated through the truncated series.
pub fn eval_phi(phi: &MLFunction, x: Complex64) -> Result<Evaluation> {
    phi.eval(x)
}

/// Samples the positive-definiteness of the kernel φ(z w̄) on a finite point
/// set, together with the pairwise bound |φ(z w̄)|² ≤ φ(|z|²) φ(|w|²).
pub fn psd_sample_check(phi: &MLFunction, points: &[Complex64], tol: f64) -> Result<PsdReport> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one point".into()));
    }
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = phi.eval(points[i] * points[j].conj())?.value;
        }
    }
    // symmetrize away rounding asymmetry
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let min_eigenvalue = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut max_pair_excess = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let lhs = h[(i, j)].norm_sqr();
            let rhs = h[(i, i)].re * h[(j, j)].re;
            max_pair_excess = max_pair_excess.max(lhs - rhs);
        }
    }
    let passed = min_eigenvalue >= -tol && max_pair_excess <= tol.max(1e-10);
    Ok(PsdReport { min_eigenvalue, max_pair_excess, tol, passed })
}

/// f64 view of exact coefficients.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exp_coefficients() {
        let phi = make_ml(&PhiDescriptor::Exp, 4).unwrap();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0];
        for (a, b) in phi.taylor().iter().zip(expect) {
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn ml_one_is_exp() {
        let e = make_ml(&PhiDescriptor::Exp, 4).unwrap();
        let m = make_ml(&PhiDescriptor::ml(1.0), 4).unwrap();
        for (a, b) in e.taylor().iter().zip(m.taylor()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn bell_composition() {
        // Bell numbers by the recurrence B_{n+1} = Σ C(n,k) B_k
        let mut bell = vec![1u64];
        for n in 0..20usize {
            let mut binom = 1u64;
            let mut next = 0u64;
            for k in 0..=n {
                if k > 0 {
                    binom = binom * (n + 1 - k) as u64 / k as u64;
                }
                next += binom * bell[k];
            }
            bell.push(next);
        }
        let phi = make_ml(&PhiDescriptor::bell(), 20).unwrap();
        let mut fact = 1.0;
        for k in 0..=20 {
            if k > 0 {
                fact *= k as f64;
            }
            let expect = bell[k] as f64 / fact;
            assert!((phi.taylor()[k] - expect).abs() <= 1e-13 * expect, "k={k}");
        }
        let exact = phi.exact_taylor().unwrap();
        assert_eq!(exact[5], BigRational::new(52.into(), 120.into()));
    }

    #[test]
    fn invariants_and_errors() {
        assert!(matches!(make_ml(&PhiDescriptor::ml(0.0), 8), Err(Error::InvalidParameter(_))));
        assert!(matches!(make_ml(&PhiDescriptor::ml(-1.0), 8), Err(Error::InvalidParameter(_))));
        let neg = PhiDescriptor::Custom { coefficients: vec![1.0, 1.0, -0.1] };
        assert!(matches!(make_ml(&neg, 8), Err(Error::NotInClass(_))));
        let no_slope = PhiDescriptor::Custom { coefficients: vec![1.0, 0.0, 0.5] };
        assert!(matches!(make_ml(&no_slope, 8), Err(Error::NotInClass(_))));
        let bad_mix = PhiDescriptor::Mix { weights: vec![0.5, 0.6], children: vec![PhiDescriptor::Exp, PhiDescriptor::Exp] };
        assert!(make_ml(&bad_mix, 8).is_err());
        assert!(make_ml(&PhiDescriptor::Exp, 1).is_err());
    }

    #[test]
    fn combinators_stay_in_class() {
        let descs = [
            PhiDescriptor::Mix { weights: vec![0.3, 0.7], children: vec![PhiDescriptor::Exp, PhiDescriptor::ml(0.5)] },
            PhiDescriptor::Product { children: vec![PhiDescriptor::ml(0.7), PhiDescriptor::ml(1.5)] },
            PhiDescriptor::Compose { outer: Box::new(PhiDescriptor::ml(0.5)), inner: Box::new(PhiDescriptor::Exp) },
            PhiDescriptor::Compose { outer: Box::new(PhiDescriptor::bell()), inner: Box::new(PhiDescriptor::Exp) },
        ];
        for d in &descs {
            let phi = make_ml(d, 40).unwrap();
            assert_eq!(phi.taylor()[0], 1.0);
            assert!(phi.taylor()[1] > 0.0);
            assert!(phi.taylor().iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn product_matches_exact_rational() {
        let d = PhiDescriptor::Product { children: vec![PhiDescriptor::Exp, PhiDescriptor::bell()] };
        let phi = make_ml(&d, 12).unwrap();
        let ex = phi.exact_taylor().unwrap();
        for (a, b) in phi.taylor().iter().zip(&ex) {
            assert!((a - rational_to_f64(b)).abs() <= 1e-14 * a);
        }
    }

    #[test]
    fn eval_examples() {
        let e = make_ml(&PhiDescriptor::Exp, DEFAULT_ORDER).unwrap();
        assert_eq!(eval_phi(&e, c(0.0, 0.0)).unwrap().value, c(1.0, 0.0));
        let m1 = make_ml(&PhiDescriptor::ml(1.0), DEFAULT_ORDER).unwrap();
        assert!((eval_phi(&m1, c(-1.0, 0.0)).unwrap().value.re - (-1.0f64).exp()).abs() < 1e-15);
        // E_{1/2}(-1) = e · erfc(1)
        let mh = make_ml(&PhiDescriptor::ml(0.5), DEFAULT_ORDER).unwrap();
        let expect = std::f64::consts::E * libm::erfc(1.0);
        assert!((eval_phi(&mh, c(-1.0, 0.0)).unwrap().value.re - expect).abs() < 1e-13);
        assert!((expect - 0.427584).abs() < 1e-6);
    }

    #[test]
    fn outside_radius_is_an_accuracy_failure() {
        let e = make_ml(&PhiDescriptor::Exp, 10).unwrap();
        let r = e.reliability_radius();
        assert!(r > 0.0 && r < 5.0);
        assert!(matches!(eval_phi(&e, c(2.0 * r, 0.0)), Err(Error::Accuracy(_))));
        assert!(eval_phi(&e, c(0.5 * r, 0.0)).is_ok());
    }

    #[test]
    fn custom_polynomial_has_infinite_radius() {
        let p = make_ml(&PhiDescriptor::Custom { coefficients: vec![1.0, 0.5, 0.25] }, 8).unwrap();
        assert!(p.reliability_radius().is_infinite());
        assert!((eval_phi(&p, c(10.0, 0.0)).unwrap().value.re - 31.0).abs() < 1e-12);
    }

    #[test]
    fn exp_agrees_with_library_exponential() {
        let e = make_ml(&PhiDescriptor::Exp, 30).unwrap();
        let mut x = -5.0;
        while x <= 5.0 {
            let v = eval_phi(&e, c(x, 0.0)).unwrap().value.re;
            assert!((v - x.exp()).abs() <= 1e-12 * x.exp().max(1.0), "x={x}");
            x += 0.25;
        }
    }

    #[test]
    fn ml_negative_axis_routes() {
        // E_{1/2}(-s) = e^{s²} erfc(s); compare with the scaled erfc
        for &s in &[0.3, 1.0, 2.5, 7.0, 30.0, 400.0, 1e5] {
            let via_int = ml_negative_integral(0.5, s);
            let expect = erfcx(s);
            assert!((via_int - expect).abs() <= 1e-12 * expect, "integral s={s}: {via_int} vs {expect}");
            let v = mittag_leffler_negative(0.5, s).unwrap();
            assert!((v - expect).abs() <= 1e-12 * expect, "dispatch s={s}");
        }
        // series and integral agree where both apply
        let phi = make_ml(&PhiDescriptor::ml(0.8), DEFAULT_ORDER).unwrap();
        for &s in &[0.5, 1.0, 2.0] {
            let a = series::horner(phi.taylor(), -s);
            let b = ml_negative_integral(0.8, s);
            assert!((a - b).abs() < 1e-12, "s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn ml_negative_large_argument_decay() {
        // E_α(-x) ~ x^{-1} / Γ(1-α)
        let x = 1e6;
        let v = mittag_leffler_negative(0.3, x).unwrap();
        assert!((v * x * gamma(0.7) - 1.0).abs() < 1e-5);
    }

    /// e^{x²} erfc(x) by a continued fraction (x large) or statrs (x small).
    fn erfcx(x: f64) -> f64 {
        if x < 5.0 {
            return (x * x).exp() * libm::erfc(x);
        }
        // Lentz evaluation of 1/(x+ 1/2/(x+ 1/(x+ 3/2/(x+ ...))))/√π
        let mut f = x;
        let tiny = 1e-300;
        let mut c = f;
        let mut d = 0.0;
        for k in 1..200 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            d = if d.abs() < tiny { tiny } else { d };
            c = x + a / c;
            c = if c.abs() < tiny { tiny } else { c };
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 / (f * PI.sqrt())
    }

    #[test]
    fn char_fn_of_bell_has_an_atom() {
        // e^{e^{-s}-1} → e^{-1} as s → ∞
        let phi = make_ml(&PhiDescriptor::bell(), DEFAULT_ORDER).unwrap();
        assert!((phi.char_fn(100.0).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn moment_weight_examples() {
        let e = make_ml(&PhiDescriptor::Exp, 6).unwrap();
        let m = moment_weights(&e);
        let expect = [1.0, 0.5, 0.125, 1.0 / 48.0];
        for (a, b) in m.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-16);
        }
        for &alpha in &[0.3, 0.5, 0.8, 1.7] {
            let phi = make_ml(&PhiDescriptor::ml(alpha), 20).unwrap();
            let m = moment_weights(&phi);
            assert_eq!(m.as_slice()[0], 1.0);
            for n in 0..=20usize {
                let expect = (-(ln_gamma_oracle(alpha * n as f64 + 1.0)) - n as f64 * 2f64.ln()).exp();
                assert!((m.as_slice()[n] - expect).abs() <= 1e-12 * expect, "α={alpha} n={n}");
            }
        }
    }

    fn ln_gamma_oracle(x: f64) -> f64 {
        crate::special::ln_gamma_stirling(x)
    }

    #[test]
    fn psd_examples() {
        let e = make_ml(&PhiDescriptor::Exp, DEFAULT_ORDER).unwrap();
        let r = psd_sample_check(&e, &[c(0.0, 0.0)], 1e-12).unwrap();
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-15 && r.passed);
        let r = psd_sample_check(&e, &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)], 1e-10).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn psd_random_points_in_unit_disc() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Complex64> = (0..20)
            .map(|_| Complex64::from_polar(rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>()))
            .collect();
        let mh = make_ml(&PhiDescriptor::ml(0.5), DEFAULT_ORDER).unwrap();
        let r = psd_sample_check(&mh, &pts, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_pair_excess <= 1e-10);
    }

    #[test]
    fn descriptor_parsing_round_trip() {
        for s in ["exp", "ml:0.5", "custom:[1,1,0.5]", "mix(0.25*exp, 0.75*ml:0.5)", "product(exp, ml:0.7)", "compose(exp, exp)"] {
            let d = PhiDescriptor::parse(s).unwrap();
            assert_eq!(PhiDescriptor::parse(&d.to_string()).unwrap(), d);
        }
        assert_eq!(PhiDescriptor::parse("bell").unwrap(), PhiDescriptor::bell());
        assert!(PhiDescriptor::parse("nope").is_err());
        let cfg = "kind = mix\nweights = 0.5, 0.5 # even\nchildren = exp; ml:0.5\n";
        let d = PhiDescriptor::parse_config(cfg).unwrap();
        assert_eq!(d, PhiDescriptor::parse("mix(0.5*exp, 0.5*ml:0.5)").unwrap());
        assert!(PhiDescriptor::parse_config("alpha = 1").is_err());
    }
}
