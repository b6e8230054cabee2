//! Set-indexed covariances c_1·μ(A∩B) and spectral covariance kernels
//! K(t,s) = ∫ (e^{itu} - 1)(e^{-isu} - 1) u^{-2} dμ(u).

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadConfig};
use crate::special::gamma;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Default frequency window.
pub const DEFAULT_WINDOW: f64 = 200.0;

/// Kind of spectral measure.
#[derive(Clone)]
pub enum MeasureKind {
    Lebesgue,
    /// dμ = |u|^{1-2H} du.
    Fbm { hurst: f64 },
    /// Point masses (location, mass).
    Atomic(Vec<(f64, f64)>),
    /// dμ = ρ(u) du with ρ ≥ 0.
    Density(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureKind::Lebesgue => write!(f, "Lebesgue"),
            MeasureKind::Fbm { hurst } => write!(f, "Fbm {{ hurst: {hurst} }}"),
            MeasureKind::Atomic(a) => write!(f, "Atomic({a:?})"),
            MeasureKind::Density(_) => write!(f, "Density(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    pub kind: MeasureKind,
    pub window: f64,
    /// Largest tolerated tail contribution outside the window for densities.
    pub tail_tol: f64,
}

impl SpectralMeasure {
    pub fn new(kind: MeasureKind) -> Result<Self> {
        match &kind {
            MeasureKind::Fbm { hurst } if !(*hurst > 0.0 && *hurst < 1.0) => {
                return Err(Error::InvalidParameter(format!("Hurst index must lie in (0, 1), got {hurst}")));
            }
            MeasureKind::Atomic(atoms) if atoms.iter().any(|(u, m)| !(*m >= 0.0) || !u.is_finite()) => {
                return Err(Error::InvalidParameter("atomic masses must be nonnegative at finite locations".into()));
            }
            _ => {}
        }
        Ok(Self { kind, window: DEFAULT_WINDOW, tail_tol: 1e-6 })
    }

    pub fn lebesgue() -> Self {
        Self { kind: MeasureKind::Lebesgue, window: DEFAULT_WINDOW, tail_tol: 1e-6 }
    }

    pub fn fbm(hurst: f64) -> Result<Self> {
        Self::new(MeasureKind::Fbm { hurst })
    }

    pub fn with_window(mut self, window: f64) -> Self {
        self.window = window;
        self
    }

    /// Exponent e of the symmetric power density |u|^e, when μ is one.
    fn power(&self) -> Option<f64> {
        match self.kind {
            MeasureKind::Lebesgue => Some(0.0),
            MeasureKind::Fbm { hurst } => Some(1.0 - 2.0 * hurst),
            _ => None,
        }
    }

    /// Whether ∫ dμ(u) / (1 + u²) is finite.
    pub fn admissible(&self) -> Result<bool> {
        match &self.kind {
            MeasureKind::Lebesgue | MeasureKind::Fbm { .. } | MeasureKind::Atomic(_) => Ok(true),
            MeasureKind::Density(rho) => {
                let u = self.window;
                let inner = integrate(|x| rho(x) / (1.0 + x * x), -u, u, cfg())?.value;
                let edge = (rho(u) + rho(-u)) / u;
                Ok(inner.is_finite() && edge <= self.tail_tol.max(1e-3 * inner))
            }
        }
    }

    /// μ(A).
    pub fn measure(&self, a: &IntervalUnion) -> Result<f64> {
        match &self.kind {
            MeasureKind::Lebesgue => Ok(a.intervals.iter().map(|(l, r)| r - l).sum()),
            MeasureKind::Fbm { hurst } => {
                let e = 2.0 - 2.0 * hurst;
                let prim = |u: f64| u.signum() * u.abs().powf(e) / e;
                Ok(a.intervals.iter().map(|(l, r)| prim(*r) - prim(*l)).sum())
            }
            MeasureKind::Atomic(atoms) => {
                Ok(atoms.iter().filter(|(u, _)| a.contains(*u)).map(|(_, m)| m).sum())
            }
            MeasureKind::Density(rho) => {
                let mut s = 0.0;
                for (l, r) in &a.intervals {
                    if l.abs() > self.window || r.abs() > self.window {
                        return Err(Error::WindowTooSmall {
                            reason: format!("interval [{l}, {r}] leaves the window"),
                            suggested: 2.0 * l.abs().max(r.abs()),
                        });
                    }
                    s += integrate(|x| rho(x), *l, *r, cfg())?.value;
                }
                Ok(s)
            }
        }
    }
}

fn cfg() -> QuadConfig {
    QuadConfig { abs_tol: 1e-13, rel_tol: 1e-14, max_intervals: 20_000 }
}

/// A finite union of closed intervals, sorted and pairwise disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    /// Sorts and merges overlapping or touching intervals.
    pub fn new(mut raw: Vec<(f64, f64)>) -> Result<Self> {
        if raw.iter().any(|(l, r)| !(l <= r) || !l.is_finite() || !r.is_finite()) {
            return Err(Error::InvalidParameter("intervals need finite endpoints with left ≤ right".into()));
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (l, r) in raw {
            match out.last_mut() {
                Some(last) if l <= last.1 => last.1 = last.1.max(r),
                _ => out.push((l, r)),
            }
        }
        Ok(Self { intervals: out })
    }

    pub fn interval(l: f64, r: f64) -> Result<Self> {
        Self::new(vec![(l, r)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, u: f64) -> bool {
        self.intervals.iter().any(|(l, r)| *l <= u && u <= *r)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for (a, b) in &self.intervals {
            for (c, d) in &other.intervals {
                let (l, r) = (a.max(*c), b.min(*d));
                if l <= r {
                    out.push((l, r));
                }
            }
        }
        Self::new(out).expect("intersections of valid intervals are valid")
    }
}

/// c_1·μ(A∩B).
pub fn interval_covariance(a: &IntervalUnion, b: &IntervalUnion, mu: &SpectralMeasure, c1: f64) -> Result<f64> {
    Ok(c1 * mu.measure(&a.intersect(b))?)
}

/// (1 - cos(a u)) / u², with its Taylor series below |u| < 1e-3.
fn one_minus_cos_over_sq(a: f64, u: f64) -> f64 {
    if u.abs() < 1e-3 {
        let (a2, u2) = (a * a, u * u);
        a2 / 2.0 - a2 * a2 * u2 / 24.0 + a2 * a2 * a2 * u2 * u2 / 720.0
    } else {
        let s = (0.5 * a * u).sin();
        2.0 * s * s / (u * u)
    }
}

/// sin(a u) / u² · u = sin(a u)/u, with its series near zero.
fn sin_over(a: f64, u: f64) -> f64 {
    if u.abs() < 1e-3 {
        a - a * a * a * u * u / 6.0
    } else {
        (a * u).sin() / u
    }
}

/// ∫_U^∞ cos(a u) u^{-β} du for β > 1.
fn cos_tail(a: f64, beta: f64, big_u: f64) -> Result<f64> {
    let a = a.abs();
    if a == 0.0 {
        return Ok(big_u.powf(1.0 - beta) / (beta - 1.0));
    }
    // Integration by parts gives the asymptotic series
    // e^{iaU} (i/a) U^{-β} Σ_k (β)_k (-i/(aU))^k, accurate once aU ≥ 40.
    let start = big_u.max(40.0 / a);
    let mut head = 0.0;
    if start > big_u {
        head = integrate(|u| (a * u).cos() * u.powf(-beta), big_u, start, cfg())?.value;
    }
    let mut term = Complex64::new(0.0, 1.0 / a) * start.powf(-beta);
    let step = Complex64::new(0.0, -1.0 / (a * start));
    let mut sum = Complex64::new(0.0, 0.0);
    let mut prev = f64::INFINITY;
    for k in 0..200 {
        let n = term.norm();
        if n < 1e-18 || n > prev {
            break;
        }
        sum += term;
        prev = n;
        term *= step * (beta + k as f64);
    }
    Ok(head + (Complex64::from_polar(1.0, a * start) * sum).re)
}

/// 2∫_0^∞ g(u) u^{e} du for a symmetric power density |u|^e, where g is
/// even and g(u) → Σ_k w_k (1 - cos(a_k u)) / u² at infinity.
///
/// [0, 1] is mapped by u = v^m with m = 1/(1 + e) so that u^e du = m dv;
/// [1, U] is plain adaptive quadrature; beyond U the tail is exact.
fn symmetric_power_integral<G: Fn(f64) -> f64>(g: G, e: f64, terms: &[(f64, f64)], big_u: f64) -> Result<f64> {
    let m = 1.0 / (1.0 + e);
    let near = integrate(|v| if v == 0.0 { g(0.0) * m } else { g(v.powf(m)) * m }, 0.0, 1.0, cfg())?.value;
    let far = integrate(|u| g(u) * u.powf(e), 1.0, big_u, cfg())?.value;
    let beta = 2.0 - e;
    let mut tail = 0.0;
    for (w, a) in terms {
        tail += w * (cos_tail(0.0, beta, big_u)? - cos_tail(*a, beta, big_u)?);
    }
    Ok(2.0 * (near + far + tail))
}

/// K(t, s) by quadrature of the full integrand.
pub fn spectral_covariance(t: f64, s: f64, mu: &SpectralMeasure) -> Result<Complex64> {
    if t == 0.0 || s == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let d = t - s;
    if let Some(e) = mu.power() {
        let g = |u: f64| one_minus_cos_over_sq(t, u) + one_minus_cos_over_sq(s, u) - one_minus_cos_over_sq(d, u);
        let re = symmetric_power_integral(g, e, &[(1.0, t), (1.0, s), (-1.0, d)], mu.window)?;
        return Ok(Complex64::new(re, 0.0));
    }
    match &mu.kind {
        MeasureKind::Atomic(atoms) => Ok(atoms
            .iter()
            .map(|(u, m)| {
                if *u == 0.0 {
                    Complex64::new(t * s * m, 0.0)
                } else {
                    let a = Complex64::from_polar(1.0, t * u) - 1.0;
                    let b = Complex64::from_polar(1.0, -s * u) - 1.0;
                    a * b * (*m / (u * u))
                }
            })
            .sum()),
        MeasureKind::Density(rho) => {
            check_density_tail(rho.as_ref(), mu)?;
            let u = mu.window;
            let re = integrate(
                |x| (one_minus_cos_over_sq(t, x) + one_minus_cos_over_sq(s, x) - one_minus_cos_over_sq(d, x)) * rho(x),
                -u,
                u,
                cfg(),
            )?
            .value;
            let im = integrate(
                |x| (sin_over(d, x) - sin_over(t, x) + sin_over(s, x)) / if x == 0.0 { 1.0 } else { x } * rho(x),
                -u,
                u,
                cfg(),
            )?
            .value;
            Ok(Complex64::new(re, im))
        }
        MeasureKind::Lebesgue | MeasureKind::Fbm { .. } => unreachable!("power measures handled above"),
    }
}

fn check_density_tail(rho: &(dyn Fn(f64) -> f64 + Send + Sync), mu: &SpectralMeasure) -> Result<()> {
    // ∫_{|u|>U} 4/u² dμ with ρ frozen at its edge values.
    let u = mu.window;
    let tail = 4.0 * (rho(u) + rho(-u)) / u;
    if tail > mu.tail_tol {
        return Err(Error::WindowTooSmall { reason: format!("spectral tail {tail:e} outside |u| ≤ {u}"), suggested: 2.0 * u });
    }
    Ok(())
}

/// r(t) = ∫ (1 - e^{itu}) u^{-2} dμ(u), with the imaginary part taken as a
/// principal value at u = 0.
pub fn r_function(t: f64, mu: &SpectralMeasure) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if let Some(e) = mu.power() {
        let re = symmetric_power_integral(|u| one_minus_cos_over_sq(t, u), e, &[(1.0, t)], mu.window)?;
        return Ok(Complex64::new(re, 0.0));
    }
    match &mu.kind {
        MeasureKind::Atomic(atoms) => Ok(atoms
            .iter()
            .filter(|(u, _)| *u != 0.0)
            .map(|(u, m)| (1.0 - Complex64::from_polar(1.0, t * u)) * (*m / (u * u)))
            .sum()),
        MeasureKind::Density(rho) => {
            check_density_tail(rho.as_ref(), mu)?;
            let u = mu.window;
            let re = integrate(|x| one_minus_cos_over_sq(t, x) * rho(x), -u, u, cfg())?.value;
            let im = -integrate(
                |x| if x == 0.0 { 0.0 } else { sin_over(t, x) / x * (rho(x) - rho(-x)) },
                0.0,
                u,
                cfg(),
            )?
            .value;
            Ok(Complex64::new(re, im))
        }
        MeasureKind::Lebesgue | MeasureKind::Fbm { .. } => unreachable!("power measures handled above"),
    }
}

/// Atoms at u = 0 contribute t·s·m to K but nothing to r; this is that part.
fn atom_at_zero(t: f64, s: f64, mu: &SpectralMeasure) -> f64 {
    match &mu.kind {
        MeasureKind::Atomic(atoms) => atoms.iter().filter(|(u, _)| *u == 0.0).map(|(_, m)| t * s * m).sum(),
        _ => 0.0,
    }
}

/// |K(t,s) - (r(t) + conj(r(s)) - r(t-s))|.
pub fn r_decomposition_residual(t: f64, s: f64, mu: &SpectralMeasure) -> Result<f64> {
    let k = spectral_covariance(t, s, mu)?;
    let via_r = r_function(t, mu)? + r_function(s, mu)?.conj() - r_function(t - s, mu)? + atom_at_zero(t, s, mu);
    Ok((k - via_r).norm())
}

/// π / (Γ(2H+1) sin(πH)), the factor in K(t,s) = C_H (t^{2H} + s^{2H} - |t-s|^{2H}).
pub fn fbm_constant(hurst: f64) -> f64 {
    PI / (gamma(2.0 * hurst + 1.0) * (PI * hurst).sin())
}

/// Outcome of [`fbm_covariance_check`].
#[derive(Debug, Clone)]
pub struct FbmReport {
    pub hurst: f64,
    /// (t, s, K(t,s) / (t^{2H} + s^{2H} - |t-s|^{2H})).
    pub ratios: Vec<(f64, f64, f64)>,
    pub mean_ratio: f64,
    /// (max - min) / mean over the grid.
    pub spread: f64,
    pub passed: bool,
}

pub fn fbm_covariance_check(hurst: f64, grid: &[f64]) -> Result<FbmReport> {
    let mu = SpectralMeasure::fbm(hurst)?;
    let h2 = 2.0 * hurst;
    let mut ratios = Vec::new();
    for &t in grid {
        for &s in grid {
            let shape = t.abs().powf(h2) + s.abs().powf(h2) - (t - s).abs().powf(h2);
            if shape == 0.0 {
                continue;
            }
            ratios.push((t, s, spectral_covariance(t, s, &mu)?.re / shape));
        }
    }
    if ratios.is_empty() {
        return Err(Error::InvalidParameter("grid has no pair with a nonzero covariance shape".into()));
    }
    let mean_ratio = ratios.iter().map(|r| r.2).sum::<f64>() / ratios.len() as f64;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), r| (l.min(r.2), h.max(r.2)));
    let spread = (hi - lo) / mean_ratio;
    Ok(FbmReport { hurst, ratios, mean_ratio, spread, passed: spread <= 1e-3 })
}

/// Smallest eigenvalue of [Re K(t_i, t_j)].
pub fn covariance_min_eigenvalue(grid: &[f64], mu: &SpectralMeasure) -> Result<f64> {
    let n = grid.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spectral_covariance(grid[i], grid[j], mu)?.re;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m.symmetric_eigenvalues().min())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(l: f64, r: f64) -> IntervalUnion {
        IntervalUnion::interval(l, r).unwrap()
    }

    #[test]
    fn interval_examples() {
        let leb = SpectralMeasure::lebesgue();
        assert!((interval_covariance(&iv(0.0, 1.0), &iv(0.5, 2.0), &leb, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(interval_covariance(&iv(0.0, 1.0), &iv(2.0, 3.0), &leb, 1.0).unwrap(), 0.0);
        let atom = SpectralMeasure::new(MeasureKind::Atomic(vec![(0.7, 2.0)])).unwrap();
        assert_eq!(interval_covariance(&iv(0.0, 1.0), &iv(0.0, 1.0), &atom, 1.5).unwrap(), 3.0);
    }

    #[test]
    fn additive_over_disjoint_unions() {
        let fbm = SpectralMeasure::fbm(0.3).unwrap();
        let a1 = iv(-1.0, 0.5);
        let a2 = iv(1.0, 2.5);
        let a = IntervalUnion::new(vec![(-1.0, 0.5), (1.0, 2.5)]).unwrap();
        let b = iv(0.0, 2.0);
        let whole = interval_covariance(&a, &b, &fbm, 1.0).unwrap();
        let parts = interval_covariance(&a1, &b, &fbm, 1.0).unwrap() + interval_covariance(&a2, &b, &fbm, 1.0).unwrap();
        assert!((whole - parts).abs() < 1e-14);
        let merged = IntervalUnion::new(vec![(0.0, 1.0), (0.5, 2.0), (3.0, 4.0)]).unwrap();
        assert_eq!(merged.intervals(), &[(0.0, 2.0), (3.0, 4.0)]);
    }

    #[test]
    fn lebesgue_kernel() {
        let leb = SpectralMeasure::lebesgue();
        assert_eq!(spectral_covariance(0.0, 1.0, &leb).unwrap(), Complex64::new(0.0, 0.0));
        let k = spectral_covariance(1.0, 2.0, &leb).unwrap();
        assert!((k.re - 2.0 * PI).abs() < 1e-3 * 2.0 * PI, "{k}");
        assert!(r_decomposition_residual(1.0, 2.0, &leb).unwrap() < 1e-8);
    }

    #[test]
    fn tail_series_matches_quadrature() {
        for (a, beta) in [(1.0, 2.0), (0.05, 1.6), (3.0, 2.5)] {
            let direct = integrate(|u| (a * u).cos() * u.powf(-beta), 200.0, 20_000.0, QuadConfig { max_intervals: 200_000, ..cfg() })
                .unwrap()
                .value;
            let rest = cos_tail(a, beta, 20_000.0).unwrap();
            assert!((cos_tail(a, beta, 200.0).unwrap() - direct - rest).abs() < 1e-11, "a={a}");
        }
    }

    #[test]
    fn fbm_constant_matches_closed_form() {
        for h in [0.3, 0.5, 0.75] {
            let r = fbm_covariance_check(h, &[0.5, 1.0, 1.5, 2.0]).unwrap();
            assert!(r.passed, "{r:?}");
            assert!((r.mean_ratio - fbm_constant(h)).abs() < 1e-6 * fbm_constant(h));
        }
        assert!((fbm_constant(0.5) - PI).abs() < 1e-14);
    }

    #[test]
    fn atomic_and_density() {
        let atom = SpectralMeasure::new(MeasureKind::Atomic(vec![(0.0, 1.0), (1.3, 0.5), (-0.4, 2.0)])).unwrap();
        assert!(r_decomposition_residual(0.7, -1.1, &atom).unwrap() < 1e-12);
        let k = spectral_covariance(0.7, -1.1, &atom).unwrap();
        assert!((k - spectral_covariance(-1.1, 0.7, &atom).unwrap().conj()).norm() < 1e-14);
        let cauchy = SpectralMeasure::new(MeasureKind::Density(Arc::new(|u: f64| 1.0 / (1.0 + u * u)))).unwrap();
        assert!(cauchy.admissible().unwrap());
        assert!(r_decomposition_residual(0.8, 1.9, &cauchy).unwrap() < 1e-8);
        let flat = SpectralMeasure::new(MeasureKind::Density(Arc::new(|_| 1.0))).unwrap();
        assert!(matches!(spectral_covariance(1.0, 1.0, &flat), Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn psd_grid() {
        let grid = [0.2, 0.5, 1.0, 1.7, 2.4, 3.0];
        for mu in [SpectralMeasure::lebesgue(), SpectralMeasure::fbm(0.75).unwrap(), SpectralMeasure::fbm(0.3).unwrap()] {
            assert!(covariance_min_eigenvalue(&grid, &mu).unwrap() >= -1e-8);
        }
    }
}
