//! The associated process X_t = c_1^{-1/2} Σ_j (∫_0^t ζ_j) Q_j, its
//! derivative N(t) = c_1^{-1/2} Σ_j ζ_j(t) Q_j, and Wick-Riemann sums.
//!
//! Q_j sits at position j of a degree-one multi-index, so in H_p it carries
//! the weight a_{j+1}·b_1.

use crate::error::{Error, Result};
use crate::fockspace::wick_product;
use crate::graded::GradedSeries;
use crate::hermite::{hermite_fns, hermite_integrals, HermiteEnvelope};
use crate::kondratiev::{hp_norm, WeightSystem};
use crate::mlfun::MLFunction;
use crate::multiindex::MultiIndex;
use crate::quad::{integrate_vec, QuadConfig};
use num_complex::Complex64;

/// A degree-one element Σ_{j≤J} x_j Q_j at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessElement {
    pub t: f64,
    pub series: GradedSeries<Complex64>,
}

impl ProcessElement {
    fn from_coeffs(t: f64, coeffs: &[f64]) -> Self {
        let series =
            GradedSeries::from_terms(coeffs.iter().enumerate().map(|(j, c)| (MultiIndex::unit(j), Complex64::new(*c, 0.0))));
        Self { t, series }
    }

    /// Coefficient of Q_j.
    pub fn coeff(&self, j: usize) -> f64 {
        self.series.get(&MultiIndex::unit(j)).re
    }
}

fn check_c1(phi: &MLFunction) -> Result<f64> {
    let c1 = phi.c1();
    if !(c1 > 0.0) {
        return Err(Error::NotInClass(format!("c_1 must be positive, got {c1}")));
    }
    Ok(c1)
}

/// X_t truncated to Q_0..Q_J.
pub fn process_element(t: f64, jmax: usize, phi: &MLFunction) -> Result<ProcessElement> {
    let c1 = check_c1(phi)?;
    let ints = hermite_integrals(jmax, t)?;
    Ok(ProcessElement::from_coeffs(t, &ints.iter().map(|v| v / c1.sqrt()).collect::<Vec<_>>()))
}

/// N(t) truncated to Q_0..Q_J.
pub fn noise_element(t: f64, jmax: usize, phi: &MLFunction) -> Result<ProcessElement> {
    let c1 = check_c1(phi)?;
    let z = hermite_fns(jmax, t)?;
    Ok(ProcessElement::from_coeffs(t, &z.iter().map(|v| v / c1.sqrt()).collect::<Vec<_>>()))
}

/// One row of the truncated covariance table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceRow {
    pub t: f64,
    pub s: f64,
    pub truncated: f64,
    pub exact: f64,
    pub error: f64,
}

/// c_1 Σ_{j≤J} x_j(t) x_j(s) = Σ_{j≤J} (∫_0^t ζ_j)(∫_0^s ζ_j) against t∧s
/// (for t, s ≥ 0) over all pairs of `grid`.
pub fn covariance_table(grid: &[f64], jmax: usize) -> Result<Vec<CovarianceRow>> {
    let ints: Vec<Vec<f64>> = grid.iter().map(|t| hermite_integrals(jmax, *t)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(grid.len() * grid.len());
    for (i, &t) in grid.iter().enumerate() {
        for (k, &s) in grid.iter().enumerate() {
            let truncated: f64 = ints[i].iter().zip(&ints[k]).map(|(a, b)| a * b).sum();
            let exact = if t.signum() == s.signum() { t.abs().min(s.abs()) } else { 0.0 };
            rows.push(CovarianceRow { t, s, truncated, exact, error: (truncated - exact).abs() });
        }
    }
    Ok(rows)
}

/// ‖(X_{t+h} - X_t)/h - N(t)‖_p with both elements truncated at J.
///
/// The coefficients h^{-1}∫_t^{t+h}(ζ_j(v) - ζ_j(t)) dv are integrated
/// directly, which avoids the cancellation of differencing X.
pub fn diff_quotient_error(t: f64, h: f64, jmax: usize, phi: &MLFunction, w: &WeightSystem, p: i32) -> Result<f64> {
    if h == 0.0 {
        return Err(Error::InvalidParameter("step h must be nonzero".into()));
    }
    if p < 1 {
        return Err(Error::InvalidParameter(format!("level p must be at least 1, got {p}")));
    }
    let c1 = check_c1(phi)?;
    let base = hermite_fns(jmax, t)?;
    let (v, _) = integrate_vec(
        |x, out| {
            let z = hermite_fns(jmax, x).expect("inside the evaluation range");
            for j in 0..=jmax {
                out[j] = z[j] - base[j];
            }
        },
        jmax + 1,
        t,
        t + h,
        QuadConfig { abs_tol: 1e-16, rel_tol: 1e-12, max_intervals: 2000 },
    )?;
    let coeffs: Vec<f64> = v.iter().map(|x| x / h / c1.sqrt()).collect();
    Ok(hp_norm(&ProcessElement::from_coeffs(t, &coeffs).series, p, w))
}

/// M = Σ_{j≤J} (L√j + D)² 2^{-j} from fitted Lipschitz constants.
pub fn rate_constant(env: &HermiteEnvelope, jmax: usize) -> f64 {
    (0..=jmax).map(|j| env.lipschitz(j).powi(2) * 0.5f64.powi(j as i32)).sum()
}

/// Outcome of [`derivative_rate`].
#[derive(Debug, Clone)]
pub struct RateReport {
    pub t: f64,
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of ln(error) against ln(h).
    pub slope: f64,
    pub m_bound: f64,
    /// max_h error / (M |h|).
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Difference-quotient errors at h = 10^{-1}, …, 10^{-4} with a log-log
/// slope fit. Passes when the slope is at least 0.9 and every error is
/// below M|h|.
pub fn derivative_rate(
    t: f64,
    jmax: usize,
    phi: &MLFunction,
    w: &WeightSystem,
    p: i32,
    env: &HermiteEnvelope,
) -> Result<RateReport> {
    let steps: Vec<f64> = (1..=4).map(|k| 10f64.powi(-k)).collect();
    let errors: Vec<f64> = steps.iter().map(|h| diff_quotient_error(t, *h, jmax, phi, w, p)).collect::<Result<_>>()?;
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let m_bound = rate_constant(env, jmax);
    let worst_ratio = steps.iter().zip(&errors).map(|(h, e)| e / (m_bound * h)).fold(0.0, f64::max);
    Ok(RateReport { t, steps, errors, slope, m_bound, worst_ratio, passed: slope >= 0.9 && worst_ratio <= 1.0 })
}

/// Midpoint Riemann sum Σ_i f(t_i) ◊ N(t_i) Δt on [0, 1].
pub fn wick_riemann_integral<F>(f: &F, mesh: usize, jmax: usize, phi: &MLFunction) -> Result<GradedSeries<Complex64>>
where
    F: Fn(f64) -> GradedSeries<Complex64>,
{
    if mesh < 2 {
        return Err(Error::InvalidParameter(format!("mesh must be at least 2, got {mesh}")));
    }
    let dt = 1.0 / mesh as f64;
    let mut acc = GradedSeries::new();
    for i in 0..mesh {
        let t = (i as f64 + 0.5) * dt;
        let term = wick_product(&f(t), &noise_element(t, jmax, phi)?.series);
        acc = acc.sum(&term.scale(&Complex64::new(dt, 0.0)));
    }
    Ok(acc)
}

/// Riemann sums at meshes 2^k for k in `levels` and the H_p distances
/// between consecutive levels.
#[derive(Debug, Clone)]
pub struct RiemannReport {
    pub meshes: Vec<usize>,
    pub differences: Vec<f64>,
    pub integral: GradedSeries<Complex64>,
    pub decreasing: bool,
}

/// Fails with an accuracy error when the last difference exceeds `tol`.
#[allow(clippy::too_many_arguments)]
pub fn wick_riemann_sequence<F>(
    f: &F,
    levels: std::ops::RangeInclusive<u32>,
    jmax: usize,
    phi: &MLFunction,
    w: &WeightSystem,
    p: i32,
    tol: f64,
) -> Result<RiemannReport>
where
    F: Fn(f64) -> GradedSeries<Complex64>,
{
    let meshes: Vec<usize> = levels.map(|k| 1usize << k).collect();
    let mut sums = Vec::with_capacity(meshes.len());
    for m in &meshes {
        sums.push(wick_riemann_integral(f, *m, jmax, phi)?);
    }
    let minus = Complex64::new(-1.0, 0.0);
    let differences: Vec<f64> = sums.windows(2).map(|s| hp_norm(&s[1].sum(&s[0].scale(&minus)), p, w)).collect();
    let decreasing = differences.windows(2).all(|d| d[1] < d[0]);
    let last = differences.last().copied().unwrap_or(0.0);
    if last > tol {
        return Err(Error::Accuracy(format!("Riemann sums are not Cauchy: last H_p difference {last:e} exceeds {tol:e}")));
    }
    Ok(RiemannReport { meshes, differences, integral: sums.pop().unwrap_or_default(), decreasing })
}
