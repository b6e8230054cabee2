//! One- and two-dimensional marginals of P_φ.
//!
//! The N-dimensional marginal has characteristic function φ(-‖y‖²/2); it is
//! normalized here so that its total mass is exactly one:
//!
//! ```text
//! f(x) = (1/2π) ∫ φ(-y²/2) e^{-ixy} dy
//! ```
//!
//! The 1-D inversion is a trapezoid rule on a uniform frequency grid computed
//! by FFT. With y_k = kΔy, k = -M/2..M/2-1 and x_m = 2πm/(MΔy):
//!
//! ```text
//! f(x_m) ≈ (Δy/2π) (-1)^m Σ_{k'} φ(-y²_{k'-M/2}/2) e^{-2πi m k'/M}
//! ```
//!
//! Zero padding beyond the frequency window refines the x grid.

use crate::error::{Error, Result};
use crate::mlfun::MLFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;

/// Uniform grid x_min..x_max with `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { x_min: -10.0, x_max: 10.0, points: 2001 }
    }
}

impl GridSpec {
    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.step()
    }
}

/// Frequency-side settings of the inversion.
#[derive(Debug, Clone, Copy)]
pub struct InversionConfig {
    pub dy: f64,
    /// Initial half-width Y of the frequency window.
    pub y_window: f64,
    /// Largest half-width tried before giving up.
    pub max_window: f64,
    /// Required |φ(-Y²/2)| at the window edge.
    pub edge_tol: f64,
    /// Target spacing of the internal x grid.
    pub dx_target: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self { dy: 0.05, y_window: 40.0, max_window: 40.0 * 1024.0, edge_tol: 1e-8, dx_target: 2e-3 }
    }
}

/// Density values on a uniform grid.
#[derive(Debug, Clone)]
pub struct MarginalDensity1D {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// Trapezoid mass on `grid`.
    pub total_mass: f64,
    /// Number of values in [-1e-9, 0) set to zero.
    pub clipped: usize,
    /// Half-width of the frequency window that was used.
    pub y_window: f64,
}

/// Density on the internal FFT grid x_m = m·dx, m = -M/2..M/2-1.
#[derive(Debug, Clone)]
pub struct RawDensity {
    pub dx: f64,
    /// Values for m = -M/2..M/2-1.
    pub values: Vec<f64>,
    pub y_window: f64,
}

impl RawDensity {
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.values.len() / 2) as f64) * self.dx
    }

    /// Linear interpolation (zero outside the grid).
    pub fn at(&self, x: f64) -> f64 {
        let half = (self.values.len() / 2) as f64;
        let p = x / self.dx + half;
        if p < 0.0 || p >= (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = p.floor() as usize;
        let t = p - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

const NEG_CLIP: f64 = -1e-9;

/// Smallest window half-width Y (doubling from the configured start) with
/// |φ(-Y²/2)| below the edge tolerance over the last stretch of the window.
fn choose_window(phi: &MLFunction, cfg: &InversionConfig) -> Result<f64> {
    let mut y = cfg.y_window;
    loop {
        let edge = (0..8).map(|k| phi.char_fn(y * (1.0 - 0.01 * k as f64))).collect::<Result<Vec<_>>>()?;
        if edge.iter().all(|v| v.abs() < cfg.edge_tol) {
            return Ok(y);
        }
        if 2.0 * y > cfg.max_window {
            let v = phi.char_fn(y)?;
            let v_half = phi.char_fn(0.5 * y)?;
            // extrapolate a power-law tail |φ| ~ y^{-p}
            let p = (v_half.abs() / v.abs()).log2();
            if p.abs() < 1e-3 {
                // a nonzero limit is an atom of the marginal (e.g. compound Poisson φ)
                return Err(Error::WindowTooSmall {
                    reason: format!("φ(-y²/2) levels off at {v:e}; the marginal has an atom and no density"),
                    suggested: f64::INFINITY,
                });
            }
            let suggested = if p > 0.1 && v.is_finite() { y * (v.abs() / cfg.edge_tol).powf(1.0 / p) } else { f64::INFINITY };
            return Err(Error::WindowTooSmall {
                reason: format!("|φ(-y²/2)| = {:e} at y = {y} does not fall below {:e}", v.abs(), cfg.edge_tol),
                suggested,
            });
        }
        y *= 2.0;
    }
}

/// Inverts y ↦ φ(-y²/2) on the internal FFT grid.
pub fn invert_1d(phi: &MLFunction, cfg: &InversionConfig) -> Result<RawDensity> {
    let y_window = choose_window(phi, cfg)?;
    let n_freq = (2.0 * y_window / cfg.dy).ceil() as usize;
    let n_pad = (2.0 * PI / (cfg.dx_target * cfg.dy)).ceil() as usize;
    let m = n_freq.max(n_pad).next_power_of_two().max(8);
    let half = m / 2;
    let k_max = (y_window / cfg.dy).round() as usize;
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    for k in 0..=k_max.min(half - 1) {
        let v = phi.char_fn(k as f64 * cfg.dy)?;
        buf[half + k] = Complex::new(v, 0.0);
        if k > 0 {
            buf[half - k] = Complex::new(v, 0.0);
        }
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = cfg.dy / (2.0 * PI);
    let values = (0..m)
        .map(|i| {
            let mi = i as i64 - half as i64;
            let sign = if mi.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            sign * scale * buf[mi.rem_euclid(m as i64) as usize].re
        })
        .collect();
    Ok(RawDensity { dx: 2.0 * PI / (m as f64 * cfg.dy), values, y_window })
}

/// The 1-D marginal density on `grid`.
pub fn density_1d(phi: &MLFunction, grid: GridSpec) -> Result<MarginalDensity1D> {
    density_1d_with(phi, grid, &InversionConfig::default())
}

pub fn density_1d_with(phi: &MLFunction, grid: GridSpec, cfg: &InversionConfig) -> Result<MarginalDensity1D> {
    if grid.points < 2 || !(grid.x_max > grid.x_min) {
        return Err(Error::InvalidParameter("grid needs at least two points and x_max > x_min".into()));
    }
    let raw = invert_1d(phi, cfg)?;
    let mut clipped = 0;
    let mut values = Vec::with_capacity(grid.points);
    for i in 0..grid.points {
        let x = grid.node(i);
        let v = raw.at(x);
        if v < 0.0 {
            if v < NEG_CLIP {
                return Err(Error::Accuracy(format!("density {v:e} at x = {x} is negative beyond clipping tolerance")));
            }
            clipped += 1;
            values.push(0.0);
        } else {
            values.push(v);
        }
    }
    let total_mass = trapezoid(&values, grid.step());
    Ok(MarginalDensity1D { grid, values, total_mass, clipped, y_window: raw.y_window })
}

fn trapezoid(v: &[f64], h: f64) -> f64 {
    let n = v.len();
    h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
}

/// ∫ x^{2n} f(x) dx over the internal grid of the inversion.
pub fn moment_quadrature_1d(phi: &MLFunction, n: u32) -> Result<f64> {
    let cfg = InversionConfig::default();
    let raw = invert_1d(phi, &cfg)?;
    let len = raw.values.len();
    let half = len / 2;
    // beyond the last value above the noise floor (round-off and truncation
    // ringing, measured on the outer quarter of the grid) x^{2n} would only
    // amplify noise
    let peak = raw.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = raw.values[len - len / 8..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (10.0 * noise).max(1e-13 * peak);
    // marginals are scale mixtures of centred Gaussians, hence decreasing in |x|
    let last = (half..len).find(|&i| raw.values[i].abs() < floor).unwrap_or(len);
    if last >= len - len / 8 {
        return Err(Error::WindowTooSmall {
            reason: "density does not decay to the round-off floor inside the x range of the inversion".into(),
            suggested: 0.5 * cfg.dy,
        });
    }
    let k = last - half;
    let w = |i: usize| raw.x(i).powi(2 * n as i32) * raw.values[i];
    let total: f64 = (half - k..=half + k).map(w).sum::<f64>() * raw.dx;
    // geometric extrapolation of the neglected tail from the last half unit
    let back = ((0.5 / raw.dx).round() as usize).clamp(1, k);
    let (w_end, w_back) = (w(half + k).abs(), w(half + k - back).abs());
    let tail = if w_back > w_end && w_end > 0.0 {
        2.0 * w_end * back as f64 * raw.dx / (w_back / w_end).ln()
    } else if w_end == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    if tail > 1e-4 * total.abs() {
        return Err(Error::WindowTooSmall {
            reason: format!("estimated x-tail {tail:e} of the order-{} moment {total:e} is too large", 2 * n),
            suggested: 2.0 * raw.x(half + k),
        });
    }
    Ok(total)
}

/// Radial density of the 2-D marginal:
/// f(r) = (1/2π) ∫_0^∞ φ(-ρ²/2) J0(rρ) ρ dρ.
pub fn density_2d_radial(phi: &MLFunction, radii: &[f64]) -> Result<Vec<f64>> {
    let cfg = InversionConfig::default();
    let y = choose_window(phi, &cfg)?;
    let h = 0.01;
    let n = (y / h).ceil() as usize;
    let h = y / n as f64;
    let c1 = phi.c1();
    let samples: Vec<f64> = (0..=n).map(|k| phi.char_fn(k as f64 * h).map(|v| v * k as f64 * h)).collect::<Result<_>>()?;
    Ok(radii
        .iter()
        .map(|&r| {
            let mut acc = 0.5 * samples[n] * libm::j0(r * y);
            for (k, s) in samples.iter().enumerate().take(n).skip(1) {
                acc += s * libm::j0(r * k as f64 * h);
            }
            // Euler-Maclaurin end corrections at ρ = 0, where g = φ(-ρ²/2) ρ J0(rρ)
            // has g'(0) = 1 and g'''(0) = -3c_1 - 3r²/2
            let em = h * h / 12.0 + h.powi(4) / 720.0 * (3.0 * c1 + 1.5 * r * r);
            (acc * h + em) / (2.0 * PI)
        })
        .collect())
}

impl MarginalDensity1D {
    /// Cumulative distribution by the trapezoid rule, normalized to end at 1.
    pub fn cdf_table(&self) -> Vec<f64> {
        let h = self.grid.step();
        let mut c = vec![0.0; self.values.len()];
        for i in 1..self.values.len() {
            c[i] = c[i - 1] + 0.5 * h * (self.values[i - 1] + self.values[i]);
        }
        let total = *c.last().unwrap();
        c.iter().map(|v| v / total).collect()
    }

    /// Interpolated CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        let table = self.cdf_table();
        let p = (x - self.grid.x_min) / self.grid.step();
        if p <= 0.0 {
            return 0.0;
        }
        if p >= (self.values.len() - 1) as f64 {
            return 1.0;
        }
        let i = p.floor() as usize;
        let t = p - i as f64;
        table[i] * (1.0 - t) + table[i + 1] * t
    }
}

/// Inverse-CDF samples, deterministic for a given seed.
pub fn sample_1d(density: &MarginalDensity1D, count: usize, seed: u64) -> Vec<f64> {
    let table = density.cdf_table();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = density.grid.step();
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let i = table.partition_point(|c| *c < u).clamp(1, table.len() - 1);
            let (c0, c1) = (table[i - 1], table[i]);
            let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
            density.grid.x_min + (i as f64 - 1.0 + t) * h
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between samples and the integrated density.
pub fn ks_statistic(samples: &[f64], density: &MarginalDensity1D) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = density.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlfun::{make_ml, PhiDescriptor, DEFAULT_ORDER};

    fn phi(d: PhiDescriptor) -> MLFunction {
        make_ml(&d, DEFAULT_ORDER).unwrap()
    }

    #[test]
    fn gaussian_density_pointwise() {
        let d = density_1d(&phi(PhiDescriptor::Exp), GridSpec { x_min: -6.0, x_max: 6.0, points: 1201 }).unwrap();
        let mut worst: f64 = 0.0;
        for (i, v) in d.values.iter().enumerate() {
            let x = d.grid.node(i);
            worst = worst.max((v - (-0.5 * x * x).exp() / (2.0 * PI).sqrt()).abs());
        }
        assert!(worst < 1e-6, "{worst:e}");
        assert!((d.values[600] - 0.398_942_280_401_432_7).abs() < 1e-7);
        assert!((d.total_mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ml_density_is_even_with_unit_mass() {
        let d = density_1d(&phi(PhiDescriptor::ml(0.5)), GridSpec { x_min: -20.0, x_max: 20.0, points: 20001 }).unwrap();
        assert!((d.total_mass - 1.0).abs() < 1e-6, "{}", d.total_mass);
        let n = d.values.len();
        for i in 0..n / 2 {
            assert!((d.values[i] - d.values[n - 1 - i]).abs() < 1e-9);
        }
        assert!(d.y_window > 40.0);
    }

    #[test]
    fn second_moment_of_half_order_grey_noise() {
        let v = moment_quadrature_1d(&phi(PhiDescriptor::ml(0.5)), 1).unwrap();
        assert!((v - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-3, "{v}");
    }

    #[test]
    fn quadrature_moment_examples() {
        let e = phi(PhiDescriptor::Exp);
        assert!((moment_quadrature_1d(&e, 2).unwrap() - 3.0).abs() < 1e-4);
        assert!((moment_quadrature_1d(&e, 0).unwrap() - 1.0).abs() < 1e-6);
        let v = moment_quadrature_1d(&phi(PhiDescriptor::ml(0.8)), 1).unwrap();
        let expect = 1.0 / crate::special::gamma(1.8);
        assert!((v - expect).abs() < 1e-3 * expect);
    }

    #[test]
    fn atom_gives_window_failure() {
        let r = density_1d(&phi(PhiDescriptor::bell()), GridSpec::default());
        match r {
            Err(Error::WindowTooSmall { suggested, .. }) => assert!(suggested.is_infinite()),
            other => panic!("expected window failure, got {other:?}"),
        }
    }

    #[test]
    fn two_dimensional_gaussian() {
        let radii = [0.0, 0.5, 1.0, 2.0, 3.0];
        let f = density_2d_radial(&phi(PhiDescriptor::Exp), &radii).unwrap();
        for (r, v) in radii.iter().zip(f) {
            assert!((v - (-0.5 * r * r).exp() / (2.0 * PI)).abs() < 1e-9, "r={r}");
        }
    }

    #[test]
    fn two_dimensional_projects_onto_one_dimensional() {
        // f1(x) = ∫ f2(√(x²+u²)) du
        // Gaussian scale mixture with variances 1 and 2
        let p = phi(PhiDescriptor::parse("mix(0.5*exp, 0.5*product(exp, exp))").unwrap());
        let us: Vec<f64> = (0..=800).map(|k| k as f64 * 0.01).collect();
        let x = 1.0;
        let radii: Vec<f64> = us.iter().map(|u| (x * x + u * u).sqrt()).collect();
        let f2 = density_2d_radial(&p, &radii).unwrap();
        let abel = 2.0 * trapezoid(&f2, 0.01);
        let raw = invert_1d(&p, &InversionConfig::default()).unwrap();
        assert!((abel - raw.at(x)).abs() < 1e-6, "{abel} vs {}", raw.at(x));
    }

    #[test]
    fn sampling_statistics() {
        let d = density_1d(&phi(PhiDescriptor::Exp), GridSpec { x_min: -8.0, x_max: 8.0, points: 3201 }).unwrap();
        let n = 100_000;
        let s = sample_1d(&d, n, 7);
        assert_eq!(s, sample_1d(&d, n, 7));
        let mean = s.iter().sum::<f64>() / n as f64;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // sd of the sample variance is √(2/n) for a standard normal
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "{var}");
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        assert!(sorted[n / 2].abs() < 1e-2);
        assert!(ks_statistic(&s, &d) < 1.63 / (n as f64).sqrt());
    }
}
