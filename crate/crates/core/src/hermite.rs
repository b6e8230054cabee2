//! Orthonormal Hermite functions ζ_j(t) = (2^j j! √π)^{-1/2} H_j(t) e^{-t²/2},
//! indexed from 0, with their integrals and fitted growth envelopes.

use crate::error::{Error, Result};
use crate::quad::{integrate_vec, QuadConfig};
use num_complex::Complex64;
use std::f64::consts::{PI, SQRT_2};

/// Largest |t| accepted by the evaluators.
pub const MAX_ABS_T: f64 = 1.0e4;

const RESCALE: f64 = 1e200;

/// ζ_0(t), …, ζ_J(t) by the normalized three-term recurrence
/// ζ_{j+1} = √(2/(j+1)) t ζ_j - √(j/(j+1)) ζ_{j-1}.
///
/// The recurrence runs on ζ_j e^{t²/2} with a running log-scale, so large
/// |t| loses no range before the final exponential.
pub fn hermite_fns(jmax: usize, t: f64) -> Result<Vec<f64>> {
    if !(t.abs() <= MAX_ABS_T) {
        return Err(Error::InvalidParameter(format!("|t| = {} exceeds the evaluation range {MAX_ABS_T}", t.abs())));
    }
    let mut out = vec![0.0; jmax + 1];
    let mut scales = vec![0.0; jmax + 1];
    let mut log_scale = -0.5 * t * t;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    out[0] = cur;
    scales[0] = log_scale;
    for j in 0..jmax {
        let next = (2.0 / (j + 1) as f64).sqrt() * t * cur - (j as f64 / (j + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out[j + 1] = cur;
        scales[j + 1] = log_scale;
    }
    for (v, s) in out.iter_mut().zip(&scales) {
        *v = if *v == 0.0 { 0.0 } else { v.signum() * (v.abs().ln() + s).exp() };
    }
    Ok(out)
}

pub fn hermite_fn(j: usize, t: f64) -> Result<f64> {
    Ok(hermite_fns(j, t)?[j])
}

/// ζ_j'(t) = √(j/2) ζ_{j-1}(t) - √((j+1)/2) ζ_{j+1}(t) for j ≤ J.
pub fn hermite_derivs(jmax: usize, t: f64) -> Result<Vec<f64>> {
    let z = hermite_fns(jmax + 1, t)?;
    Ok((0..=jmax)
        .map(|j| {
            let down = if j == 0 { 0.0 } else { (j as f64 / 2.0).sqrt() * z[j - 1] };
            down - ((j + 1) as f64 / 2.0).sqrt() * z[j + 1]
        })
        .collect())
}

fn quad_cfg() -> QuadConfig {
    QuadConfig { abs_tol: 1e-13, rel_tol: 0.0, max_intervals: 20_000 }
}

/// ∫_a^b ζ_j for all j ≤ J by vector adaptive Gauss–Kronrod quadrature.
pub fn hermite_integrals_between(jmax: usize, a: f64, b: f64) -> Result<Vec<f64>> {
    let mut err = None;
    let (v, _) = integrate_vec(
        |x, out| match hermite_fns(jmax, x) {
            Ok(z) => out.copy_from_slice(&z),
            Err(e) => {
                err = Some(e);
                out.fill(0.0);
            }
        },
        jmax + 1,
        a,
        b,
        quad_cfg(),
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// ∫_0^t ζ_j for all j ≤ J by the neighbour relation
/// I_{j+1} = [√j I_{j-1} - √2 (ζ_j(t) - ζ_j(0))] / √(j+1),
/// seeded with the closed forms of I_0 and I_1.
pub fn hermite_integrals_recurrence(jmax: usize, t: f64) -> Result<Vec<f64>> {
    let zt = hermite_fns(jmax, t)?;
    let z0 = hermite_fns(jmax, 0.0)?;
    let c = PI.powf(-0.25);
    let mut out = vec![0.0; jmax + 1];
    out[0] = c * (PI / 2.0).sqrt() * libm::erf(t / SQRT_2);
    if jmax >= 1 {
        out[1] = c * SQRT_2 * -(-0.5 * t * t).exp_m1();
    }
    for j in 1..jmax {
        out[j + 1] = ((j as f64).sqrt() * out[j - 1] - SQRT_2 * (zt[j] - z0[j])) / ((j + 1) as f64).sqrt();
    }
    Ok(out)
}

/// ∫_0^t ζ_j for all j ≤ J by quadrature, accepted only if the recurrence
/// route agrees to 1e-10.
pub fn hermite_integrals(jmax: usize, t: f64) -> Result<Vec<f64>> {
    let q = hermite_integrals_between(jmax, 0.0, t)?;
    let r = hermite_integrals_recurrence(jmax, t)?;
    let worst = q.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if worst > 1e-10 {
        return Err(Error::Accuracy(format!("Hermite integral routes disagree by {worst:e} at t = {t}")));
    }
    Ok(q)
}

pub fn hermite_integral(j: usize, t: f64) -> Result<f64> {
    Ok(hermite_integrals(j, t)?[j])
}

/// ζ̂_j(u) = ∫ e^{-iux} ζ_j(x) dx by quadrature over the effective support.
pub fn hermite_fourier(j: usize, u: f64) -> Result<Complex64> {
    let l = ((2 * j + 1) as f64).sqrt() + 12.0;
    let (v, _) = integrate_vec(
        |x, out| {
            let z = hermite_fn(j, x).unwrap_or(0.0);
            out[0] = z * (u * x).cos();
            out[1] = -z * (u * x).sin();
        },
        2,
        -l,
        l,
        quad_cfg(),
    )?;
    Ok(Complex64::new(v[0], v[1]))
}

/// Fitted constants of the growth envelopes
/// |ζ_j(t)| ≤ A, |ζ_j(t)| ≤ C j^{-1/12} for |t| ≤ 2√j,
/// |ζ_j(t)| ≤ C e^{-γt²} for |t| > 2√j, and
/// |ζ_j(t) - ζ_j(s)| ≤ |t - s| (L √j + D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteEnvelope {
    pub a: f64,
    pub c: f64,
    pub gamma: f64,
    pub lip_slope: f64,
    pub lip_offset: f64,
}

impl HermiteEnvelope {
    pub fn lipschitz(&self, j: usize) -> f64 {
        self.lip_slope * (j as f64).sqrt() + self.lip_offset
    }

    /// Pointwise envelope for |ζ_j(t)| (the global bound A applies too).
    pub fn bound(&self, j: usize, t: f64) -> f64 {
        let shape = if j >= 1 && t.abs() <= 2.0 * (j as f64).sqrt() {
            self.c * (j as f64).powf(-1.0 / 12.0)
        } else {
            self.c * (-self.gamma * t * t).exp()
        };
        shape.min(self.a)
    }
}

/// Outcome of [`verify_hermite_bounds`].
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub jmax: usize,
    pub envelope: HermiteEnvelope,
    /// Largest value of |ζ_j(t)| / bound on the validation grid.
    pub worst_value_ratio: f64,
    /// Largest |ζ_j(t) - ζ_j(s)| / (|t - s| (L√j + D)) on sampled pairs.
    pub worst_lipschitz_ratio: f64,
    pub passed: bool,
}

/// Margin applied to every fitted constant.
pub const FIT_MARGIN: f64 = 1.05;

/// Fits the envelope constants on the grid t = k·step, 0 ≤ t ≤ 3√max(j,1),
/// then validates on the shifted grid t = (k + ½)·step and on neighbouring
/// pairs. Symmetry ζ_j(-t) = ±ζ_j(t) makes t ≥ 0 sufficient.
pub fn verify_hermite_bounds(jmax: usize, step: f64) -> Result<BoundsReport> {
    if jmax > 500 {
        return Err(Error::DegreeLimit { degree: jmax, max: 500 });
    }
    let t_end = 3.0 * (jmax.max(1) as f64).sqrt();
    let n = (t_end / step).ceil() as usize;
    let reach = |j: usize| 3.0 * (j.max(1) as f64).sqrt();

    let mut a: f64 = 0.0;
    let mut c_bulk: f64 = 0.0;
    let mut sup_deriv = vec![0.0f64; jmax + 1];
    // Tail samples (t, |ζ_j(t)|) for the Gaussian decay fit.
    let mut tail: Vec<(f64, f64)> = Vec::new();
    for k in 0..=n {
        let t = k as f64 * step;
        let z = hermite_fns(jmax, t)?;
        let dz = hermite_derivs(jmax, t)?;
        for j in 0..=jmax {
            if t > reach(j) {
                continue;
            }
            let v = z[j].abs();
            a = a.max(v);
            sup_deriv[j] = sup_deriv[j].max(dz[j].abs());
            if j >= 1 && t <= 2.0 * (j as f64).sqrt() {
                c_bulk = c_bulk.max(v * (j as f64).powf(1.0 / 12.0));
            } else if v > 0.0 {
                tail.push((t, v));
            }
        }
    }
    // γ: largest multiple of 1e-3 keeping v·e^{γt²} within twice the larger
    // of the bulk constant and the global bound on every tail sample.
    let reference = 2.0 * c_bulk.max(a);
    let gamma_max = tail
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .map(|(t, v)| (reference / v).ln() / (t * t))
        .fold(0.5f64, f64::min);
    let gamma = (gamma_max / 1e-3).floor().max(0.0) * 1e-3;
    let tail_const = tail.iter().map(|(t, v)| v * (gamma * t * t).exp()).fold(0.0, f64::max);
    let c = c_bulk.max(tail_const) * FIT_MARGIN;
    let lip_offset = sup_deriv[0];
    let lip_slope =
        (1..=jmax).map(|j| (sup_deriv[j] - lip_offset).max(0.0) / (j as f64).sqrt()).fold(0.0, f64::max);
    let envelope = HermiteEnvelope {
        a: a * FIT_MARGIN,
        c,
        gamma,
        lip_slope: lip_slope * FIT_MARGIN,
        lip_offset: lip_offset * FIT_MARGIN,
    };

    let mut worst_value: f64 = 0.0;
    let mut worst_lip: f64 = 0.0;
    let mut prev = hermite_fns(jmax, 0.5 * step)?;
    let mut prev_t = 0.5 * step;
    for k in 1..n {
        let t = (k as f64 + 0.5) * step;
        let z = hermite_fns(jmax, t)?;
        for j in 0..=jmax {
            if t > reach(j) {
                continue;
            }
            worst_value = worst_value.max(z[j].abs() / envelope.bound(j, t));
            worst_lip = worst_lip.max((z[j] - prev[j]).abs() / ((t - prev_t) * envelope.lipschitz(j)));
        }
        prev = z;
        prev_t = t;
    }
    Ok(BoundsReport {
        jmax,
        envelope,
        worst_value_ratio: worst_value,
        worst_lipschitz_ratio: worst_lip,
        passed: worst_value <= 1.0 && worst_lip <= 1.0 && envelope.gamma > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        assert!((hermite_fn(0, 0.0).unwrap() - 0.751_125_544_464_942_5).abs() < 1e-15);
        assert_eq!(hermite_fn(1, 0.0).unwrap(), 0.0);
        assert!(hermite_fn(3, 2e4).is_err());
    }

    /// Closed forms with physicists' Hermite polynomials H_2, H_3.
    #[test]
    fn low_order_closed_forms() {
        for t in [-2.3f64, -0.4, 0.0, 0.9, 3.1] {
            let g = (-0.5 * t * t).exp() * PI.powf(-0.25);
            let h2 = (4.0 * t * t - 2.0) / (8.0f64).sqrt();
            let h3 = (8.0 * t * t * t - 12.0 * t) / (48.0f64).sqrt();
            let z = hermite_fns(3, t).unwrap();
            assert!((z[2] - h2 * g).abs() < 1e-14);
            assert!((z[3] - h3 * g).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormal_by_gauss_hermite() {
        // 60-point Gauss-Hermite via the Golub-Welsch matrix, independent of
        // the recurrence used above.
        let n = 60;
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            let b = (i as f64 / 2.0).sqrt();
            jac[(i, i - 1)] = b;
            jac[(i - 1, i)] = b;
        }
        let eig = nalgebra::SymmetricEigen::new(jac);
        for i in 0..=6 {
            for j in 0..=6 {
                let mut s = 0.0;
                for k in 0..n {
                    let x = eig.eigenvalues[k];
                    let w = PI.sqrt() * eig.eigenvectors[(0, k)].powi(2);
                    s += w * (x * x).exp() * hermite_fn(i, x).unwrap() * hermite_fn(j, x).unwrap();
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-8, "({i},{j}) {s}");
            }
        }
    }

    #[test]
    fn recurrence_residual_at_large_index() {
        for t in [0.3, 5.0, 25.0, 60.0] {
            let z = hermite_fns(400, t).unwrap();
            for j in 1..400 {
                let r = (2.0 / (j + 1) as f64).sqrt() * t * z[j] - (j as f64 / (j + 1) as f64).sqrt() * z[j - 1] - z[j + 1];
                assert!(r.abs() < 1e-10, "t={t} j={j}");
            }
        }
    }

    #[test]
    fn integrals() {
        let lim = hermite_integral(0, 40.0).unwrap();
        assert!((lim - PI.powf(-0.25) * (PI / 2.0).sqrt()).abs() < 1e-12);
        assert_eq!(hermite_integrals(5, 0.0).unwrap(), vec![0.0; 6]);
        let i1 = hermite_integral(1, 1.0).unwrap();
        let closed = PI.powf(-0.25) * SQRT_2 * (1.0 - (-0.5f64).exp());
        assert!((i1 - closed).abs() < 1e-12);
        let r = hermite_integrals(200, 2.5).unwrap();
        let q = hermite_integrals_recurrence(200, 2.5).unwrap();
        for j in 0..=200 {
            assert!((r[j] - q[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn fourier_modulus() {
        for j in 0..6 {
            for u in [0.0, 0.7, 1.9] {
                let f = hermite_fourier(j, u).unwrap();
                let z = hermite_fn(j, u).unwrap();
                assert!((f.norm() - (2.0 * PI).sqrt() * z.abs()).abs() < 1e-10);
                // Phase for this transform convention is (-i)^j.
                let phase = Complex64::new(0.0, -1.0).powi(j as i32);
                assert!((f - phase * (2.0 * PI).sqrt() * z).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn small_bounds_sweep() {
        let r = verify_hermite_bounds(40, 0.01).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.envelope.a < 0.8);
    }
}
