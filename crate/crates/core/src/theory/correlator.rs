//! Quadratures for the conditional-state density correlators and the
//! logarithm of the Rényi-2 correlator.
//!
//! Both integrands are even in `k` and `w`, so the integrals over
//! `[-Λ, Λ]²` are evaluated as four times the positive quadrant. The cutoff
//! is imposed by a C∞ taper `S(u)` equal to 1 for `u ≤ 1/2` and 0 for
//! `u ≥ 1`, which keeps the oscillatory `k` integral free of the
//! `Λ sin(Λ r) / r` ringing a hard cutoff would add.

use serde::{Deserialize, Serialize};

use super::quadrature::{geometric_points, merge_breaks, neumaier_sum, GaussLegendre};
use super::TheoryParams;
use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::par::map_indexed;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadValue {
    pub value: f64,
    /// Relative change under refinement.
    pub change: f64,
}

fn psi(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// Smooth cutoff function.
pub(crate) fn taper(u: f64) -> f64 {
    1.0 - psi(2.0 * u - 1.0)
}

fn half_periods(omega: f64, per: usize, hi: f64) -> Vec<f64> {
    if omega <= 0.0 {
        return Vec::new();
    }
    let h = std::f64::consts::PI / (per as f64 * omega);
    let n = (hi / h).floor() as usize;
    (1..=n).map(|j| j as f64 * h).collect()
}

fn accept(v1: f64, v2: f64, extra: Option<f64>, tol: f64) -> Result<QuadValue> {
    let scale = v2.abs();
    let mut diff = (v2 - v1).abs();
    if let Some(v3) = extra {
        diff = diff.max((v3 - v1).abs());
    }
    let change = if scale > 0.0 {
        diff / scale
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    if change > tol || !v2.is_finite() {
        return Err(Error::NonConvergent { value: v2, change });
    }
    Ok(QuadValue { value: v2, change })
}

fn kernel_power(obs: Observable) -> i32 {
    match obs {
        Observable::Dipole => 2,
        Observable::Charge => 4,
    }
}

/// Octave breakpoints below `hi`, independent of the integrand scales so
/// that quadrature errors vary smoothly with the outer variable.
fn octave_grid(lam: f64, octaves: i32, hi: f64) -> Vec<f64> {
    geometric_points(lam, octaves, hi)
}

/// `∫_0^Λ cos(w t) S(w/Λ) / (w² + a²) dw`.
fn density_inner(a: f64, t: f64, p: &TheoryParams, gl: &GaussLegendre) -> f64 {
    let lam = p.cutoff;
    if t == 0.0 {
        // untapered part in closed form, taper correction on a fixed grid
        let edge: Vec<f64> = (0..=8).map(|i| lam * (0.5 + i as f64 / 16.0)).collect();
        let corr = gl.integrate_panels(&edge, |w| (1.0 - taper(w / lam)) / (w * w + a * a));
        return (lam / a).atan() / a - corr;
    }
    let mut pts = octave_grid(lam, 60, lam);
    pts.extend((1..16).map(|i| lam * (0.5 + i as f64 / 32.0)));
    pts.extend(half_periods(t, p.quadrature.panels_per_period, lam));
    let breaks = merge_breaks(pts, 0.0, lam);
    gl.integrate_panels(&breaks, |w| {
        (w * t).cos() * taper(w / lam) / (w * w + a * a)
    })
}

fn density_value(r: f64, t: f64, p: &TheoryParams, obs: Observable, order: usize) -> f64 {
    let gl = GaussLegendre::new(order);
    let lam = p.cutoff;
    let pow = kernel_power(obs);
    let f = |k: f64| {
        let a = (p.lambda1 * k * k + p.m_d).sqrt();
        k.powi(pow) * taper(k / lam) * density_inner(a, t, p, &gl)
    };
    if r == 0.0 {
        let breaks: Vec<f64> = (0..=32).map(|i| lam * i as f64 / 32.0).collect();
        return 4.0 * gl.integrate_panels(&breaks, f);
    }
    // panels start on multiples of π/(m r); the phase of each panel start is
    // taken from its index so the oscillation is resolved to full precision
    let m = p.quadrature.panels_per_period;
    let h = std::f64::consts::PI / (m as f64 * r);
    let n_full = (lam / h).floor() as usize;
    let mut parts = Vec::with_capacity(n_full + 1);
    for j in 0..=n_full {
        let start = j as f64 * h;
        let width = if j == n_full { lam - start } else { h };
        if width <= 0.0 {
            continue;
        }
        let phase = std::f64::consts::PI * (j % (2 * m)) as f64 / m as f64;
        let (sj, cj) = phase.sin_cos();
        parts.push(neumaier_sum(gl.scaled(width).map(|(d, w)| {
            let (sd, cd) = (d * r).sin_cos();
            w * f(start + d) * (cj * cd - sj * sd)
        })));
    }
    4.0 * neumaier_sum(parts)
}

/// Connected density correlator `⟨n(r, t) n(0, 0)⟩` of the conditional
/// state, up to normalization. Kernels: dipole `k² / (w² + λ₁k² + m_d)`,
/// charge `k⁴ / (w² + λ₁k² + m_d)`.
pub fn density_correlator_theory(
    r: f64,
    t: f64,
    params: &TheoryParams,
    obs: Observable,
) -> Result<QuadValue> {
    params.validate()?;
    let (r, t) = (r.abs(), t.abs());
    let n = params.quadrature.order;
    let v1 = density_value(r, t, params, obs, n);
    let v2 = density_value(r, t, params, obs, 2 * n);
    accept(v1, v2, None, params.quadrature.tolerance)
}

/// Correlator at several separations, evaluated in parallel.
pub fn density_profile(
    rs: &[f64],
    t: f64,
    params: &TheoryParams,
    obs: Observable,
) -> Result<Vec<QuadValue>> {
    map_indexed(rs.len(), |i| {
        density_correlator_theory(rs[i], t, params, obs)
    })
    .into_iter()
    .collect()
}

fn renyi_value(
    x: f64,
    t: f64,
    p: &TheoryParams,
    obs: Observable,
    order: usize,
    octaves: u32,
) -> f64 {
    let gl = GaussLegendre::new(order);
    let lam = p.cutoff;
    let m = p.quadrature.panels_per_period;
    let extra = if obs == Observable::Dipole { 2 } else { 0 };
    let inner = |k: f64| {
        let a2 = p.lambda1 * k * k + p.m_d;
        let s = (0.5 * k * x).sin();
        let (one_minus_cx, cx) = (2.0 * s * s, (k * x).cos());
        let mut pts = octave_grid(lam, octaves as i32 + 16, lam);
        pts.extend((1..8).map(|i| lam * (0.5 + i as f64 / 16.0)));
        pts.extend(half_periods(t, m, lam));
        let breaks = merge_breaks(pts, 0.0, lam);
        gl.integrate_panels(&breaks, |w| {
            let sw = (0.5 * w * t).sin();
            let weight = one_minus_cx + cx * 2.0 * sw * sw;
            let d = w * w + k * k;
            w * w * weight * taper(w / lam) / (d * d * (w * w + a2))
        }) * k.powi(extra)
            * taper(k / lam)
    };
    let k_min = lam * 2f64.powi(-(octaves as i32));
    let mut pts = octave_grid(lam, octaves as i32, lam);
    pts.extend((1..8).map(|i| lam * (0.5 + i as f64 / 16.0)));
    pts.extend(half_periods(x, m, lam));
    let breaks = merge_breaks(pts, k_min, lam);
    -4.0 * gl.integrate_panels(&breaks, inner)
}

/// `ln C₂(x, t)` for the charge or dipole Rényi-2 correlator, up to an
/// additive constant fixed by `ln C₂(0, 0) = 0`. The charge integral is
/// infrared divergent at `m_d = 0` and is then reported as non-convergent.
pub fn ln_renyi2_integral(
    x: f64,
    t: f64,
    params: &TheoryParams,
    obs: Observable,
) -> Result<QuadValue> {
    params.validate()?;
    let (x, t) = (x.abs(), t.abs());
    if x == 0.0 && t == 0.0 {
        return Ok(QuadValue {
            value: 0.0,
            change: 0.0,
        });
    }
    let q = params.quadrature;
    let v1 = renyi_value(x, t, params, obs, q.order, q.ir_octaves);
    let v2 = renyi_value(x, t, params, obs, 2 * q.order, q.ir_octaves);
    let v3 = renyi_value(x, t, params, obs, q.order, q.ir_octaves + 10);
    accept(v1, v2, Some(v3), q.tolerance)
}
