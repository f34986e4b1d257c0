//! Field-theory predictions: replica-theory coefficients, the Luttinger
//! parameter and its BKT point, density and Rényi-2 correlator integrals,
//! and the tabulated fluctuation and sharpening laws.

mod correlator;
mod quadrature;
mod scaling;

pub use correlator::{density_correlator_theory, density_profile, ln_renyi2_integral, QuadValue};
pub use quadrature::{neumaier_sum, GaussLegendre};
pub use scaling::{
    exponent_table, sharpening_table, variance_scaling, Decay, ExponentTable, Growth,
    ObservableLaws, Phase, VarianceLaw,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSettings {
    /// Gauss-Legendre nodes per panel; convergence is checked against twice
    /// this number.
    pub order: usize,
    /// Panels per half period of the oscillatory factor.
    pub panels_per_period: usize,
    /// Maximum relative change under refinement.
    pub tolerance: f64,
    /// Octaves resolved below the cutoff for infrared-sensitive integrals.
    pub ir_octaves: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            order: 12,
            panels_per_period: 1,
            tolerance: 1e-3,
            ir_octaves: 30,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryParams {
    pub j: f64,
    pub gamma: f64,
    pub e_b: f64,
    pub e_s: f64,
    pub lambda1: f64,
    pub m_d: f64,
    pub cutoff: f64,
    pub quadrature: QuadratureSettings,
}

impl Default for TheoryParams {
    fn default() -> Self {
        Self {
            j: 16.0 / 9.0,
            gamma: 1.0,
            e_b: 0.0,
            e_s: 0.0,
            lambda1: 1.0,
            m_d: 0.0,
            cutoff: 50.0,
            quadrature: QuadratureSettings::default(),
        }
    }
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        pos("J", self.j)?;
        pos("gamma", self.gamma)?;
        pos("lambda1", self.lambda1)?;
        pos("cutoff", self.cutoff)?;
        if !(self.m_d >= 0.0) || !self.m_d.is_finite() {
            return Err(Error::Parameter(format!(
                "m_d must be nonnegative, got {}",
                self.m_d
            )));
        }
        let q = &self.quadrature;
        if q.order < 2 || q.panels_per_period == 0 || !(q.tolerance > 0.0) {
            return Err(Error::Parameter("invalid quadrature settings".into()));
        }
        Ok(())
    }
}

fn check_positive(gamma: f64, j: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) || !(j > 0.0 && j.is_finite()) {
        return Err(Error::Parameter(format!(
            "need gamma > 0 and J > 0, got gamma={gamma}, J={j}"
        )));
    }
    Ok(())
}

/// `9J / (16 γ²)`.
fn coupling_ratio(gamma: f64, j: f64) -> f64 {
    9.0 * j / (16.0 * gamma * gamma)
}

pub fn rho_s(gamma: f64, j: f64) -> Result<f64> {
    check_positive(gamma, j)?;
    Ok(0.25 * coupling_ratio(gamma, j).cbrt())
}

pub fn rho_bar(j: f64) -> Result<f64> {
    check_positive(1.0, j)?;
    Ok(9.0 * j / 16.0)
}

pub fn luttinger_k_at(gamma: f64, j: f64, e_b: f64) -> Result<f64> {
    check_positive(gamma, j)?;
    let x = coupling_ratio(gamma, j);
    Ok(0.5 * std::f64::consts::PI.powi(2) * x.powf(1.0 / 6.0) * (x.cbrt() / 8.0 + e_b).exp())
}

pub fn luttinger_k(params: &TheoryParams) -> Result<f64> {
    luttinger_k_at(params.gamma, params.j, params.e_b)
}

/// Measurement rate at which `K = 2`. K decreases monotonically in γ, so the
/// root is unique; it is bracketed by geometric expansion and refined by
/// bisection in `ln γ` to machine precision.
pub fn gamma_critical(j: f64, e_b: f64) -> Result<f64> {
    check_positive(1.0, j)?;
    if !e_b.is_finite() {
        return Err(Error::Parameter(format!("E_b must be finite, got {e_b}")));
    }
    let f = |g: f64| luttinger_k_at(g, j, e_b).map(|k| k - 2.0);
    let (mut lo, mut hi) = (1e-2, 1e2);
    let mut expansions = 0;
    while f(lo)? <= 0.0 || f(hi)? >= 0.0 {
        expansions += 1;
        if expansions > 60 || !lo.is_normal() || !hi.is_finite() {
            return Err(Error::NotBracketed(format!(
                "K = 2 not bracketed in [{lo:e}, {hi:e}]"
            )));
        }
        if f(lo)? <= 0.0 {
            lo /= 10.0;
        }
        if f(hi)? >= 0.0 {
            hi *= 10.0;
        }
    }
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f(lo)?.abs(), f(hi)?.abs());
    Ok(if flo <= fhi { lo } else { hi })
}
