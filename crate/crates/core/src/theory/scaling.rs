//! Tabulated asymptotic laws for subsystem fluctuations and sharpening times.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::Observable;

/// Symmetry phase labelled by (charge, dipole) behaviour.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Both charge and dipole weakly symmetric.
    WeakWeak,
    /// Charge strongly, dipole weakly symmetric (dipole-fuzzy).
    SharpWeak,
    /// Both strongly symmetric.
    SharpSharp,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::WeakWeak => "weak-weak",
            Phase::SharpWeak => "sharp-weak",
            Phase::SharpSharp => "sharp-sharp",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weak-weak" | "fuzzy-fuzzy" => Ok(Phase::WeakWeak),
            "sharp-weak" | "dipole-fuzzy" | "intermediate" => Ok(Phase::SharpWeak),
            "sharp-sharp" | "dipole-sharp" => Ok(Phase::SharpSharp),
            other => Err(Error::Parameter(format!("unknown phase label '{other}'"))),
        }
    }
}

/// Growth of a time scale with a length.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "exponent", rename_all = "kebab-case")]
pub enum Growth {
    Power(f64),
    Log,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decay {
    /// `ℓ^a t^b`.
    Algebraic,
    /// `ℓ^a exp(-√m_d t)`.
    Exponential,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceLaw {
    pub ell: f64,
    pub t: f64,
    pub decay: Decay,
}

impl VarianceLaw {
    fn algebraic(ell: f64, t: f64) -> Self {
        Self {
            ell,
            t,
            decay: Decay::Algebraic,
        }
    }

    fn exponential(ell: f64) -> Self {
        Self {
            ell,
            t: 0.0,
            decay: Decay::Exponential,
        }
    }

    pub fn evaluate(&self, ell: f64, t: f64, m_d: f64) -> f64 {
        match self.decay {
            Decay::Algebraic => ell.powf(self.ell) * t.powf(self.t),
            Decay::Exponential => ell.powf(self.ell) * (-m_d.sqrt() * t).exp(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableLaws {
    pub variance: Option<VarianceLaw>,
    /// Fluctuation decay time of a region of size `ℓ`.
    pub typical_time: Option<Growth>,
    /// Sharpening time of the whole system of size `L`.
    pub sharpening: Growth,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub phase: Phase,
    pub dim: usize,
    pub charge: ObservableLaws,
    pub dipole: ObservableLaws,
}

impl ExponentTable {
    pub fn get(&self, obs: Observable) -> &ObservableLaws {
        match obs {
            Observable::Charge => &self.charge,
            Observable::Dipole => &self.dipole,
        }
    }
}

pub fn exponent_table(phase: Phase, dim: usize) -> Result<ExponentTable> {
    use Growth::{Log, Power};
    let (charge, dipole) =
        match (dim, phase) {
            (1, Phase::WeakWeak) => return Err(Error::Parameter(
                "weak-weak is not a phase in one dimension: charge sharpens at any nonzero rate"
                    .into(),
            )),
            (1, Phase::SharpWeak) => (
                ObservableLaws {
                    variance: Some(VarianceLaw::algebraic(2.0, -4.0)),
                    typical_time: Some(Power(0.5)),
                    sharpening: Log,
                },
                ObservableLaws {
                    variance: Some(VarianceLaw::algebraic(2.0, -2.0)),
                    typical_time: Some(Power(1.0)),
                    sharpening: Power(1.0),
                },
            ),
            (1, Phase::SharpSharp) => {
                let laws = ObservableLaws {
                    variance: Some(VarianceLaw::exponential(1.0)),
                    typical_time: Some(Log),
                    sharpening: Log,
                };
                (laws, laws)
            }
            (2, Phase::WeakWeak) => (
                ObservableLaws {
                    variance: None,
                    typical_time: Some(Power(2.0)),
                    sharpening: Power(2.0),
                },
                ObservableLaws {
                    variance: None,
                    typical_time: Some(Power(4.0)),
                    sharpening: Power(2.0),
                },
            ),
            (2, Phase::SharpWeak) => (
                ObservableLaws {
                    variance: Some(VarianceLaw::algebraic(4.0, -5.0)),
                    typical_time: None,
                    sharpening: Log,
                },
                ObservableLaws {
                    variance: Some(VarianceLaw::algebraic(4.0, -3.0)),
                    typical_time: None,
                    sharpening: Power(2.0),
                },
            ),
            (2, Phase::SharpSharp) => {
                let laws = ObservableLaws {
                    variance: None,
                    typical_time: Some(Log),
                    sharpening: Log,
                };
                (laws, laws)
            }
            (d, _) => return Err(Error::Parameter(format!("dimension {d} not supported"))),
        };
    Ok(ExponentTable {
        phase,
        dim,
        charge,
        dipole,
    })
}

/// Sharpening-time growth per observable, `(charge, dipole)`.
pub fn sharpening_table(phase: Phase, dim: usize) -> Result<(Growth, Growth)> {
    let t = exponent_table(phase, dim)?;
    Ok((t.charge.sharpening, t.dipole.sharpening))
}

/// Asymptotic subsystem variance `σ²(ℓ, t)` up to a constant.
pub fn variance_scaling(
    ell: f64,
    t: f64,
    phase: Phase,
    dim: usize,
    obs: Observable,
    m_d: f64,
) -> Result<f64> {
    if !(ell > 0.0) || !(t > 0.0) {
        return Err(Error::Parameter(format!(
            "need ell > 0 and t > 0, got ({ell}, {t})"
        )));
    }
    let table = exponent_table(phase, dim)?;
    let law = table.get(obs).variance.ok_or_else(|| {
        Error::Parameter(format!(
            "no tabulated variance law for {} in the {dim}D {phase} phase",
            obs.name()
        ))
    })?;
    if law.decay == Decay::Exponential && !(m_d >= 0.0) {
        return Err(Error::Parameter(format!(
            "m_d must be nonnegative, got {m_d}"
        )));
    }
    Ok(law.evaluate(ell, t, m_d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneity() {
        let f =
            |l, t| variance_scaling(l, t, Phase::SharpWeak, 1, Observable::Dipole, 0.0).unwrap();
        assert!((f(6.0, 10.0) / f(3.0, 5.0) - 1.0).abs() < 1e-14);
        let g = |t| variance_scaling(8.0, t, Phase::SharpWeak, 2, Observable::Charge, 0.0).unwrap();
        assert!((g(14.0) / g(7.0) - 2f64.powi(-5)).abs() < 1e-15);
    }

    #[test]
    fn sharp_slope() {
        let m_d = 0.3f64;
        let f = |t| {
            variance_scaling(10.0, t, Phase::SharpSharp, 1, Observable::Dipole, m_d)
                .unwrap()
                .ln()
        };
        let slope = (f(7.0) - f(2.0)) / 5.0;
        assert!((slope + m_d.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn labels() {
        assert_eq!("dipole-fuzzy".parse::<Phase>().unwrap(), Phase::SharpWeak);
        assert!("liquid".parse::<Phase>().is_err());
        assert!(exponent_table(Phase::WeakWeak, 1).is_err());
        assert!(variance_scaling(2.0, 2.0, Phase::WeakWeak, 2, Observable::Charge, 0.0).is_err());
    }
}
