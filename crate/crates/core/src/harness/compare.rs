use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_scaling, FitForm};
use crate::observables::Observable;

/// Spatial profile `(r, C(r))` of one observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub observable: Observable,
    pub points: Vec<(f64, f64)>,
}

impl Profile {
    /// Keeps finite nonzero points inside `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Profile {
        Profile {
            observable: self.observable,
            points: self
                .points
                .iter()
                .copied()
                .filter(|&(r, y)| r >= lo && r <= hi && y.is_finite() && y != 0.0)
                .collect(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub form: FitForm,
    /// Power-law exponent (for `power`) or decay rate (for `exponential`).
    pub exponent: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub observable: Observable,
    pub sim: Classification,
    pub theory: Classification,
    pub tolerance: f64,
    pub pass: bool,
}

/// Fits `|y|` against power and exponential forms and keeps the winner.
pub fn classify(profile: &Profile) -> Result<Classification> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = profile
        .points
        .iter()
        .filter(|(r, y)| r.is_finite() && y.is_finite() && *y != 0.0)
        .map(|&(r, y)| (r, y.abs()))
        .unzip();
    let report = fit_scaling(&xs, &ys, &[FitForm::Power, FitForm::Exponential])?;
    let best = report.best_fit();
    Ok(Classification {
        form: best.form,
        exponent: best.a,
        error: best.a_err,
    })
}

/// Side-by-side classification of a simulated and a predicted profile.
/// Power laws pass when exponents agree within `tolerance`; exponential
/// decay passes when both sides are exponential.
pub fn compare_theory(sim: &Profile, theory: &Profile, tolerance: f64) -> Result<ComparisonRow> {
    if sim.observable != theory.observable {
        return Err(Error::Parameter(format!(
            "cannot compare {} profile against {} prediction",
            sim.observable.name(),
            theory.observable.name()
        )));
    }
    let s = classify(sim)?;
    let t = classify(theory)?;
    let pass = match (s.form, t.form) {
        (FitForm::Power, FitForm::Power) => (s.exponent - t.exponent).abs() <= tolerance,
        (FitForm::Exponential, FitForm::Exponential) => true,
        _ => false,
    };
    Ok(ComparisonRow {
        observable: sim.observable,
        sim: s,
        theory: t,
        tolerance,
        pass,
    })
}
