//! Least-squares selection among simple scaling forms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitForm {
    /// `y = a ln x + b`
    Log,
    /// `y = a x + b`
    Linear,
    /// `ln y = a ln x + b`
    Power,
    /// `ln y = a x + b`
    Exponential,
}

impl FitForm {
    pub const ALL: [FitForm; 4] = [
        FitForm::Log,
        FitForm::Linear,
        FitForm::Power,
        FitForm::Exponential,
    ];

    fn log_target(self) -> bool {
        matches!(self, FitForm::Power | FitForm::Exponential)
    }

    pub fn predict(self, a: f64, b: f64, x: f64) -> f64 {
        match self {
            FitForm::Log => a * x.ln() + b,
            FitForm::Linear => a * x + b,
            FitForm::Power => (b + a * x.ln()).exp(),
            FitForm::Exponential => (b + a * x).exp(),
        }
    }
}

impl fmt::Display for FitForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitForm::Log => "log",
            FitForm::Linear => "linear",
            FitForm::Power => "power",
            FitForm::Exponential => "exponential",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormFit {
    pub form: FitForm,
    /// Slope: the coefficient of `ln x`, `x`, or the exponent.
    pub a: f64,
    pub b: f64,
    /// Standard error of `a`.
    pub a_err: f64,
    /// Residual sum of squares in `y`.
    pub rss: f64,
    /// Residual sum of squares in `ln y`, when every `y > 0`.
    pub log_rss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_points: usize,
    pub x_range: (f64, f64),
    pub fits: Vec<FormFit>,
    /// Forms that could not be fitted, with the reason.
    pub skipped: Vec<(FitForm, String)>,
    pub best: FitForm,
    /// Whether the selection compared residuals in `ln y`.
    pub log_space: bool,
}

impl FitReport {
    pub fn fit(&self, form: FitForm) -> Option<&FormFit> {
        self.fits.iter().find(|f| f.form == form)
    }

    pub fn best_fit(&self) -> &FormFit {
        self.fit(self.best).expect("best form is fitted")
    }

    fn score(&self, f: &FormFit) -> f64 {
        if self.log_space {
            f.log_rss.unwrap_or(f64::INFINITY)
        } else {
            f.rss
        }
    }

    /// Residual of `worse` divided by residual of `better`, in the space
    /// used for selection.
    pub fn residual_ratio(&self, better: FitForm, worse: FitForm) -> Option<f64> {
        let (b, w) = (self.fit(better)?, self.fit(worse)?);
        Some(self.score(w) / self.score(b))
    }
}

/// Ordinary least squares `v = a u + b`; returns `(a, b, se(a))`.
pub fn linear_regression(u: &[f64], v: &[f64]) -> (f64, f64, f64) {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|x| (x - mu).powi(2)).sum();
    let suv: f64 = u.iter().zip(v).map(|(x, y)| (x - mu) * (y - mv)).sum();
    let a = suv / suu;
    let b = mv - a * mu;
    let rss: f64 = u.iter().zip(v).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    let se = if u.len() > 2 {
        (rss / (n - 2.0) / suu).sqrt()
    } else {
        f64::NAN
    };
    (a, b, se)
}

pub fn fit_scaling(xs: &[f64], ys: &[f64], forms: &[FitForm]) -> Result<FitReport> {
    if xs.len() != ys.len() {
        return Err(Error::Fit(format!(
            "{} abscissae but {} values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 points, got {}",
            xs.len()
        )));
    }
    if forms.is_empty() {
        return Err(Error::Fit("no candidate forms".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::Fit("constant series".into()));
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::Fit("all abscissae equal".into()));
    }
    let all_pos_y = ys.iter().all(|&y| y > 0.0);
    let all_pos_x = xs.iter().all(|&x| x > 0.0);
    let ln_y: Option<Vec<f64>> = all_pos_y.then(|| ys.iter().map(|y| y.ln()).collect());
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for &form in forms {
        let needs_x = matches!(form, FitForm::Log | FitForm::Power);
        if needs_x && !all_pos_x {
            skipped.push((form, "needs x > 0".to_string()));
            continue;
        }
        if form.log_target() && !all_pos_y {
            skipped.push((form, "needs y > 0".to_string()));
            continue;
        }
        let u: Vec<f64> = match form {
            FitForm::Log | FitForm::Power => xs.iter().map(|x| x.ln()).collect(),
            _ => xs.to_vec(),
        };
        let target: &[f64] = if form.log_target() {
            ln_y.as_deref().unwrap()
        } else {
            ys
        };
        let (a, b, a_err) = linear_regression(&u, target);
        let rss = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| (y - form.predict(a, b, x)).powi(2))
            .sum();
        let log_rss = ln_y.as_ref().map(|ly| {
            xs.iter()
                .zip(ly)
                .map(|(&x, &l)| {
                    let p = form.predict(a, b, x);
                    if p > 0.0 {
                        (l - p.ln()).powi(2)
                    } else {
                        f64::INFINITY
                    }
                })
                .sum()
        });
        fits.push(FormFit {
            form,
            a,
            b,
            a_err,
            rss,
            log_rss,
        });
    }
    if fits.is_empty() {
        return Err(Error::Fit(
            "no candidate form applies to this series".into(),
        ));
    }
    let log_space = fits.iter().all(|f| f.form.log_target());
    let mut report = FitReport {
        n_points: xs.len(),
        x_range: (
            xs.iter().copied().fold(f64::INFINITY, f64::min),
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        fits,
        skipped,
        best: FitForm::Linear,
        log_space,
    };
    report.best = report
        .fits
        .iter()
        .min_by(|a, b| report.score(a).total_cmp(&report.score(b)))
        .map(|f| f.form)
        .unwrap();
    Ok(report)
}
