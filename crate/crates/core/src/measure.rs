//! Born-rule sampling and Bayesian conditioning of local charge measurements.
//!
//! Weak measurements use the Gaussian likelihood
//! `exp(-γ_w (σ - m)² / 2)` with `σ = 2n - 1`, so the outcome of a site with
//! definite occupation `n` is distributed as `N(σ, 1/γ_w)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::ProbState;

#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasurementKind {
    #[default]
    Projective,
    Weak {
        strength: f64,
    },
}

impl MeasurementKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MeasurementKind::Weak { strength } if !(strength > 0.0) || !strength.is_finite() => {
                Err(Error::Parameter(format!(
                    "weak measurement strength must be positive, got {strength}"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Projective(u8),
    Weak(f64),
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    pub layer: usize,
    pub site: usize,
    pub outcome: Outcome,
}

/// Append-only spacetime record of outcomes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    events: Vec<MeasurementEvent>,
}

impl MeasurementRecord {
    pub fn push(&mut self, e: MeasurementEvent) {
        self.events.push(e);
    }

    pub fn extend(&mut self, es: impl IntoIterator<Item = MeasurementEvent>) {
        self.events.extend(es);
    }

    pub fn events(&self) -> &[MeasurementEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events of one layer, in site order.
    pub fn layer(&self, layer: usize) -> impl Iterator<Item = &MeasurementEvent> {
        self.events.iter().filter(move |e| e.layer == layer)
    }
}

#[inline]
pub fn spin(n: u8) -> f64 {
    2.0 * n as f64 - 1.0
}

/// Log-likelihood of a weak outcome `m` given occupation `n`, up to a
/// constant.
#[inline]
pub fn weak_log_likelihood(n: u8, m: f64, strength: f64) -> f64 {
    let d = spin(n) - m;
    -0.5 * strength * d * d
}

/// Draws a weak outcome for a site with definite occupation `n`.
pub fn sample_weak_outcome<R: Rng + ?Sized>(n: u8, strength: f64, rng: &mut R) -> f64 {
    let normal = Normal::new(spin(n), 1.0 / strength.sqrt()).expect("positive strength");
    normal.sample(rng)
}

impl ProbState {
    /// Probability that `site` is occupied.
    pub fn occupation_probability(&self, site: usize) -> f64 {
        self.basis()
            .configs()
            .iter()
            .zip(self.probs())
            .filter(|(c, _)| c.occupied(site))
            .map(|(_, &p)| p)
            .sum()
    }

    /// Restricts to configurations with `n_site = outcome` and renormalizes.
    /// Returns the prior probability of the outcome.
    pub fn condition_projective(&mut self, site: usize, outcome: u8) -> Result<f64> {
        let basis = self.basis().clone();
        let want = outcome != 0;
        let mut kept = 0.0;
        for (c, p) in basis.configs().iter().zip(self.probs_mut().iter_mut()) {
            if c.occupied(site) == want {
                kept += *p;
            } else {
                *p = 0.0;
            }
        }
        if !(kept > 0.0) {
            return Err(Error::ImpossibleOutcome);
        }
        self.renormalize()?;
        Ok(kept)
    }

    pub fn measure_projective<R: Rng + ?Sized>(&mut self, site: usize, rng: &mut R) -> u8 {
        let p1 = self.occupation_probability(site) / self.total();
        let outcome = u8::from(rng.random::<f64>() < p1);
        self.condition_projective(site, outcome)
            .expect("sampled outcome has positive probability");
        outcome
    }

    /// Reweights by the Gaussian likelihood of outcome `m` and renormalizes.
    pub fn condition_weak(&mut self, site: usize, strength: f64, m: f64) -> Result<()> {
        MeasurementKind::Weak { strength }.validate()?;
        let l0 = weak_log_likelihood(0, m, strength);
        let l1 = weak_log_likelihood(1, m, strength);
        let top = l0.max(l1);
        let (w0, w1) = ((l0 - top).exp(), (l1 - top).exp());
        let basis = self.basis().clone();
        for (c, p) in basis.configs().iter().zip(self.probs_mut().iter_mut()) {
            *p *= if c.occupied(site) { w1 } else { w0 };
        }
        self.renormalize()
    }

    /// Samples `m` from the state's Gaussian mixture and conditions on it.
    pub fn measure_weak<R: Rng + ?Sized>(
        &mut self,
        site: usize,
        strength: f64,
        rng: &mut R,
    ) -> Result<f64> {
        MeasurementKind::Weak { strength }.validate()?;
        let p1 = self.occupation_probability(site) / self.total();
        let n = u8::from(rng.random::<f64>() < p1);
        let m = sample_weak_outcome(n, strength, rng);
        self.condition_weak(site, strength, m)?;
        Ok(m)
    }

    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        site: usize,
        kind: MeasurementKind,
        rng: &mut R,
    ) -> Result<Outcome> {
        Ok(match kind {
            MeasurementKind::Projective => Outcome::Projective(self.measure_projective(site, rng)),
            MeasurementKind::Weak { strength } => {
                Outcome::Weak(self.measure_weak(site, strength, rng)?)
            }
        })
    }

    pub fn condition(
        &mut self,
        site: usize,
        kind: MeasurementKind,
        outcome: Outcome,
    ) -> Result<()> {
        match (kind, outcome) {
            (_, Outcome::Projective(n)) => self.condition_projective(site, n).map(|_| ()),
            (MeasurementKind::Weak { strength }, Outcome::Weak(m)) => {
                self.condition_weak(site, strength, m)
            }
            (MeasurementKind::Projective, Outcome::Weak(_)) => Err(Error::Parameter(
                "weak outcome replayed with projective measurement kind".into(),
            )),
        }
    }
}
