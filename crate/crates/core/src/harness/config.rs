//! TOML run configuration. Unknown keys are rejected everywhere.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::GateFamily;
use crate::lattice::{Boundary, LatticeGeometry};
use crate::measure::MeasurementKind;
use crate::observables::Observable;
use crate::state::{EXACT_MAX_BASIS, EXACT_MAX_SITES};
use crate::theory::TheoryParams;
use crate::trajectory::{InitialState, TrajectoryParams};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Engine {
    Exact,
    ParticleFilter(usize),
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Engine::Exact => f.write_str("exact"),
            Engine::ParticleFilter(n) => write!(f, "pf:{n}"),
        }
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exact" {
            return Ok(Engine::Exact);
        }
        if let Some(n) = s.strip_prefix("pf:") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::Config(format!("bad particle count in engine '{s}'")))?;
            if n < 2 {
                return Err(Error::Config(
                    "particle filter needs at least 2 particles".into(),
                ));
            }
            return Ok(Engine::ParticleFilter(n));
        }
        Err(Error::Config(format!(
            "unknown engine '{s}' (expected exact or pf:N)"
        )))
    }
}

impl Serialize for Engine {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Engine {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub lengths: Vec<usize>,
    #[serde(default = "open")]
    pub boundary: Boundary,
}

fn open() -> Boundary {
    Boundary::Open
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatesSection {
    #[serde(default)]
    pub family: GateFamily,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindLabel {
    #[default]
    Projective,
    Weak,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub rate: f64,
    #[serde(default)]
    pub kind: KindLabel,
    /// Required for weak measurements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
}

impl MeasurementSection {
    pub fn kind(&self) -> Result<MeasurementKind> {
        match (self.kind, self.strength) {
            (KindLabel::Projective, None) => Ok(MeasurementKind::Projective),
            (KindLabel::Projective, Some(_)) => Err(Error::Config(
                "strength is only meaningful for weak measurements".into(),
            )),
            (KindLabel::Weak, Some(strength)) => {
                let k = MeasurementKind::Weak { strength };
                k.validate().map_err(|e| Error::Config(e.to_string()))?;
                Ok(k)
            }
            (KindLabel::Weak, None) => {
                Err(Error::Config("weak measurements need a strength".into()))
            }
        }
    }
}

fn default_observables() -> Vec<Observable> {
    vec![Observable::Charge, Observable::Dipole]
}

fn default_threshold() -> f64 {
    0.01
}

fn yes() -> bool {
    true
}

fn default_out() -> String {
    "out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: usize,
    pub trajectories: usize,
    #[serde(default = "exact")]
    pub engine: Engine,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "yes")]
    pub stop_when_sharp: bool,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    /// Record connected density correlators, averaged over trajectories.
    #[serde(default)]
    pub correlators: bool,
    /// Also average correlators over every layer from this one to the
    /// horizon; unset uses the final layer only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlators_from: Option<usize>,
    /// Sites excluded at each edge when averaging correlators.
    #[serde(default)]
    pub correlator_margin: usize,
    #[serde(default = "default_cap")]
    pub basis_cap: usize,
}

fn exact() -> Engine {
    Engine::Exact
}

fn default_cap() -> usize {
    EXACT_MAX_BASIS
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// System sizes; 1D chains only (for grids use `[lattice]` directly).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lengths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    #[serde(default)]
    pub gates: GatesSection,
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub initial: InitialState,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "is_default_sweep")]
    pub sweep: SweepSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryParams>,
}

fn is_default_sweep(s: &SweepSection) -> bool {
    s == &SweepSection::default()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse without validating, so callers can apply overrides first.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg = Self::load_unvalidated(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_unvalidated(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn geometry(&self) -> Result<LatticeGeometry> {
        LatticeGeometry::new(&self.lattice.lengths, self.lattice.boundary)
    }

    pub fn trajectory_params(&self) -> Result<TrajectoryParams> {
        Ok(TrajectoryParams {
            rate: self.measurement.rate,
            kind: self.measurement.kind()?,
            horizon: self.run.horizon,
            threshold: self.run.threshold,
            observables: self.run.observables.clone(),
            stop_when_sharp: self.run.stop_when_sharp && !self.run.correlators,
            keep_record: false,
        })
    }

    /// Same config on another chain length or rate.
    pub fn with_point(&self, length: Option<usize>, rate: Option<f64>) -> Self {
        let mut c = self.clone();
        if let Some(l) = length {
            c.lattice.lengths = vec![l];
        }
        if let Some(g) = rate {
            c.measurement.rate = g;
        }
        c.sweep = SweepSection::default();
        c
    }

    /// Checks every constraint that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::PeriodicBoundary | Error::Geometry(_) | Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        let geometry = self.geometry().map_err(cfg)?;
        self.measurement.kind()?;
        let params = self.trajectory_params()?;
        params.validate().map_err(cfg)?;
        if self.run.trajectories == 0 {
            return Err(Error::Config("trajectories must be positive".into()));
        }
        if self
            .run
            .correlators_from
            .is_some_and(|f| f > self.run.horizon)
        {
            return Err(Error::Config("correlators_from exceeds the horizon".into()));
        }
        if self.run.observables.is_empty() {
            return Err(Error::Config("observables list is empty".into()));
        }
        self.initial.charges(&geometry).map_err(cfg)?;
        if let InitialState::Product { config } = &self.initial {
            geometry.parse_config(config).map_err(cfg)?;
        }
        if self.run.engine == Engine::Exact && geometry.n_sites() > EXACT_MAX_SITES {
            return Err(Error::EngineOverflow(format!(
                "{} sites exceeds the exact-mode limit of {EXACT_MAX_SITES}",
                geometry.n_sites()
            )));
        }
        for &l in &self.sweep.lengths {
            if l == 0 {
                return Err(Error::Config("sweep lengths must be positive".into()));
            }
            if geometry.dim() != 1 {
                return Err(Error::Config(
                    "length sweeps are only defined for chains".into(),
                ));
            }
            if self.run.engine == Engine::Exact && l > EXACT_MAX_SITES {
                return Err(Error::EngineOverflow(format!(
                    "sweep length {l} exceeds the exact-mode limit of {EXACT_MAX_SITES}"
                )));
            }
        }
        for &g in &self.sweep.rates {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::Config(format!("sweep rate {g} not in [0, 1]")));
            }
        }
        if let Some(t) = &self.theory {
            t.validate().map_err(cfg)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[lattice]
lengths = [8]

[measurement]
rate = 0.5

[run]
horizon = 50
trajectories = 10
"#;

    #[test]
    fn minimal_config_defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.run.engine, Engine::Exact);
        assert_eq!(c.gates.family, GateFamily::MinimalPair);
        assert_eq!(c.initial, InitialState::default());
        assert_eq!(c.run.threshold, 0.01);
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let typo = MINIMAL.replace("rate = 0.5", "rate = 0.5\nrat = 0.2");
        assert!(matches!(RunConfig::from_toml(&typo), Err(Error::Config(_))));
        let bad = MINIMAL.replace("rate = 0.5", "rate = 1.5");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::Config(_))));
        let periodic = MINIMAL.replace("lengths = [8]", "lengths = [8]\nboundary = \"periodic\"");
        assert!(matches!(
            RunConfig::from_toml(&periodic),
            Err(Error::PeriodicBoundary)
        ));
        let weak = MINIMAL.replace("rate = 0.5", "rate = 0.5\nkind = \"weak\"");
        assert!(RunConfig::from_toml(&weak).is_err());
        let big = MINIMAL.replace("lengths = [8]", "lengths = [40]");
        assert!(matches!(
            RunConfig::from_toml(&big),
            Err(Error::EngineOverflow(_))
        ));
        let pf = big.replace(
            "trajectories = 10",
            "trajectories = 10\nengine = \"pf:500\"",
        );
        assert_eq!(
            RunConfig::from_toml(&pf).unwrap().run.engine,
            Engine::ParticleFilter(500)
        );
    }

    #[test]
    fn engine_labels() {
        assert_eq!("exact".parse::<Engine>().unwrap(), Engine::Exact);
        assert_eq!(
            "pf:1000".parse::<Engine>().unwrap(),
            Engine::ParticleFilter(1000)
        );
        assert!("pf:x".parse::<Engine>().is_err());
        assert!("mcmc".parse::<Engine>().is_err());
    }
}
