//! Exact monitored evolution of the conditional diagonal state.
//!
//! One layer applies the averaged gate on every scheduled window, then visits
//! the sites in order and measures each one independently with probability
//! `rate`. Outcomes are drawn from the current posterior (Born rule) and the
//! state is conditioned on them immediately.

use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{GateFamily, WindowKernel};
use crate::lattice::{Configuration, LatticeGeometry};
use crate::measure::{MeasurementEvent, MeasurementKind, MeasurementRecord};
use crate::observables::{charge_variance, dipole_variance, sector_entropy, Observable};
use crate::rng::{trajectory_stream, SimRng};
use crate::schedule::BrickworkSchedule;
use crate::state::{binomial, ProbState, SectorBasis, WindowPlan};

/// Initial weakly symmetric ensembles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// Uniform over every configuration with `Q ∈ {c - w, ..., c + w}`;
    /// `c` defaults to half filling.
    ChargeBand {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<u32>,
        #[serde(default = "one")]
        half_width: u32,
    },
    /// Uniform over every configuration at one charge, all dipole values.
    FixedCharge {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        charge: Option<u32>,
    },
    /// A single configuration given as a 0/1 string.
    Product { config: String },
}

fn one() -> u32 {
    1
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::ChargeBand {
            center: None,
            half_width: 1,
        }
    }
}

impl InitialState {
    pub fn charges(&self, geometry: &LatticeGeometry) -> Result<Vec<u32>> {
        let n = geometry.n_sites() as u32;
        match self {
            InitialState::ChargeBand { center, half_width } => {
                let c = center.unwrap_or(n / 2);
                let lo = c.saturating_sub(*half_width);
                let hi = (c + half_width).min(n);
                Ok((lo..=hi).collect())
            }
            InitialState::FixedCharge { charge } => {
                let q = charge.unwrap_or(n / 2);
                if q > n {
                    return Err(Error::Parameter(format!("charge {q} exceeds {n} sites")));
                }
                Ok(vec![q])
            }
            InitialState::Product { config } => Ok(vec![geometry.parse_config(config)?.charge()]),
        }
    }

    pub fn exact_state(&self, geometry: LatticeGeometry, cap: usize) -> Result<ProbState> {
        match self {
            InitialState::Product { config } => {
                ProbState::delta(geometry, geometry.parse_config(config)?)
            }
            _ => ProbState::uniform_over_charges(geometry, &self.charges(&geometry)?, cap),
        }
    }

    /// One configuration drawn uniformly from the ensemble.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        geometry: &LatticeGeometry,
        rng: &mut R,
    ) -> Result<Configuration> {
        if let InitialState::Product { config } = self {
            return geometry.parse_config(config);
        }
        let n = geometry.n_sites();
        let charges = self.charges(geometry)?;
        let weights: Vec<f64> = charges
            .iter()
            .map(|&q| binomial(n as u64, q as u64))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut q = *charges.last().expect("nonempty charge list");
        for (&qq, &w) in charges.iter().zip(&weights) {
            if u < w {
                q = qq;
                break;
            }
            u -= w;
        }
        let bits = sample_indices(rng, n, q as usize)
            .into_iter()
            .fold(0u64, |acc, s| acc | (1u64 << s));
        Ok(Configuration(bits))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub rate: f64,
    pub kind: MeasurementKind,
    pub horizon: usize,
    pub threshold: f64,
    pub observables: Vec<Observable>,
    /// Stop once every requested observable has sharpened.
    pub stop_when_sharp: bool,
    pub keep_record: bool,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            rate: 0.3,
            kind: MeasurementKind::Projective,
            horizon: 200,
            threshold: 0.01,
            observables: vec![Observable::Charge, Observable::Dipole],
            stop_when_sharp: true,
            keep_record: false,
        }
    }
}

impl TrajectoryParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::Parameter(format!(
                "rate {} not in [0, 1]",
                self.rate
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Parameter("horizon must be positive".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Parameter(
                "sharpening threshold must be positive".into(),
            ));
        }
        self.kind.validate()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    pub layer: usize,
    pub var_q: f64,
    pub var_p: f64,
    pub entropy: f64,
    pub n_measurements: usize,
}

impl LayerStats {
    pub fn of(state: &ProbState, layer: usize, n_measurements: usize) -> Self {
        let [vx, vy] = dipole_variance(state);
        Self {
            layer,
            var_q: charge_variance(state),
            var_p: vx + vy,
            entropy: sector_entropy(state),
            n_measurements,
        }
    }

    pub fn variance(&self, obs: Observable) -> f64 {
        match obs {
            Observable::Charge => self.var_q,
            Observable::Dipole => self.var_p,
        }
    }
}

/// First layer at which an observable's variance dropped below threshold;
/// `None` means censored at the horizon.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharpeningTimes {
    pub charge: Option<usize>,
    pub dipole: Option<usize>,
}

impl SharpeningTimes {
    pub fn get(&self, obs: Observable) -> Option<usize> {
        match obs {
            Observable::Charge => self.charge,
            Observable::Dipole => self.dipole,
        }
    }

    fn set(&mut self, obs: Observable, t: usize) {
        match obs {
            Observable::Charge => self.charge = Some(t),
            Observable::Dipole => self.dipole = Some(t),
        }
    }

    /// Updates from one layer's stats; returns true when every requested
    /// observable is sharp.
    pub fn observe(&mut self, stats: &LayerStats, obs: &[Observable], threshold: f64) -> bool {
        for &o in obs {
            if self.get(o).is_none() && stats.variance(o) < threshold {
                self.set(o, stats.layer);
            }
        }
        obs.iter().all(|&o| self.get(o).is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub index: u64,
    pub seed: u64,
    pub series: Vec<LayerStats>,
    pub sharpening: SharpeningTimes,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<MeasurementRecord>,
}

/// Exact engine: basis, kernel and per-layer mixing plans shared by every
/// trajectory with the same geometry and initial ensemble.
#[derive(Clone, Debug)]
pub struct ExactEngine {
    geometry: LatticeGeometry,
    kernel: WindowKernel,
    schedule: BrickworkSchedule,
    plans: Vec<Vec<WindowPlan>>,
    initial: ProbState,
}

impl ExactEngine {
    pub fn new(
        geometry: LatticeGeometry,
        family: GateFamily,
        initial: &InitialState,
        cap: usize,
    ) -> Result<Self> {
        let state = initial.exact_state(geometry, cap)?;
        Ok(Self::from_state(state, family))
    }

    /// Engine whose basis is the basis of `state`.
    pub fn from_state(state: ProbState, family: GateFamily) -> Self {
        let geometry = *state.geometry();
        let kernel = WindowKernel::new(family);
        let schedule = BrickworkSchedule::new(geometry);
        let basis: &Arc<SectorBasis> = state.basis();
        let plans = (0..schedule.cycle_len())
            .map(|t| {
                schedule
                    .windows(t)
                    .iter()
                    .map(|&w| WindowPlan::build(basis, &kernel, w))
                    .collect()
            })
            .collect();
        Self {
            geometry,
            kernel,
            schedule,
            plans,
            initial: state,
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn kernel(&self) -> &WindowKernel {
        &self.kernel
    }

    pub fn schedule(&self) -> &BrickworkSchedule {
        &self.schedule
    }

    pub fn initial_state(&self) -> &ProbState {
        &self.initial
    }

    pub fn plans(&self, layer: usize) -> &[WindowPlan] {
        &self.plans[self.schedule.layer_class(layer)]
    }

    /// Unitary-plus-dephasing part of a layer.
    pub fn apply_gates(&self, state: &mut ProbState, layer: usize) {
        for plan in self.plans(layer) {
            state.apply_plan(plan);
        }
    }

    /// One full layer: gates, then Bernoulli(`rate`) measurements per site.
    pub fn step_layer<R: Rng + ?Sized>(
        &self,
        state: &mut ProbState,
        layer: usize,
        rate: f64,
        kind: MeasurementKind,
        rng: &mut R,
    ) -> Result<Vec<MeasurementEvent>> {
        self.apply_gates(state, layer);
        let mut events = Vec::new();
        for site in 0..self.geometry.n_sites() {
            if rng.random::<f64>() < rate {
                let outcome = state.measure(site, kind, rng)?;
                events.push(MeasurementEvent {
                    layer,
                    site,
                    outcome,
                });
            }
        }
        Ok(events)
    }

    pub fn run_trajectory(
        &self,
        params: &TrajectoryParams,
        master_seed: u64,
        index: u64,
    ) -> Result<(TrajectoryResult, ProbState)> {
        self.run_trajectory_observed(params, master_seed, index, |_, _| {})
    }

    /// Like [`run_trajectory`](Self::run_trajectory), calling `observe` with
    /// the conditional state after every layer.
    pub fn run_trajectory_observed<F: FnMut(usize, &ProbState)>(
        &self,
        params: &TrajectoryParams,
        master_seed: u64,
        index: u64,
        mut observe: F,
    ) -> Result<(TrajectoryResult, ProbState)> {
        params.validate()?;
        let mut rng: SimRng = trajectory_stream(master_seed, index);
        let mut state = self.initial.clone();
        let mut series = Vec::with_capacity(params.horizon + 1);
        let mut sharp = SharpeningTimes::default();
        let mut record = params.keep_record.then(MeasurementRecord::default);
        let first = LayerStats::of(&state, 0, 0);
        let mut done = sharp.observe(&first, &params.observables, params.threshold);
        series.push(first);
        let mut layer = 0;
        while layer < params.horizon && !(done && params.stop_when_sharp) {
            let events = self.step_layer(&mut state, layer, params.rate, params.kind, &mut rng)?;
            layer += 1;
            let stats = LayerStats::of(&state, layer, events.len());
            observe(layer, &state);
            done = sharp.observe(&stats, &params.observables, params.threshold);
            series.push(stats);
            if let Some(r) = record.as_mut() {
                r.extend(events);
            }
        }
        Ok((
            TrajectoryResult {
                index,
                seed: master_seed,
                series,
                sharpening: sharp,
                horizon: params.horizon,
                record,
            },
            state,
        ))
    }

    /// Evolves the initial state conditioned on a given record (for example
    /// one produced by a particle-filter reference trajectory). Returns the
    /// stats after each layer, starting with the initial state.
    pub fn replay(
        &self,
        record: &MeasurementRecord,
        kind: MeasurementKind,
        layers: usize,
    ) -> Result<(Vec<LayerStats>, ProbState)> {
        let mut state = self.initial.clone();
        let mut series = vec![LayerStats::of(&state, 0, 0)];
        let events = record.events();
        let mut next = 0;
        for layer in 0..layers {
            self.apply_gates(&mut state, layer);
            let mut count = 0;
            while next < events.len() && events[next].layer == layer {
                let e = events[next];
                state.condition(e.site, kind, e.outcome)?;
                next += 1;
                count += 1;
            }
            series.push(LayerStats::of(&state, layer + 1, count));
        }
        Ok((series, state))
    }
}
