//! Weighted-ensemble (particle filter) approximation of the conditional
//! state for systems too large for exact enumeration.
//!
//! A hidden reference configuration is evolved by the stochastic circuit and
//! generates the measurement record. Particles are evolved by the same
//! stochastic kernel and reweighted by the likelihood of every outcome.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{GateFamily, WindowKernel};
use crate::lattice::{Configuration, Dipole, LatticeGeometry, SectorKey};
use crate::measure::{
    sample_weak_outcome, spin, MeasurementEvent, MeasurementKind, MeasurementRecord, Outcome,
};
use crate::observables::{Density, Observable};
use crate::par::for_each_chunk_mut;
use crate::rng::{stream, trajectory_stream, SimRng, PURPOSE_PARTICLES, PURPOSE_RESAMPLE};
use crate::schedule::BrickworkSchedule;
use crate::trajectory::{InitialState, SharpeningTimes, TrajectoryParams};

/// Particles per independently seeded chunk.
pub const CHUNK: usize = 256;
pub const JACKKNIFE_BLOCKS: usize = 20;
const INIT_TAG: u64 = 1 << 63;

#[derive(Clone, Debug)]
pub struct ParticleEnsemble {
    geometry: LatticeGeometry,
    particles: Vec<Configuration>,
    weights: Vec<f64>,
}

/// Weighted estimate with a jackknife error bar.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PfEstimates {
    pub var_q: Estimate,
    pub var_p: Estimate,
    pub entropy: f64,
    pub ess: f64,
}

fn weighted_variance<F: Fn(Configuration) -> [f64; 2]>(
    particles: &[Configuration],
    weights: &[f64],
    f: &F,
) -> f64 {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return f64::NAN;
    }
    let mut m = [0.0; 2];
    for (&c, &w) in particles.iter().zip(weights) {
        let v = f(c);
        m[0] += w * v[0];
        m[1] += w * v[1];
    }
    m[0] /= total;
    m[1] /= total;
    let mut var = 0.0;
    for (&c, &w) in particles.iter().zip(weights) {
        let v = f(c);
        var += w * ((v[0] - m[0]).powi(2) + (v[1] - m[1]).powi(2));
    }
    var / total
}

/// Delete-one-block jackknife over contiguous index blocks.
fn jackknife<F: Fn(Configuration) -> [f64; 2]>(
    particles: &[Configuration],
    weights: &[f64],
    f: F,
) -> Estimate {
    let value = weighted_variance(particles, weights, &f);
    let n = particles.len();
    let b = JACKKNIFE_BLOCKS.min(n);
    if b < 2 {
        return Estimate {
            value,
            error: f64::NAN,
        };
    }
    let mut masked = weights.to_vec();
    let mut thetas = Vec::with_capacity(b);
    for k in 0..b {
        let (lo, hi) = (k * n / b, (k + 1) * n / b);
        masked[lo..hi].iter_mut().for_each(|w| *w = 0.0);
        let t = weighted_variance(particles, &masked, &f);
        if t.is_finite() {
            thetas.push(t);
        }
        masked[lo..hi].copy_from_slice(&weights[lo..hi]);
    }
    let m = thetas.len() as f64;
    let mean = thetas.iter().sum::<f64>() / m;
    let ss: f64 = thetas.iter().map(|t| (t - mean).powi(2)).sum();
    Estimate {
        value,
        error: ((m - 1.0) / m * ss).sqrt(),
    }
}

impl ParticleEnsemble {
    pub fn new(geometry: LatticeGeometry, particles: Vec<Configuration>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Parameter(
                "particle ensemble needs at least one particle".into(),
            ));
        }
        let mask = geometry.full_mask();
        if particles.iter().any(|c| c.bits() & !mask != 0) {
            return Err(Error::InvalidState("particle outside the lattice".into()));
        }
        let n = particles.len();
        Ok(Self {
            geometry,
            particles,
            weights: vec![1.0 / n as f64; n],
        })
    }

    /// `n` particles drawn from the initial ensemble with chunk-indexed
    /// streams.
    pub fn sample(
        geometry: LatticeGeometry,
        initial: &InitialState,
        n: usize,
        seed: u64,
        traj: u64,
    ) -> Result<Self> {
        let mut particles = vec![Configuration(0); n];
        let failed = std::sync::atomic::AtomicBool::new(false);
        for_each_chunk_mut(&mut particles, CHUNK, |k, chunk| {
            let mut rng = stream(seed, traj, PURPOSE_PARTICLES, INIT_TAG | k as u64);
            for p in chunk.iter_mut() {
                match initial.sample(&geometry, &mut rng) {
                    Ok(c) => *p = c,
                    Err(_) => failed.store(true, std::sync::atomic::Ordering::Relaxed),
                }
            }
        });
        if failed.into_inner() {
            initial.charges(&geometry)?;
            return Err(Error::Parameter("could not sample initial ensemble".into()));
        }
        Self::new(geometry, particles)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Configuration] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn ess(&self) -> f64 {
        let s: f64 = self.weights.iter().sum();
        let s2: f64 = self.weights.iter().map(|w| w * w).sum();
        if s2 > 0.0 {
            s * s / s2
        } else {
            0.0
        }
    }

    /// Moves every particle through the gates of `layer`. Chunk `k` uses the
    /// stream keyed by `(seed, traj, layer, k)`, so the result does not depend
    /// on the number of workers.
    pub fn step_gates(
        &mut self,
        kernel: &WindowKernel,
        schedule: &BrickworkSchedule,
        layer: usize,
        seed: u64,
        traj: u64,
    ) {
        let windows = schedule.windows(layer);
        for_each_chunk_mut(&mut self.particles, CHUNK, |k, chunk| {
            let mut rng = stream(
                seed,
                traj,
                PURPOSE_PARTICLES,
                ((layer as u64) << 32) | k as u64,
            );
            for p in chunk.iter_mut() {
                *p = move_config(*p, kernel, windows, &mut rng);
            }
        });
    }

    /// Multiplies weights by the likelihood of the outcome at `site`.
    /// Returns false if every weight vanished.
    pub fn reweight(&mut self, site: usize, kind: MeasurementKind, outcome: Outcome) -> bool {
        match (kind, outcome) {
            (_, Outcome::Projective(n)) => {
                let want = n != 0;
                for (c, w) in self.particles.iter().zip(self.weights.iter_mut()) {
                    if c.occupied(site) != want {
                        *w = 0.0;
                    }
                }
            }
            (MeasurementKind::Weak { strength }, Outcome::Weak(m)) => {
                let l = |n: u8| -0.5 * strength * (spin(n) - m).powi(2);
                let top = l(0).max(l(1));
                let (w0, w1) = ((l(0) - top).exp(), (l(1) - top).exp());
                for (c, w) in self.particles.iter().zip(self.weights.iter_mut()) {
                    *w *= if c.occupied(site) { w1 } else { w0 };
                }
            }
            (MeasurementKind::Projective, Outcome::Weak(_)) => {}
        }
        let total: f64 = self.weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return false;
        }
        self.weights.iter_mut().for_each(|w| *w /= total);
        true
    }

    /// Systematic resampling to uniform weights.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.particles.len();
        let total: f64 = self.weights.iter().sum();
        let u0 = rng.random::<f64>() / n as f64;
        let mut out = Vec::with_capacity(n);
        let mut cum = self.weights[0] / total;
        let mut j = 0;
        for i in 0..n {
            let u = u0 + i as f64 / n as f64;
            while u > cum && j + 1 < n {
                j += 1;
                cum += self.weights[j] / total;
            }
            out.push(self.particles[j]);
        }
        self.particles = out;
        self.weights = vec![1.0 / n as f64; n];
    }

    /// Replaces every particle with `c`, uniform weights.
    pub fn reseed(&mut self, c: Configuration) {
        let n = self.particles.len();
        self.particles = vec![c; n];
        self.weights = vec![1.0 / n as f64; n];
    }

    /// Weighted connected covariance matrix of a density, row-major.
    pub fn connected_matrix(&self, density: Density) -> Vec<f64> {
        let n = density.n_points(&self.geometry);
        let mut mean = vec![0.0; n];
        let mut second = vec![0.0; n * n];
        let mut buf = vec![0.0; n];
        let total: f64 = self.weights.iter().sum();
        for (&c, &w) in self.particles.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let w = w / total;
            density.evaluate(&self.geometry, c, &mut buf);
            for i in 0..n {
                mean[i] += w * buf[i];
                for j in 0..n {
                    second[i * n + j] += w * buf[i] * buf[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                second[i * n + j] -= mean[i] * mean[j];
            }
        }
        second
    }

    pub fn estimates(&self) -> PfEstimates {
        let geom = self.geometry;
        let q = |c: Configuration| [c.charge() as f64, 0.0];
        let p = |c: Configuration| {
            let d: Dipole = geom.dipole(c);
            [d.x as f64, d.y as f64]
        };
        let mut mass: BTreeMap<SectorKey, f64> = BTreeMap::new();
        for (&c, &w) in self.particles.iter().zip(&self.weights) {
            *mass.entry(geom.sector_key(c)).or_default() += w;
        }
        let total: f64 = mass.values().sum();
        let entropy = -mass
            .values()
            .filter(|&&m| m > 0.0)
            .map(|&m| (m / total) * (m / total).ln())
            .sum::<f64>()
            + 0.0;
        PfEstimates {
            var_q: jackknife(&self.particles, &self.weights, q),
            var_p: jackknife(&self.particles, &self.weights, p),
            entropy,
            ess: self.ess(),
        }
    }
}

/// One stochastic pass of a configuration through a list of windows: each
/// window state jumps to a uniformly random member of its component.
pub fn move_config<R: Rng + ?Sized>(
    mut c: Configuration,
    kernel: &WindowKernel,
    windows: &[crate::lattice::Window],
    rng: &mut R,
) -> Configuration {
    for w in windows {
        let local = w.pack(c);
        let comp = kernel.component(local);
        if comp.len() > 1 {
            let pick = comp[rng.random_range(0..comp.len())];
            c = w.unpack_into(c, pick);
        }
    }
    c
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PfLayerStats {
    pub layer: usize,
    pub var_q: f64,
    pub var_q_err: f64,
    pub var_p: f64,
    pub var_p_err: f64,
    pub entropy: f64,
    pub n_measurements: usize,
    pub n_particles: usize,
    pub ess_min: f64,
    pub resample_count: usize,
    pub degeneracy_flags: usize,
}

impl PfLayerStats {
    pub fn variance(&self, obs: Observable) -> f64 {
        match obs {
            Observable::Charge => self.var_q,
            Observable::Dipole => self.var_p,
        }
    }

    fn as_exact(&self) -> crate::trajectory::LayerStats {
        crate::trajectory::LayerStats {
            layer: self.layer,
            var_q: self.var_q,
            var_p: self.var_p,
            entropy: self.entropy,
            n_measurements: self.n_measurements,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PfResult {
    pub index: u64,
    pub seed: u64,
    pub series: Vec<PfLayerStats>,
    pub sharpening: SharpeningTimes,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<MeasurementRecord>,
}

#[derive(Clone, Debug)]
pub struct PfEngine {
    geometry: LatticeGeometry,
    kernel: WindowKernel,
    schedule: BrickworkSchedule,
    initial: InitialState,
    n_particles: usize,
}

impl PfEngine {
    pub fn new(
        geometry: LatticeGeometry,
        family: GateFamily,
        initial: InitialState,
        n_particles: usize,
    ) -> Result<Self> {
        if n_particles < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 particles, got {n_particles}"
            )));
        }
        initial.charges(&geometry)?;
        Ok(Self {
            geometry,
            kernel: WindowKernel::new(family),
            schedule: BrickworkSchedule::new(geometry),
            initial,
            n_particles,
        })
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    fn layer_row(
        ens: &ParticleEnsemble,
        layer: usize,
        n_meas: usize,
        ess_min: f64,
        resamples: usize,
        degens: usize,
    ) -> PfLayerStats {
        let e = ens.estimates();
        PfLayerStats {
            layer,
            var_q: e.var_q.value,
            var_q_err: e.var_q.error,
            var_p: e.var_p.value,
            var_p_err: e.var_p.error,
            entropy: e.entropy,
            n_measurements: n_meas,
            n_particles: ens.len(),
            ess_min: ess_min.min(e.ess),
            resample_count: resamples,
            degeneracy_flags: degens,
        }
    }

    pub fn run_trajectory(
        &self,
        params: &TrajectoryParams,
        seed: u64,
        index: u64,
    ) -> Result<(PfResult, ParticleEnsemble)> {
        self.run_trajectory_observed(params, seed, index, |_, _| {})
    }

    /// Like [`run_trajectory`](Self::run_trajectory), calling `observe` with
    /// the ensemble after every layer.
    pub fn run_trajectory_observed<F: FnMut(usize, &ParticleEnsemble)>(
        &self,
        params: &TrajectoryParams,
        seed: u64,
        index: u64,
        mut observe: F,
    ) -> Result<(PfResult, ParticleEnsemble)> {
        params.validate()?;
        let mut rng: SimRng = trajectory_stream(seed, index);
        let mut resample_rng = stream(seed, index, PURPOSE_RESAMPLE, 0);
        let mut reference = self.initial.sample(&self.geometry, &mut rng)?;
        let mut ens =
            ParticleEnsemble::sample(self.geometry, &self.initial, self.n_particles, seed, index)?;
        let n_sites = self.geometry.n_sites();
        let half = self.n_particles as f64 / 2.0;
        let mut record = params.keep_record.then(MeasurementRecord::default);
        let mut sharp = SharpeningTimes::default();
        let first = Self::layer_row(&ens, 0, 0, f64::INFINITY, 0, 0);
        let mut done = sharp.observe(&first.as_exact(), &params.observables, params.threshold);
        let mut series = vec![first];
        let mut layer = 0;
        while layer < params.horizon && !(done && params.stop_when_sharp) {
            let windows = self.schedule.windows(layer);
            reference = move_config(reference, &self.kernel, windows, &mut rng);
            ens.step_gates(&self.kernel, &self.schedule, layer, seed, index);
            let (mut n_meas, mut resamples, mut degens) = (0, 0, 0);
            let mut ess_min = ens.ess();
            for site in 0..n_sites {
                if rng.random::<f64>() >= params.rate {
                    continue;
                }
                let n = reference.occupation(site);
                let outcome = match params.kind {
                    MeasurementKind::Projective => Outcome::Projective(n),
                    MeasurementKind::Weak { strength } => {
                        Outcome::Weak(sample_weak_outcome(n, strength, &mut rng))
                    }
                };
                n_meas += 1;
                if let Some(r) = record.as_mut() {
                    r.push(MeasurementEvent {
                        layer,
                        site,
                        outcome,
                    });
                }
                if !ens.reweight(site, params.kind, outcome) {
                    ens.reseed(reference);
                    degens += 1;
                    continue;
                }
                let ess = ens.ess();
                ess_min = ess_min.min(ess);
                if ess < half {
                    ens.resample(&mut resample_rng);
                    resamples += 1;
                }
            }
            layer += 1;
            let row = Self::layer_row(&ens, layer, n_meas, ess_min, resamples, degens);
            observe(layer, &ens);
            done = sharp.observe(&row.as_exact(), &params.observables, params.threshold);
            series.push(row);
        }
        Ok((
            PfResult {
                index,
                seed,
                series,
                sharpening: sharp,
                horizon: params.horizon,
                record,
            },
            ens,
        ))
    }
}
