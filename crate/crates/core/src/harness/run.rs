use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Engine, RunConfig};
use super::io::{csv_bytes, emit, json_bytes, FileEntry};
use super::stats::{summarize_sharpening, SharpeningSummary};
use crate::error::{Error, Result};
use crate::fit::{fit_scaling, FitForm, FitReport};
use crate::lattice::LatticeGeometry;
use crate::observables::{connected_matrix, profile_from_matrix, Density, Observable};
use crate::par::{map_indexed, with_jobs};
use crate::particle::{PfEngine, PfLayerStats};
use crate::rng::{stream, PURPOSE_BOOTSTRAP};
use crate::trajectory::{ExactEngine, LayerStats, SharpeningTimes};

pub const SCHEMA_VERSION: u32 = 1;
pub const SEED_DERIVATION: &str =
    "ChaCha8 keyed by 32 bytes: (master_seed, trajectory_index, purpose, index) as little-endian u64";

#[derive(Serialize)]
struct ExactRow {
    layer: usize,
    #[serde(rename = "var_Q")]
    var_q: f64,
    #[serde(rename = "var_P")]
    var_p: f64,
    entropy: f64,
    n_measurements: usize,
}

#[derive(Serialize)]
struct PfRow {
    layer: usize,
    #[serde(rename = "var_Q")]
    var_q: f64,
    #[serde(rename = "var_P")]
    var_p: f64,
    entropy: f64,
    n_measurements: usize,
    #[serde(rename = "var_Q_err")]
    var_q_err: f64,
    #[serde(rename = "var_P_err")]
    var_p_err: f64,
    #[serde(rename = "N_particles")]
    n_particles: usize,
    #[serde(rename = "ESS_min")]
    ess_min: f64,
    resample_count: usize,
    degeneracy_flags: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Series {
    Exact(Vec<LayerStats>),
    Pf(Vec<PfLayerStats>),
}

impl Series {
    fn csv(&self) -> Result<Vec<u8>> {
        match self {
            Series::Exact(rows) => csv_bytes(
                &rows
                    .iter()
                    .map(|s| ExactRow {
                        layer: s.layer,
                        var_q: s.var_q,
                        var_p: s.var_p,
                        entropy: s.entropy,
                        n_measurements: s.n_measurements,
                    })
                    .collect::<Vec<_>>(),
            ),
            Series::Pf(rows) => csv_bytes(
                &rows
                    .iter()
                    .map(|s| PfRow {
                        layer: s.layer,
                        var_q: s.var_q,
                        var_p: s.var_p,
                        entropy: s.entropy,
                        n_measurements: s.n_measurements,
                        var_q_err: s.var_q_err,
                        var_p_err: s.var_p_err,
                        n_particles: s.n_particles,
                        ess_min: s.ess_min,
                        resample_count: s.resample_count,
                        degeneracy_flags: s.degeneracy_flags,
                    })
                    .collect::<Vec<_>>(),
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: u64,
    /// `(master_seed, trajectory_index)` of the trajectory's stream.
    pub stream: (u64, u64),
    pub t_charge: Option<usize>,
    pub t_dipole: Option<usize>,
    pub censored_charge: bool,
    pub censored_dipole: bool,
    pub layers: usize,
    pub degeneracy_flags: usize,
    pub resample_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRun {
    pub summary: TrajectorySummary,
    pub series: Series,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorProfiles {
    pub margin: usize,
    /// Connected charge-density correlator by separation.
    pub charge: Vec<f64>,
    /// Connected dipole-density correlator by separation.
    pub dipole: Vec<f64>,
}

impl CorrelatorProfiles {
    pub fn get(&self, obs: Observable) -> &[f64] {
        match obs {
            Observable::Charge => &self.charge,
            Observable::Dipole => &self.dipole,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub engine: String,
    pub lengths: Vec<usize>,
    pub rate: f64,
    pub horizon: usize,
    pub threshold: f64,
    pub master_seed: u64,
    pub n_trajectories: usize,
    pub sharpening: BTreeMap<String, SharpeningSummary>,
    pub degeneracy_flags: usize,
    pub trajectories: Vec<TrajectorySummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlators: Option<CorrelatorProfiles>,
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub config: RunConfig,
    pub runs: Vec<TrajectoryRun>,
    pub summary: RunSummary,
}

impl EnsembleResult {
    pub fn sharpening_times(&self, obs: Observable) -> Vec<Option<usize>> {
        self.runs
            .iter()
            .map(|r| match obs {
                Observable::Charge => r.summary.t_charge,
                Observable::Dipole => r.summary.t_dipole,
            })
            .collect()
    }
}

type Matrices = Option<(Vec<f64>, Vec<f64>)>;

/// Per-trajectory sum of correlation matrices over the averaging layers.
struct Accumulator {
    enabled: bool,
    from: Option<usize>,
    sums: (Vec<f64>, Vec<f64>),
    count: usize,
}

impl Accumulator {
    fn new(geometry: &LatticeGeometry, enabled: bool, from: Option<usize>) -> Self {
        let nc = Density::Charge.n_points(geometry);
        let nd = Density::Dipole.n_points(geometry);
        let sums = if enabled && from.is_some() {
            (vec![0.0; nc * nc], vec![0.0; nd * nd])
        } else {
            (Vec::new(), Vec::new())
        };
        Self {
            enabled,
            from,
            sums,
            count: 0,
        }
    }

    fn observe<F: FnOnce() -> (Vec<f64>, Vec<f64>)>(&mut self, layer: usize, f: F) {
        if !self.enabled || !self.from.is_some_and(|t| layer >= t) {
            return;
        }
        let (c, d) = f();
        self.sums.0.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        self.sums.1.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
        self.count += 1;
    }

    fn finish<F: FnOnce() -> (Vec<f64>, Vec<f64>)>(self, last: F) -> Matrices {
        if !self.enabled {
            return None;
        }
        if self.count == 0 {
            return Some(last());
        }
        let k = self.count as f64;
        let (mut c, mut d) = self.sums;
        c.iter_mut().for_each(|x| *x /= k);
        d.iter_mut().for_each(|x| *x /= k);
        Some((c, d))
    }
}

fn summary_of(
    index: u64,
    seed: u64,
    sharp: SharpeningTimes,
    layers: usize,
    degens: usize,
    resamples: usize,
) -> TrajectorySummary {
    TrajectorySummary {
        index,
        stream: (seed, index),
        t_charge: sharp.charge,
        t_dipole: sharp.dipole,
        censored_charge: sharp.charge.is_none(),
        censored_dipole: sharp.dipole.is_none(),
        layers,
        degeneracy_flags: degens,
        resample_count: resamples,
    }
}

/// Runs every trajectory of a config in memory.
pub fn run_ensemble(config: &RunConfig) -> Result<EnsembleResult> {
    config.validate()?;
    let geometry = config.geometry()?;
    let params = config.trajectory_params()?;
    let seed = config.run.seed;
    let n = config.run.trajectories;
    let want_corr = config.run.correlators;
    let from = config.run.correlators_from;
    let family = config.gates.family;
    let outputs: Vec<Result<(TrajectoryRun, Matrices)>> = match config.run.engine {
        Engine::Exact => {
            let engine = ExactEngine::new(geometry, family, &config.initial, config.run.basis_cap)?;
            with_jobs(config.run.jobs, || {
                map_indexed(n, |i| {
                    let mut acc = Accumulator::new(&geometry, want_corr, from);
                    let (res, state) =
                        engine.run_trajectory_observed(&params, seed, i as u64, |layer, s| {
                            acc.observe(layer, || {
                                (
                                    connected_matrix(s, Density::Charge),
                                    connected_matrix(s, Density::Dipole),
                                )
                            })
                        })?;
                    let mats = acc.finish(|| {
                        (
                            connected_matrix(&state, Density::Charge),
                            connected_matrix(&state, Density::Dipole),
                        )
                    });
                    let layers = res.series.len() - 1;
                    Ok((
                        TrajectoryRun {
                            summary: summary_of(res.index, seed, res.sharpening, layers, 0, 0),
                            series: Series::Exact(res.series),
                        },
                        mats,
                    ))
                })
            })
        }
        Engine::ParticleFilter(np) => {
            let engine = PfEngine::new(geometry, family, config.initial.clone(), np)?;
            // trajectories run one after another; particles within a layer
            // are spread over the pool
            with_jobs(config.run.jobs, || {
                (0..n)
                    .map(|i| {
                        let mut acc = Accumulator::new(&geometry, want_corr, from);
                        let (res, ens) = engine.run_trajectory_observed(
                            &params,
                            seed,
                            i as u64,
                            |layer, e| {
                                acc.observe(layer, || {
                                    (
                                        e.connected_matrix(Density::Charge),
                                        e.connected_matrix(Density::Dipole),
                                    )
                                })
                            },
                        )?;
                        let mats = acc.finish(|| {
                            (
                                ens.connected_matrix(Density::Charge),
                                ens.connected_matrix(Density::Dipole),
                            )
                        });
                        let degens = res.series.iter().map(|s| s.degeneracy_flags).sum();
                        let resamples = res.series.iter().map(|s| s.resample_count).sum();
                        let layers = res.series.len() - 1;
                        Ok((
                            TrajectoryRun {
                                summary: summary_of(
                                    res.index,
                                    seed,
                                    res.sharpening,
                                    layers,
                                    degens,
                                    resamples,
                                ),
                                series: Series::Pf(res.series),
                            },
                            mats,
                        ))
                    })
                    .collect()
            })
        }
    };
    let mut runs = Vec::with_capacity(n);
    let mut acc: Option<(Vec<f64>, Vec<f64>)> = None;
    for o in outputs {
        let (run, mats) = o?;
        if let Some((c, d)) = mats {
            match acc.as_mut() {
                None => acc = Some((c, d)),
                Some((ac, ad)) => {
                    ac.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
                    ad.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
                }
            }
        }
        runs.push(run);
    }
    let margin = config.run.correlator_margin;
    let correlators = acc.map(|(c, d)| {
        let nc = Density::Charge.n_points(&geometry);
        let nd = Density::Dipole.n_points(&geometry);
        let scale = |v: Vec<f64>| v.into_iter().map(|x| x / n as f64).collect::<Vec<f64>>();
        CorrelatorProfiles {
            margin,
            charge: profile_from_matrix(&scale(c), nc, margin),
            dipole: profile_from_matrix(&scale(d), nd, margin),
        }
    });
    let mut sharpening = BTreeMap::new();
    for (k, &obs) in config.run.observables.iter().enumerate() {
        let times: Vec<Option<usize>> = runs
            .iter()
            .map(|r| match obs {
                Observable::Charge => r.summary.t_charge,
                Observable::Dipole => r.summary.t_dipole,
            })
            .collect();
        let mut rng = stream(seed, u64::MAX, PURPOSE_BOOTSTRAP, k as u64);
        sharpening.insert(
            obs.name().to_string(),
            summarize_sharpening(&times, params.horizon, &mut rng),
        );
    }
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        engine: config.run.engine.to_string(),
        lengths: config.lattice.lengths.clone(),
        rate: config.measurement.rate,
        horizon: params.horizon,
        threshold: params.threshold,
        master_seed: seed,
        n_trajectories: n,
        sharpening,
        degeneracy_flags: runs.iter().map(|r| r.summary.degeneracy_flags).sum(),
        trajectories: runs.iter().map(|r| r.summary.clone()).collect(),
        correlators,
    };
    Ok(EnsembleResult {
        config: config.clone(),
        runs,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub engine: String,
    pub seed_derivation: String,
    pub trajectory_streams: Vec<(u64, u64)>,
    pub wall_clock_seconds: f64,
    pub censored: BTreeMap<String, usize>,
    pub degeneracy_flags: usize,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST: &str = "manifest.json";

fn write_ensemble(result: &EnsembleResult, root: &Path, prefix: &str) -> Result<Vec<FileEntry>> {
    let mut files = Vec::new();
    for r in &result.runs {
        let rel = format!("{prefix}traj_{:05}.csv", r.summary.index);
        files.push(emit(root, &rel, &r.series.csv()?)?);
    }
    files.push(emit(
        root,
        &format!("{prefix}summary.json"),
        &json_bytes(&result.summary)?,
    )?);
    if let Some(c) = &result.summary.correlators {
        #[derive(Serialize)]
        struct Row {
            r: usize,
            charge: Option<f64>,
            dipole: Option<f64>,
        }
        let rows: Vec<Row> = (0..c.charge.len().max(c.dipole.len()))
            .map(|r| Row {
                r,
                charge: c.charge.get(r).copied(),
                dipole: c.dipole.get(r).copied(),
            })
            .collect();
        files.push(emit(
            root,
            &format!("{prefix}correlators.csv"),
            &csv_bytes(&rows)?,
        )?);
    }
    Ok(files)
}

fn manifest_for(
    config: &RunConfig,
    results: &[&EnsembleResult],
    files: Vec<FileEntry>,
    wall: f64,
) -> RunManifest {
    let mut censored = BTreeMap::new();
    for res in results {
        for (k, s) in &res.summary.sharpening {
            *censored.entry(k.clone()).or_insert(0) += s.censored;
        }
    }
    RunManifest {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        master_seed: config.run.seed,
        engine: config.run.engine.to_string(),
        seed_derivation: SEED_DERIVATION.to_string(),
        trajectory_streams: (0..config.run.trajectories as u64)
            .map(|i| (config.run.seed, i))
            .collect(),
        wall_clock_seconds: wall,
        censored,
        degeneracy_flags: results.iter().map(|r| r.summary.degeneracy_flags).sum(),
        files,
    }
}

/// Runs one config and writes trajectory CSVs, `summary.json`, optional
/// `correlators.csv`, and `manifest.json` into `out`.
pub fn simulate(config: &RunConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let result = run_ensemble(config)?;
    let files = write_ensemble(&result, out, "")?;
    let manifest = manifest_for(config, &[&result], files, start.elapsed().as_secs_f64());
    emit(out, MANIFEST, &json_bytes(&manifest)?)?;
    Ok(manifest)
}

/// Reruns the config echoed in a manifest into `out`. Returns the new
/// manifest and the data files whose checksums differ from the original.
pub fn replay_manifest(manifest_path: &Path, out: &Path) -> Result<(RunManifest, Vec<String>)> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", manifest_path.display())))?;
    let old: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad manifest: {e}")))?;
    let is_sweep = old.files.iter().any(|f| f.path == SWEEP_JSON);
    let new = if is_sweep {
        sweep(&old.config, out)?.1
    } else {
        simulate(&old.config, out)?
    };
    let by_path: BTreeMap<&str, &str> = new
        .files
        .iter()
        .map(|f| (f.path.as_str(), f.sha256.as_str()))
        .collect();
    let mismatched = old
        .files
        .iter()
        .filter(|f| by_path.get(f.path.as_str()) != Some(&f.sha256.as_str()))
        .map(|f| f.path.clone())
        .collect();
    Ok((new, mismatched))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub length: usize,
    pub rate: f64,
    pub observable: Observable,
    pub median: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub median_interpolated: f64,
    pub ci_interpolated_lo: f64,
    pub ci_interpolated_hi: f64,
    pub n: usize,
    pub censored: usize,
    pub median_censored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    pub rate: f64,
    pub observable: Observable,
    pub report: FitReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<SweepFit>,
}

pub const SWEEP_JSON: &str = "sweep.json";

/// Fits interpolated median sharpening time against length for every rate and
/// observable with at least four lengths.
pub fn fit_sweep(rows: &[SweepRow]) -> Vec<SweepFit> {
    type Group = (f64, Observable, Vec<f64>, Vec<f64>);
    let mut groups: BTreeMap<(u64, &'static str), Group> = BTreeMap::new();
    for r in rows {
        let e = groups
            .entry((r.rate.to_bits(), r.observable.name()))
            .or_insert((r.rate, r.observable, Vec::new(), Vec::new()));
        e.2.push(r.length as f64);
        e.3.push(r.median_interpolated);
    }
    groups
        .into_values()
        .filter_map(|(rate, observable, xs, ys)| {
            fit_scaling(&xs, &ys, &FitForm::ALL)
                .ok()
                .map(|report| SweepFit {
                    rate,
                    observable,
                    report,
                })
        })
        .collect()
}

/// Runs the config at every (length, rate) point of its `[sweep]` section.
pub fn sweep(config: &RunConfig, out: &Path) -> Result<(SweepReport, RunManifest)> {
    config.validate()?;
    let start = Instant::now();
    let lengths: Vec<Option<usize>> = if config.sweep.lengths.is_empty() {
        vec![None]
    } else {
        config.sweep.lengths.iter().map(|&l| Some(l)).collect()
    };
    let rates: Vec<Option<f64>> = if config.sweep.rates.is_empty() {
        vec![None]
    } else {
        config.sweep.rates.iter().map(|&g| Some(g)).collect()
    };
    let mut rows = Vec::new();
    let mut files = Vec::new();
    let mut results = Vec::new();
    for &g in &rates {
        for &l in &lengths {
            let point = config.with_point(l, g);
            let res = run_ensemble(&point)?;
            let length = point.geometry()?.n_sites();
            let prefix = format!("L{length}_g{}/", point.measurement.rate);
            files.extend(write_ensemble(&res, out, &prefix)?);
            for &obs in &point.run.observables {
                let s = res.summary.sharpening[obs.name()];
                rows.push(SweepRow {
                    length,
                    rate: point.measurement.rate,
                    observable: obs,
                    median: s.median,
                    ci_lo: s.ci.lo,
                    ci_hi: s.ci.hi,
                    median_interpolated: s.median_interpolated,
                    ci_interpolated_lo: s.ci_interpolated.lo,
                    ci_interpolated_hi: s.ci_interpolated.hi,
                    n: s.n,
                    censored: s.censored,
                    median_censored: s.median_censored,
                });
            }
            results.push(res);
        }
    }
    let fits = fit_sweep(&rows);
    files.push(emit(out, "sweep.csv", &csv_bytes(&rows)?)?);
    let report = SweepReport {
        schema_version: SCHEMA_VERSION,
        rows,
        fits,
    };
    files.push(emit(out, SWEEP_JSON, &json_bytes(&report)?)?);
    let refs: Vec<&EnsembleResult> = results.iter().collect();
    let manifest = manifest_for(config, &refs, files, start.elapsed().as_secs_f64());
    emit(out, MANIFEST, &json_bytes(&manifest)?)?;
    Ok((report, manifest))
}
