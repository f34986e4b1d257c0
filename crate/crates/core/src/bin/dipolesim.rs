use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use dipolesim::connectivity::connectivity_by_dipole;
use dipolesim::gates::{GateFamily, WindowKernel};
use dipolesim::harness::{self, compare_theory, Engine, Profile, RunConfig};
use dipolesim::lattice::LatticeGeometry;
use dipolesim::observables::Observable;
use dipolesim::state::EXACT_MAX_BASIS;
use dipolesim::theory::{self, exponent_table, Growth, Phase, TheoryParams};
use dipolesim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dipolesim",
    version,
    about = "Monitored dipole-conserving circuit simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `exact` or `pf:N` (overrides the config).
    #[arg(long)]
    engine: Option<Engine>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one ensemble.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Rerun the config echoed in a manifest and compare checksums.
        #[arg(long, conflicts_with = "config")]
        replay: Option<PathBuf>,
    },
    /// Run the ensemble at every length and rate of the `[sweep]` section.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Window component table and global sector connectivity.
    Sectors {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        /// Chain length used when no config is given.
        #[arg(long, default_value_t = 10)]
        length: usize,
        /// Charge of the probed sectors; defaults to half filling.
        #[arg(long)]
        charge: Option<u32>,
    },
    /// Luttinger parameter, critical rate, correlator profiles and exponent tables.
    Theory {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10.0)]
        r_min: f64,
        #[arg(long, default_value_t = 100.0)]
        r_max: f64,
        #[arg(long, default_value_t = 24)]
        points: usize,
        /// Time separation of the correlator profiles.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
    /// Compare simulated correlator profiles against theory.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Output directory of a `simulate` run with correlators enabled.
        #[arg(long)]
        sim: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        r_min: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        r_max: f64,
        #[arg(long, default_value_t = 0.5)]
        tolerance: f64,
    },
}

#[derive(Copy, Clone, clap::ValueEnum)]
enum FamilyArg {
    MinimalPair,
    FullMixing,
}

impl From<FamilyArg> for GateFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::MinimalPair => GateFamily::MinimalPair,
            FamilyArg::FullMixing => GateFamily::FullMixing,
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = RunConfig::load_unvalidated(path)?;
    if let Some(s) = common.seed {
        config.run.seed = s;
    }
    if let Some(o) = &common.out {
        config.run.out = o.to_string_lossy().into_owned();
    }
    if let Some(e) = common.engine {
        config.run.engine = e;
    }
    if let Some(j) = common.jobs {
        config.run.jobs = j;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(common: &Common, fallback: &str) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(fallback))
}

/// Theory parameters from a config file's `[theory]` table, if any.
fn theory_params(common: &Common) -> Result<TheoryParams> {
    #[derive(Deserialize)]
    struct TheoryOnly {
        #[serde(default)]
        theory: Option<TheoryParams>,
    }
    let Some(path) = &common.config else {
        return Ok(TheoryParams::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let t: TheoryOnly = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let p = t.theory.unwrap_or_default();
    p.validate()?;
    Ok(p)
}

fn write_csv<S: Serialize>(dir: &Path, name: &str, rows: &[S]) -> Result<PathBuf> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    let path = dir.join(name);
    harness::write_atomic(&path, &bytes)?;
    Ok(path)
}

fn simulate(common: &Common, replay: Option<&Path>) -> Result<()> {
    if let Some(m) = replay {
        let out = out_dir(common, "replay");
        let (_, mismatched) = harness::replay_manifest(m, &out)?;
        if mismatched.is_empty() {
            println!("replay reproduced every file into {}", out.display());
            return Ok(());
        }
        for f in &mismatched {
            println!("checksum mismatch: {f}");
        }
        return Err(Error::InvalidState(format!(
            "{} files differ from the manifest",
            mismatched.len()
        )));
    }
    let config = load_config(common)?;
    let manifest = harness::simulate(&config, Path::new(&config.run.out))?;
    println!(
        "{} trajectories ({}) written to {} in {:.2}s",
        config.run.trajectories, manifest.engine, config.run.out, manifest.wall_clock_seconds
    );
    for (obs, n) in &manifest.censored {
        if *n > 0 {
            println!("{obs}: {n} trajectories censored at the horizon");
        }
    }
    Ok(())
}

fn sweep(common: &Common) -> Result<()> {
    let config = load_config(common)?;
    let (report, _) = harness::sweep(&config, Path::new(&config.run.out))?;
    for r in &report.rows {
        println!(
            "L={:<3} rate={:<6} {:<6} median t#={:>7.1} [{:.1}, {:.1}] interpolated {:.2} [{:.2}, {:.2}]{}",
            r.length,
            r.rate,
            r.observable.name(),
            r.median,
            r.ci_lo,
            r.ci_hi,
            r.median_interpolated,
            r.ci_interpolated_lo,
            r.ci_interpolated_hi,
            if r.median_censored { " (censored)" } else { "" }
        );
    }
    for f in &report.fits {
        println!(
            "rate={} {}: best form {}",
            f.rate,
            f.observable.name(),
            f.report.best
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct WindowRow {
    window_state: String,
    #[serde(rename = "Q")]
    q: u32,
    #[serde(rename = "P")]
    p: i64,
    component_id: usize,
    component_size: usize,
}

#[derive(Serialize)]
struct SectorRow {
    #[serde(rename = "L")]
    length: String,
    #[serde(rename = "Q")]
    q: u32,
    #[serde(rename = "P")]
    p: String,
    sector_size: usize,
    n_components: usize,
    component_sizes: String,
}

fn sectors(
    common: &Common,
    family: Option<FamilyArg>,
    length: usize,
    charge: Option<u32>,
) -> Result<()> {
    let (geometry, mut fam) = match &common.config {
        Some(_) => {
            let c = load_config(common)?;
            (c.geometry()?, c.gates.family)
        }
        None => (LatticeGeometry::chain(length)?, GateFamily::default()),
    };
    if let Some(f) = family {
        fam = f.into();
    }
    let out = out_dir(common, "out");
    let kernel = WindowKernel::new(fam);
    let rows: Vec<WindowRow> = kernel
        .table()
        .into_iter()
        .map(|r| WindowRow {
            window_state: format!("{:05b}", r.window_state).chars().rev().collect(),
            q: r.charge,
            p: r.dipole,
            component_id: r.component_id,
            component_size: r.component_size,
        })
        .collect();
    write_csv(&out, "window_components.csv", &rows)?;
    let q = charge.unwrap_or(geometry.n_sites() as u32 / 2);
    let reports = connectivity_by_dipole(&geometry, q, fam, EXACT_MAX_BASIS)?;
    let dims = geometry
        .lengths()
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join("x");
    let rows: Vec<SectorRow> = reports
        .iter()
        .map(|r| SectorRow {
            length: dims.clone(),
            q: r.sector.charge,
            p: geometry.format_dipole(r.sector.dipole),
            sector_size: r.sector_size,
            n_components: r.n_components(),
            component_sizes: r
                .component_sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        })
        .collect();
    write_csv(&out, "sector_connectivity.csv", &rows)?;
    let split: Vec<&SectorRow> = rows.iter().filter(|r| r.n_components > 1).collect();
    println!(
        "{} sectors at Q={q}; {} disconnected",
        rows.len(),
        split.len()
    );
    for r in split {
        println!(
            "  P={} size {} components {}",
            r.p, r.sector_size, r.component_sizes
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct KRow {
    gamma: f64,
    j: f64,
    e_b: f64,
    k: f64,
}

#[derive(Serialize)]
struct CriticalRow {
    j: f64,
    e_b: f64,
    gamma_c: f64,
}

#[derive(Serialize)]
struct ProfileRow {
    r: f64,
    t: f64,
    charge: f64,
    charge_change: f64,
    dipole: f64,
    dipole_change: f64,
}

#[derive(Serialize)]
struct ExponentRow {
    dim: usize,
    phase: String,
    observable: String,
    variance: String,
    typical_time: String,
    sharpening: String,
}

fn growth(g: Option<Growth>) -> String {
    match g {
        None => "none".into(),
        Some(Growth::Log) => "log".into(),
        Some(Growth::Power(a)) => format!("power:{a}"),
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn theory_cmd(common: &Common, r_min: f64, r_max: f64, points: usize, time: f64) -> Result<()> {
    let params = theory_params(common)?;
    let out = out_dir(common, "out");
    let ks = log_grid(1e-2, 1e2, 41)
        .into_iter()
        .map(|g| {
            Ok(KRow {
                gamma: g,
                j: params.j,
                e_b: params.e_b,
                k: theory::luttinger_k_at(g, params.j, params.e_b)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(&out, "luttinger.csv", &ks)?;
    let mut pairs = vec![
        (params.j, params.e_b),
        (16.0 / 9.0, 0.0),
        (1.0, 0.5),
        (4.0, 1.0),
    ];
    pairs.dedup();
    let crit = pairs
        .into_iter()
        .map(|(j, e_b)| {
            Ok(CriticalRow {
                j,
                e_b,
                gamma_c: theory::gamma_critical(j, e_b)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(&out, "gamma_critical.csv", &crit)?;
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(Error::Parameter(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    let rs = log_grid(r_min, r_max, points);
    let charge = theory::density_profile(&rs, time, &params, Observable::Charge)?;
    let dipole = theory::density_profile(&rs, time, &params, Observable::Dipole)?;
    let rows: Vec<ProfileRow> = rs
        .iter()
        .zip(charge.iter().zip(&dipole))
        .map(|(&r, (c, d))| ProfileRow {
            r,
            t: time,
            charge: c.value,
            charge_change: c.change,
            dipole: d.value,
            dipole_change: d.change,
        })
        .collect();
    write_csv(&out, "correlator_profiles.csv", &rows)?;
    let mut table = Vec::new();
    for dim in [1, 2] {
        for phase in [Phase::WeakWeak, Phase::SharpWeak, Phase::SharpSharp] {
            let Ok(t) = exponent_table(phase, dim) else {
                continue;
            };
            for obs in [Observable::Charge, Observable::Dipole] {
                let laws = t.get(obs);
                table.push(ExponentRow {
                    dim,
                    phase: phase.to_string(),
                    observable: obs.name().into(),
                    variance: laws
                        .variance
                        .map(|v| match v.decay {
                            theory::Decay::Algebraic => format!("l^{} t^{}", v.ell, v.t),
                            theory::Decay::Exponential => format!("l^{} exp(-sqrt(m_d) t)", v.ell),
                        })
                        .unwrap_or_else(|| "none".into()),
                    typical_time: growth(laws.typical_time),
                    sharpening: growth(Some(laws.sharpening)),
                });
            }
        }
    }
    write_csv(&out, "exponents.csv", &table)?;
    println!(
        "K(gamma={}) = {:.6}; gamma_c = {:.6}; tables written to {}",
        params.gamma,
        theory::luttinger_k(&params)?,
        theory::gamma_critical(params.j, params.e_b)?,
        out.display()
    );
    Ok(())
}

fn compare(common: &Common, sim: &Path, r_min: f64, r_max: f64, tolerance: f64) -> Result<()> {
    let params = theory_params(common)?;
    let text = std::fs::read_to_string(sim.join("summary.json"))
        .map_err(|e| Error::Config(format!("cannot read summary in {}: {e}", sim.display())))?;
    let summary: harness::RunSummary = serde_json::from_str(&text)?;
    let corr = summary.correlators.ok_or_else(|| {
        Error::Config("simulation has no correlators; set run.correlators = true".into())
    })?;
    let mut rows = Vec::new();
    for obs in [Observable::Dipole, Observable::Charge] {
        let sim_profile = Profile {
            observable: obs,
            points: corr
                .get(obs)
                .iter()
                .enumerate()
                .map(|(r, &y)| (r as f64, y))
                .collect(),
        }
        .window(r_min.max(1.0), r_max);
        let rs: Vec<f64> = sim_profile.points.iter().map(|p| p.0).collect();
        let values = theory::density_profile(&rs, 0.0, &params, obs)?;
        let th = Profile {
            observable: obs,
            points: rs.iter().zip(&values).map(|(&r, v)| (r, v.value)).collect(),
        };
        let row = compare_theory(&sim_profile, &th, tolerance)?;
        println!(
            "{:<6} sim {} {:.3} ± {:.3}  theory {} {:.3}  {}",
            obs.name(),
            row.sim.form,
            row.sim.exponent,
            row.sim.error,
            row.theory.form,
            row.theory.exponent,
            if row.pass { "pass" } else { "fail" }
        );
        rows.push(row);
    }
    let out = out_dir(common, "out");
    harness::write_atomic(
        &out.join("comparison.json"),
        &serde_json::to_vec_pretty(&rows)?,
    )?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, replay } => simulate(&common, replay.as_deref()),
        Command::Sweep { common } => sweep(&common),
        Command::Sectors {
            common,
            family,
            length,
            charge,
        } => sectors(&common, family, length, charge),
        Command::Theory {
            common,
            r_min,
            r_max,
            points,
            time,
        } => theory_cmd(&common, r_min, r_max, points, time),
        Command::Compare {
            common,
            sim,
            r_min,
            r_max,
            tolerance,
        } => compare(&common, &sim, r_min, r_max, tolerance),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
