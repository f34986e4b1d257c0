//! Exact measurement-conditioned diagonal state.
//!
//! A [`ProbState`] stores probabilities over a [`SectorBasis`]: every
//! configuration belonging to the (Q, P) sectors the state was created in.
//! Gates never leave those sectors, so the basis is fixed for the lifetime of
//! a trajectory and kernel applications reduce to block averages over
//! precomputed index lists ([`WindowPlan`]). Iteration is in ascending
//! bit order.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gates::WindowKernel;
use crate::lattice::{Configuration, Dipole, LatticeGeometry, SectorKey, Window};

/// Default cap on the number of sites tracked exactly.
pub const EXACT_MAX_SITES: usize = 24;
/// Default cap on the basis size of an exact state.
pub const EXACT_MAX_BASIS: usize = 1 << 23;

pub const NORM_TOL: f64 = 1e-10;

/// All configurations with `charge` particles, ascending.
pub fn enumerate_charge(
    geometry: &LatticeGeometry,
    charge: u32,
    cap: usize,
) -> Result<Vec<Configuration>> {
    let n = geometry.n_sites();
    if charge as usize > n {
        return Ok(Vec::new());
    }
    let count = binomial(n as u64, charge as u64);
    if count > cap as f64 {
        return Err(Error::EngineOverflow(format!(
            "charge sector Q={charge} on {n} sites has {count:.0} configurations (cap {cap})"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    if charge == 0 {
        out.push(Configuration(0));
        return Ok(out);
    }
    let limit = geometry.full_mask();
    let mut v: u64 = if charge == 64 {
        u64::MAX
    } else {
        (1u64 << charge) - 1
    };
    loop {
        out.push(Configuration(v));
        // Gosper's hack: next integer with the same popcount
        let c = v & v.wrapping_neg();
        let r = v.wrapping_add(c);
        if r == 0 {
            break;
        }
        v = (((r ^ v) >> 2) / c) | r;
        if v > limit || v == 0 {
            break;
        }
    }
    Ok(out)
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug)]
pub struct SectorBasis {
    geometry: LatticeGeometry,
    configs: Vec<Configuration>,
    index: HashMap<Configuration, u32>,
    charge: Vec<u32>,
    dipole: Vec<Dipole>,
    sector_of: Vec<u32>,
    sectors: Vec<SectorKey>,
}

impl SectorBasis {
    /// Basis spanning every configuration whose charge is in `charges`.
    pub fn for_charges(geometry: LatticeGeometry, charges: &[u32], cap: usize) -> Result<Self> {
        check_sites(&geometry)?;
        let set: BTreeSet<u32> = charges.iter().copied().collect();
        let mut configs = Vec::new();
        for &q in &set {
            configs.extend(enumerate_charge(&geometry, q, cap)?);
            if configs.len() > cap {
                return Err(overflow(configs.len(), cap));
            }
        }
        Ok(Self::from_configs(geometry, configs))
    }

    /// Basis spanning every configuration in the given (Q, P) sectors.
    pub fn for_sectors(
        geometry: LatticeGeometry,
        sectors: &BTreeSet<SectorKey>,
        cap: usize,
    ) -> Result<Self> {
        check_sites(&geometry)?;
        let charges: BTreeSet<u32> = sectors.iter().map(|k| k.charge).collect();
        let mut configs = Vec::new();
        for q in charges {
            configs.extend(
                enumerate_charge(&geometry, q, cap)?
                    .into_iter()
                    .filter(|&c| sectors.contains(&geometry.sector_key(c))),
            );
            if configs.len() > cap {
                return Err(overflow(configs.len(), cap));
            }
        }
        Ok(Self::from_configs(geometry, configs))
    }

    fn from_configs(geometry: LatticeGeometry, mut configs: Vec<Configuration>) -> Self {
        configs.sort_unstable();
        let index = configs
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32))
            .collect();
        let charge = configs.iter().map(|c| c.charge()).collect();
        let dipole: Vec<Dipole> = configs.iter().map(|&c| geometry.dipole(c)).collect();
        let mut sector_ids: HashMap<SectorKey, u32> = HashMap::new();
        let keys: BTreeSet<SectorKey> = configs.iter().map(|&c| geometry.sector_key(c)).collect();
        let sectors: Vec<SectorKey> = keys.into_iter().collect();
        for (i, k) in sectors.iter().enumerate() {
            sector_ids.insert(*k, i as u32);
        }
        let sector_of = configs
            .iter()
            .map(|&c| sector_ids[&geometry.sector_key(c)])
            .collect();
        Self {
            geometry,
            configs,
            index,
            charge,
            dipole,
            sector_of,
            sectors,
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn index_of(&self, c: Configuration) -> Option<usize> {
        self.index.get(&c).map(|&i| i as usize)
    }

    pub fn charges(&self) -> &[u32] {
        &self.charge
    }

    pub fn dipoles(&self) -> &[Dipole] {
        &self.dipole
    }

    pub fn sector_ids(&self) -> &[u32] {
        &self.sector_of
    }

    pub fn sectors(&self) -> &[SectorKey] {
        &self.sectors
    }
}

fn check_sites(geometry: &LatticeGeometry) -> Result<()> {
    if geometry.n_sites() > EXACT_MAX_SITES {
        return Err(Error::EngineOverflow(format!(
            "{} sites exceeds the exact-mode limit of {EXACT_MAX_SITES}",
            geometry.n_sites()
        )));
    }
    Ok(())
}

fn overflow(len: usize, cap: usize) -> Error {
    Error::EngineOverflow(format!("basis of {len} configurations exceeds cap {cap}"))
}

#[derive(Clone, Debug)]
pub struct ProbState {
    basis: Arc<SectorBasis>,
    probs: Vec<f64>,
}

impl ProbState {
    pub fn new(basis: Arc<SectorBasis>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != basis.len() {
            return Err(Error::InvalidState(
                "probability vector does not match basis".into(),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidState(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let mut s = Self { basis, probs };
        s.renormalize()?;
        Ok(s)
    }

    /// Distribution with the given (unnormalized) weights; the basis spans the
    /// sectors of the weighted configurations.
    pub fn from_weights<I>(geometry: LatticeGeometry, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Configuration, f64)>,
    {
        let weights: Vec<(Configuration, f64)> = weights.into_iter().collect();
        if weights
            .iter()
            .any(|(c, _)| c.bits() & !geometry.full_mask() != 0)
        {
            return Err(Error::InvalidState(
                "configuration has bits outside the lattice".into(),
            ));
        }
        let sectors: BTreeSet<SectorKey> = weights
            .iter()
            .map(|&(c, _)| geometry.sector_key(c))
            .collect();
        let basis = Arc::new(SectorBasis::for_sectors(
            geometry,
            &sectors,
            EXACT_MAX_BASIS,
        )?);
        let mut probs = vec![0.0; basis.len()];
        for (c, w) in weights {
            let i = basis
                .index_of(c)
                .expect("configuration lies in its own sector");
            probs[i] += w;
        }
        Self::new(basis, probs)
    }

    pub fn delta(geometry: LatticeGeometry, c: Configuration) -> Result<Self> {
        Self::from_weights(geometry, [(c, 1.0)])
    }

    pub fn uniform(geometry: LatticeGeometry, configs: &[Configuration]) -> Result<Self> {
        Self::from_weights(geometry, configs.iter().map(|&c| (c, 1.0)))
    }

    /// Uniform over every configuration with charge in `charges`.
    pub fn uniform_over_charges(
        geometry: LatticeGeometry,
        charges: &[u32],
        cap: usize,
    ) -> Result<Self> {
        let basis = Arc::new(SectorBasis::for_charges(geometry, charges, cap)?);
        if basis.is_empty() {
            return Err(Error::EmptySector);
        }
        let p = 1.0 / basis.len() as f64;
        Ok(Self {
            probs: vec![p; basis.len()],
            basis,
        })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        self.basis.geometry()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub(crate) fn probs_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= NORM_TOL
    }

    pub fn check_normalized(&self) -> Result<()> {
        let t = self.total();
        if (t - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(t));
        }
        Ok(())
    }

    pub fn renormalize(&mut self) -> Result<()> {
        let t = self.total();
        if !(t > 0.0) {
            return Err(Error::ImpossibleOutcome);
        }
        let inv = 1.0 / t;
        self.probs.iter_mut().for_each(|p| *p *= inv);
        Ok(())
    }

    pub fn probability(&self, c: Configuration) -> f64 {
        self.basis.index_of(c).map_or(0.0, |i| self.probs[i])
    }

    /// Configurations with nonzero probability, ascending.
    pub fn iter(&self) -> impl Iterator<Item = (Configuration, f64)> + '_ {
        self.basis
            .configs()
            .iter()
            .zip(&self.probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&c, &p)| (c, p))
    }

    pub fn support_len(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// Sectors carrying nonzero probability.
    pub fn support_sectors(&self) -> BTreeSet<SectorKey> {
        let geom = *self.geometry();
        self.iter().map(|(c, _)| geom.sector_key(c)).collect()
    }

    /// Samples a configuration from the distribution.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let u: f64 = rng.random::<f64>() * self.total();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = i;
                if u < acc {
                    return self.basis.configs()[i];
                }
            }
        }
        self.basis.configs()[last]
    }

    pub fn apply_plan(&mut self, plan: &WindowPlan) {
        plan.apply(&mut self.probs);
    }
}

/// Orbits of the basis under one window's uniform mixing, restricted to
/// orbits of size > 1.
#[derive(Clone, Debug)]
pub struct WindowPlan {
    window: Window,
    offsets: Vec<u32>,
    members: Vec<u32>,
}

impl WindowPlan {
    pub fn build(basis: &SectorBasis, kernel: &WindowKernel, window: Window) -> Self {
        let mut visited = vec![false; basis.len()];
        let mut offsets = vec![0u32];
        let mut members = Vec::new();
        for (i, &c) in basis.configs().iter().enumerate() {
            if visited[i] {
                continue;
            }
            let comp = kernel.component(window.pack(c));
            if comp.len() == 1 {
                visited[i] = true;
                continue;
            }
            for &m in comp {
                let j = basis
                    .index_of(window.unpack_into(c, m))
                    .expect("gate moves stay inside the basis sectors");
                visited[j] = true;
                members.push(j as u32);
            }
            offsets.push(members.len() as u32);
        }
        Self {
            window,
            offsets,
            members,
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn n_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn apply(&self, probs: &mut [f64]) {
        for b in self.offsets.windows(2) {
            let block = &self.members[b[0] as usize..b[1] as usize];
            let mean = block.iter().map(|&j| probs[j as usize]).sum::<f64>() / block.len() as f64;
            for &j in block {
                probs[j as usize] = mean;
            }
        }
    }
}

/// One averaged gate on `window`: each configuration's probability is spread
/// uniformly over the window component of its restriction.
pub fn kernel_apply(state: &ProbState, kernel: &WindowKernel, window: Window) -> Result<ProbState> {
    state.check_normalized()?;
    let plan = WindowPlan::build(&state.basis, kernel, window);
    let mut out = state.clone();
    out.apply_plan(&plan);
    Ok(out)
}
