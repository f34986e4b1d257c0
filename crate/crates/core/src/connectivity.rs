//! Connectivity of a global (Q, P) sector under every scheduled gate window.
//!
//! Used to probe whether range-5 gates leave disconnected Krylov subspaces
//! inside a fixed charge-dipole sector.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gates::{GateFamily, WindowKernel};
use crate::lattice::{Configuration, LatticeGeometry, SectorKey};
use crate::schedule::BrickworkSchedule;
use crate::state::enumerate_charge;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub sector: SectorKey,
    pub sector_size: usize,
    /// Component sizes, largest first.
    pub component_sizes: Vec<usize>,
}

impl ConnectivityReport {
    pub fn n_components(&self) -> usize {
        self.component_sizes.len()
    }

    pub fn is_connected(&self) -> bool {
        self.component_sizes.len() == 1
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let p = self.parent[a as usize];
            self.parent[a as usize] = self.parent[p as usize];
            a = p;
        }
        a
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

pub fn global_connectivity(
    geometry: &LatticeGeometry,
    sector: SectorKey,
    family: GateFamily,
    cap: usize,
) -> Result<ConnectivityReport> {
    let configs: Vec<Configuration> = enumerate_charge(geometry, sector.charge, cap)?
        .into_iter()
        .filter(|&c| geometry.dipole(c) == sector.dipole)
        .collect();
    if configs.is_empty() {
        return Err(Error::EmptySector);
    }
    let index: HashMap<Configuration, u32> = configs
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i as u32))
        .collect();
    let kernel = WindowKernel::new(family);
    let schedule = BrickworkSchedule::new(*geometry);
    let mut uf = UnionFind::new(configs.len());
    for window in schedule.all_windows() {
        for (i, &c) in configs.iter().enumerate() {
            let w = window.pack(c);
            for &m in kernel.component(w) {
                if m != w {
                    let j = index[&window.unpack_into(c, m)];
                    uf.union(i as u32, j);
                }
            }
        }
    }
    let mut sizes: HashMap<u32, usize> = HashMap::new();
    for i in 0..configs.len() as u32 {
        *sizes.entry(uf.find(i)).or_default() += 1;
    }
    let mut component_sizes: Vec<usize> = sizes.into_values().collect();
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(ConnectivityReport {
        sector,
        sector_size: configs.len(),
        component_sizes,
    })
}

/// Reports for every dipole value at fixed charge.
pub fn connectivity_by_dipole(
    geometry: &LatticeGeometry,
    charge: u32,
    family: GateFamily,
    cap: usize,
) -> Result<Vec<ConnectivityReport>> {
    let mut keys: Vec<SectorKey> = enumerate_charge(geometry, charge, cap)?
        .into_iter()
        .map(|c| geometry.sector_key(c))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|k| global_connectivity(geometry, k, family, cap))
        .collect()
}
