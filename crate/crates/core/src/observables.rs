//! Conditional-state observables: conserved-quantity variances, sector
//! entropy, connected density correlators and Rényi-2 correlators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Configuration, LatticeGeometry};
use crate::state::ProbState;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Charge,
    Dipole,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Charge => "charge",
            Observable::Dipole => "dipole",
        }
    }
}

pub fn mean_charge(state: &ProbState) -> f64 {
    state
        .basis()
        .charges()
        .iter()
        .zip(state.probs())
        .map(|(&q, &p)| p * q as f64)
        .sum()
}

pub fn charge_variance(state: &ProbState) -> f64 {
    let charges = state.basis().charges();
    let probs = state.probs();
    let mean = mean_charge(state);
    charges
        .iter()
        .zip(probs)
        .map(|(&q, &p)| {
            let d = q as f64 - mean;
            p * d * d
        })
        .sum()
}

/// Posterior variance of each dipole component; `[var_x, var_y]`.
pub fn dipole_variance(state: &ProbState) -> [f64; 2] {
    let dip = state.basis().dipoles();
    let probs = state.probs();
    let (mut mx, mut my) = (0.0, 0.0);
    for (d, &p) in dip.iter().zip(probs) {
        mx += p * d.x as f64;
        my += p * d.y as f64;
    }
    let (mut vx, mut vy) = (0.0, 0.0);
    for (d, &p) in dip.iter().zip(probs) {
        let (dx, dy) = (d.x as f64 - mx, d.y as f64 - my);
        vx += p * dx * dx;
        vy += p * dy * dy;
    }
    [vx, vy]
}

/// Variance of the requested conserved quantity; the dipole variance is the
/// sum over axes.
pub fn variance(state: &ProbState, obs: Observable) -> f64 {
    match obs {
        Observable::Charge => charge_variance(state),
        Observable::Dipole => {
            let [vx, vy] = dipole_variance(state);
            vx + vy
        }
    }
}

/// Shannon entropy (nats) of the posterior over (Q, P) sectors.
pub fn sector_entropy(state: &ProbState) -> f64 {
    let basis = state.basis();
    let mut mass = vec![0.0; basis.sectors().len()];
    for (&s, &p) in basis.sector_ids().iter().zip(state.probs()) {
        mass[s as usize] += p;
    }
    -mass
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| m * m.ln())
        .sum::<f64>()
        + 0.0
}

/// Local densities entering the connected correlators.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Density {
    /// Site occupation `n_x`.
    Charge,
    /// Bond dipole density `h_b = Σ_{x ≤ b} n_x` along a row, for bonds
    /// `b = 0 .. lx - 2`; its lattice derivative is the charge density.
    Dipole,
}

impl Density {
    pub fn n_points(self, geometry: &LatticeGeometry) -> usize {
        match self {
            Density::Charge => geometry.n_sites(),
            Density::Dipole => geometry.lx().saturating_sub(1) * geometry.ly(),
        }
    }

    /// Fills `out[i]` with the density at point `i` for configuration `c`.
    pub fn evaluate(self, geometry: &LatticeGeometry, c: Configuration, out: &mut [f64]) {
        match self {
            Density::Charge => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = c.occupation(i) as f64;
                }
            }
            Density::Dipole => {
                let lx = geometry.lx();
                for y in 0..geometry.ly() {
                    let mut acc = 0.0;
                    for b in 0..lx - 1 {
                        acc += c.occupation(geometry.site(b, y)) as f64;
                        out[y * (lx - 1) + b] = acc;
                    }
                }
            }
        }
    }
}

/// Full connected covariance matrix `⟨a_i a_j⟩ − ⟨a_i⟩⟨a_j⟩` of a density in
/// one conditional state, row-major.
pub fn connected_matrix(state: &ProbState, density: Density) -> Vec<f64> {
    let geom = *state.geometry();
    let n = density.n_points(&geom);
    let mut mean = vec![0.0; n];
    let mut second = vec![0.0; n * n];
    let mut buf = vec![0.0; n];
    for (c, p) in state.iter() {
        density.evaluate(&geom, c, &mut buf);
        for i in 0..n {
            let pi = p * buf[i];
            if pi == 0.0 {
                continue;
            }
            mean[i] += pi;
            let row = &mut second[i * n..(i + 1) * n];
            for (r, &b) in row.iter_mut().zip(&buf) {
                *r += pi * b;
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

/// Record average of the conditional connected correlator of `density`
/// between points `x` and `y`.
pub fn connected_density_correlator(
    states: &[ProbState],
    density: Density,
    x: usize,
    y: usize,
) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    let sum: f64 = states
        .iter()
        .map(|s| {
            let geom = *s.geometry();
            let n = density.n_points(&geom);
            let mut buf = vec![0.0; n];
            let (mut mx, mut my, mut mxy) = (0.0, 0.0, 0.0);
            for (c, p) in s.iter() {
                density.evaluate(&geom, c, &mut buf);
                mx += p * buf[x];
                my += p * buf[y];
                mxy += p * buf[x] * buf[y];
            }
            mxy - mx * my
        })
        .sum();
    sum / states.len() as f64
}

/// Record- and translation-averaged connected correlator of a 1D density as
/// a function of separation `r = 0 .. n_points - 1`. Pairs are restricted to
/// points at least `margin` from either end.
pub fn correlator_profile(states: &[ProbState], density: Density, margin: usize) -> Vec<f64> {
    let Some(first) = states.first() else {
        return Vec::new();
    };
    let n = density.n_points(first.geometry());
    let mut avg = vec![0.0; n * n];
    for s in states {
        for (a, m) in avg.iter_mut().zip(connected_matrix(s, density)) {
            *a += m;
        }
    }
    avg.iter_mut().for_each(|a| *a /= states.len() as f64);
    profile_from_matrix(&avg, n, margin)
}

/// Translation average of an `n × n` correlation matrix over pairs at
/// least `margin` from either end, indexed by separation.
pub fn profile_from_matrix(m: &[f64], n: usize, margin: usize) -> Vec<f64> {
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for i in margin..n.saturating_sub(margin) {
        for j in i..n.saturating_sub(margin) {
            sums[j - i] += m[i * n + j];
            counts[j - i] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect()
}

/// `b_x† b_y` on a hardcore configuration: moves a particle from `y` to `x`.
pub fn charge_move(c: Configuration, x: usize, y: usize) -> Option<Configuration> {
    if !c.occupied(y) {
        return None;
    }
    let c = c.with_site(y, false);
    if c.occupied(x) {
        return None;
    }
    Some(c.with_site(x, true))
}

/// `(b_x† b_{x+1})(b_{y+1}† b_y)`: creates a unit dipole on bond `y` and
/// removes one from bond `x`. Bonds are labelled by their left site.
pub fn dipole_move(
    geometry: &LatticeGeometry,
    c: Configuration,
    x: usize,
    y: usize,
) -> Option<Configuration> {
    let right = |s: usize| {
        let (sx, sy) = geometry.coords(s);
        (sx + 1 < geometry.lx()).then(|| geometry.site(sx + 1, sy))
    };
    let (xr, yr) = (right(x)?, right(y)?);
    let c = charge_move(c, yr, y)?;
    charge_move(c, x, xr)
}

fn renyi2_with<F>(state: &ProbState, map: F) -> f64
where
    F: Fn(Configuration) -> Option<Configuration>,
{
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, p) in state.iter() {
        den += p * p;
        if let Some(d) = map(c) {
            num += p * state.probability(d);
        }
    }
    num / den
}

/// `Tr(ρ A ρ A†) / Tr ρ²` with `A = b_x† b_y` on the diagonal state.
pub fn renyi2_charge(state: &ProbState, x: usize, y: usize) -> Result<f64> {
    let n = state.geometry().n_sites();
    if x == y {
        return Err(Error::Parameter("Rényi-2 correlator needs x != y".into()));
    }
    if x >= n || y >= n {
        return Err(Error::Parameter(format!("site out of range ({x}, {y})")));
    }
    Ok(renyi2_with(state, |c| charge_move(c, x, y)))
}

/// Same with the bond dipole operators on bonds `x` and `y`.
pub fn renyi2_dipole(state: &ProbState, x: usize, y: usize) -> Result<f64> {
    let geom = *state.geometry();
    if x == y {
        return Err(Error::Parameter("Rényi-2 correlator needs x != y".into()));
    }
    for b in [x, y] {
        if b >= geom.n_sites() || geom.coords(b).0 + 1 >= geom.lx() {
            return Err(Error::Parameter(format!("bond {b} has no right neighbour")));
        }
    }
    Ok(renyi2_with(state, |c| dipole_move(&geom, c, x, y)))
}

pub fn renyi2(state: &ProbState, obs: Observable, x: usize, y: usize) -> Result<f64> {
    match obs {
        Observable::Charge => renyi2_charge(state, x, y),
        Observable::Dipole => renyi2_dipole(state, x, y),
    }
}

/// Record average of a Rényi-2 correlator.
pub fn renyi2_average(states: &[ProbState], obs: Observable, x: usize, y: usize) -> Result<f64> {
    let mut acc = 0.0;
    for s in states {
        acc += renyi2(s, obs, x, y)?;
    }
    Ok(acc / states.len().max(1) as f64)
}
