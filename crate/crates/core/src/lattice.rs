//! Lattice geometry, occupation bitstrings, and the conserved charge and
//! dipole moment.
//!
//! Sites are numbered from 0. On a 2D grid the numbering is row-major,
//! `site = y * lx + x`, and site coordinates are `(x, y)`. Occupations are
//! hardcore (`n ∈ {0, 1}`) and stored one bit per site, site 0 being the
//! least significant bit. Boundaries are always open.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of sites a [`Configuration`] can hold.
pub const MAX_SITES: usize = 64;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeGeometry {
    lx: usize,
    /// `None` for a 1D chain.
    ly: Option<usize>,
}

impl LatticeGeometry {
    /// Builds a chain (`lengths = [L]`) or a grid (`lengths = [Lx, Ly]`).
    pub fn new(lengths: &[usize], boundary: Boundary) -> Result<Self> {
        if boundary == Boundary::Periodic {
            return Err(Error::PeriodicBoundary);
        }
        let geom = match *lengths {
            [l] => Self { lx: l, ly: None },
            [lx, ly] => Self { lx, ly: Some(ly) },
            _ => {
                return Err(Error::Geometry(format!(
                    "expected 1 or 2 axis lengths, got {}",
                    lengths.len()
                )))
            }
        };
        if lengths.contains(&0) {
            return Err(Error::Geometry("axis length must be positive".into()));
        }
        if geom.n_sites() > MAX_SITES {
            return Err(Error::Geometry(format!(
                "{} sites exceeds the {MAX_SITES}-site limit",
                geom.n_sites()
            )));
        }
        Ok(geom)
    }

    pub fn chain(len: usize) -> Result<Self> {
        Self::new(&[len], Boundary::Open)
    }

    pub fn grid(lx: usize, ly: usize) -> Result<Self> {
        Self::new(&[lx, ly], Boundary::Open)
    }

    pub fn dim(&self) -> usize {
        if self.ly.is_some() {
            2
        } else {
            1
        }
    }

    pub fn lengths(&self) -> Vec<usize> {
        match self.ly {
            Some(ly) => vec![self.lx, ly],
            None => vec![self.lx],
        }
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly.unwrap_or(1)
    }

    pub fn axis_len(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.lx,
            Axis::Y => self.ly(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.lx * self.ly()
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.lx, site / self.lx)
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        y * self.lx + x
    }

    /// Mask with one bit set per lattice site.
    pub fn full_mask(&self) -> u64 {
        if self.n_sites() == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_sites()) - 1
        }
    }

    pub fn charge(&self, c: Configuration) -> u32 {
        c.charge()
    }

    /// Coordinate-weighted occupation sum. The `y` component is zero in 1D.
    pub fn dipole(&self, c: Configuration) -> Dipole {
        let mut d = Dipole::default();
        let mut bits = c.bits();
        while bits != 0 {
            let site = bits.trailing_zeros() as usize;
            let (x, y) = self.coords(site);
            d.x += x as i64;
            d.y += y as i64;
            bits &= bits - 1;
        }
        d
    }

    pub fn sector_key(&self, c: Configuration) -> SectorKey {
        SectorKey {
            charge: c.charge(),
            dipole: self.dipole(c),
        }
    }

    /// A window of `len` consecutive sites along `axis` starting at `(x, y)`.
    pub fn window(&self, axis: Axis, x: usize, y: usize, len: usize) -> Result<Window> {
        if len == 0 || len > MAX_WINDOW {
            return Err(Error::Window(format!(
                "window length {len} not in 1..={MAX_WINDOW}"
            )));
        }
        if x >= self.lx || y >= self.ly() {
            return Err(Error::Window(format!("start ({x}, {y}) outside lattice")));
        }
        let (along, stride) = match axis {
            Axis::X => (x, 1),
            Axis::Y => (y, self.lx),
        };
        if along + len > self.axis_len(axis) {
            return Err(Error::Window(format!(
                "window of {len} sites from ({x}, {y}) along {axis:?} leaves the lattice"
            )));
        }
        Ok(Window {
            start: self.site(x, y),
            stride,
            len,
        })
    }

    /// Parses a 0/1 string (site 0 first).
    pub fn parse_config(&self, s: &str) -> Result<Configuration> {
        let s = s.trim();
        if s.len() != self.n_sites() {
            return Err(Error::InvalidState(format!(
                "expected {} sites, got {}",
                self.n_sites(),
                s.len()
            )));
        }
        let mut bits = 0u64;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => {
                    return Err(Error::InvalidState(format!(
                        "bad occupation character {ch:?}"
                    )))
                }
            }
        }
        Ok(Configuration(bits))
    }

    pub fn format_config(&self, c: Configuration) -> String {
        (0..self.n_sites())
            .map(|i| if c.occupied(i) { '1' } else { '0' })
            .collect()
    }

    pub fn format_dipole(&self, d: Dipole) -> String {
        if self.dim() == 1 {
            d.x.to_string()
        } else {
            format!("{};{}", d.x, d.y)
        }
    }
}

/// Occupation bitstring; bit `i` is the occupation of site `i`.
#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Configuration(pub u64);

impl Configuration {
    pub fn from_occupations(occ: &[u8]) -> Self {
        let bits = occ.iter().enumerate().fold(
            0u64,
            |acc, (i, &n)| if n != 0 { acc | (1 << i) } else { acc },
        );
        Self(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn charge(self) -> u32 {
        self.0.count_ones()
    }

    pub fn occupied(self, site: usize) -> bool {
        (self.0 >> site) & 1 == 1
    }

    pub fn occupation(self, site: usize) -> u8 {
        ((self.0 >> site) & 1) as u8
    }

    pub fn with_site(self, site: usize, occupied: bool) -> Self {
        if occupied {
            Self(self.0 | (1 << site))
        } else {
            Self(self.0 & !(1 << site))
        }
    }
}

#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Dipole {
    pub x: i64,
    pub y: i64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorKey {
    pub charge: u32,
    pub dipole: Dipole,
}

impl fmt::Display for SectorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(Q={}, P=({}, {}))",
            self.charge, self.dipole.x, self.dipole.y
        )
    }
}

pub const MAX_WINDOW: usize = 8;

/// Contiguous run of sites along one lattice axis.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    start: usize,
    stride: usize,
    len: usize,
}

impl Window {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn site(&self, i: usize) -> usize {
        self.start + i * self.stride
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |i| self.site(i))
    }

    pub fn mask(&self) -> u64 {
        self.sites().fold(0, |m, s| m | (1 << s))
    }

    /// Packs the window's occupations into a small integer; window site 0 is
    /// the least significant bit.
    #[inline]
    pub fn pack(&self, c: Configuration) -> u8 {
        if self.stride == 1 {
            ((c.0 >> self.start) & ((1u64 << self.len) - 1)) as u8
        } else {
            let mut w = 0u8;
            for i in 0..self.len {
                w |= (((c.0 >> (self.start + i * self.stride)) & 1) as u8) << i;
            }
            w
        }
    }

    /// Replaces the window's occupations by the packed `state`, leaving all
    /// other sites untouched.
    #[inline]
    pub fn unpack_into(&self, c: Configuration, state: u8) -> Configuration {
        if self.stride == 1 {
            let mask = ((1u64 << self.len) - 1) << self.start;
            Configuration((c.0 & !mask) | ((state as u64) << self.start))
        } else {
            let mut bits = c.0;
            for i in 0..self.len {
                let s = self.start + i * self.stride;
                bits = (bits & !(1 << s)) | ((((state >> i) & 1) as u64) << s);
            }
            Configuration(bits)
        }
    }
}

/// Charge and dipole moment of a packed window state in window-local
/// coordinates.
pub fn window_sector(state: u8) -> (u32, i64) {
    let q = state.count_ones();
    let p = (0..8)
        .filter(|i| (state >> i) & 1 == 1)
        .map(|i| i as i64)
        .sum();
    (q, p)
}
