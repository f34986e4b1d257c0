//! Period-5 brickwork placement of the five-site gates.
//!
//! 1D: layer `t` places windows at every start `s ≡ t (mod 5)` that fits in
//! the chain. 2D: even layers act along rows (x), odd layers along columns
//! (y), and the offset within the axis is `(t / 2) mod 5`. Windows that would
//! cross the open boundary are dropped.

use crate::gates::WINDOW_SIZE;
use crate::lattice::{Axis, LatticeGeometry, Window};

pub const PERIOD: usize = 5;

#[derive(Clone, Debug)]
pub struct BrickworkSchedule {
    geometry: LatticeGeometry,
    layers: Vec<Vec<Window>>,
}

impl BrickworkSchedule {
    pub fn new(geometry: LatticeGeometry) -> Self {
        let layers = (0..distinct_layers(&geometry))
            .map(|t| schedule_windows(t, &geometry))
            .collect();
        Self { geometry, layers }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    /// Number of distinct layer patterns before the schedule repeats.
    pub fn cycle_len(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_class(&self, layer: usize) -> usize {
        layer % self.layers.len()
    }

    pub fn windows(&self, layer: usize) -> &[Window] {
        &self.layers[self.layer_class(layer)]
    }

    /// Every window used anywhere in the cycle.
    pub fn all_windows(&self) -> impl Iterator<Item = &Window> {
        self.layers.iter().flatten()
    }
}

pub fn distinct_layers(geometry: &LatticeGeometry) -> usize {
    if geometry.dim() == 1 {
        PERIOD
    } else {
        2 * PERIOD
    }
}

pub fn schedule_windows(layer: usize, geometry: &LatticeGeometry) -> Vec<Window> {
    let (axis, offset) = if geometry.dim() == 1 {
        (Axis::X, layer % PERIOD)
    } else {
        let axis = if layer.is_multiple_of(2) { Axis::X } else { Axis::Y };
        (axis, (layer / 2) % PERIOD)
    };
    let along = geometry.axis_len(axis);
    let (lines, _) = match axis {
        Axis::X => (geometry.ly(), geometry.lx()),
        Axis::Y => (geometry.lx(), geometry.ly()),
    };
    let mut out = Vec::new();
    if along < WINDOW_SIZE {
        return out;
    }
    for line in 0..lines {
        let mut s = offset;
        while s + WINDOW_SIZE <= along {
            let (x, y) = match axis {
                Axis::X => (s, line),
                Axis::Y => (line, s),
            };
            out.push(
                geometry
                    .window(axis, x, y, WINDOW_SIZE)
                    .expect("scheduled window lies inside the lattice"),
            );
            s += PERIOD;
        }
    }
    out
}
