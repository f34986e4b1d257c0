//! Five-site dipole-conserving gate families and their averaged kernels.
//!
//! After circuit averaging and dephasing, a gate acts on the occupation
//! distribution by mixing each window configuration uniformly over its
//! connected component (probability `1/d_s` for a component of size `d_s`;
//! frozen configurations with `d_s = 1` are left untouched).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::lattice::window_sector;

pub const WINDOW_SIZE: usize = 5;
const N_STATES: usize = 1 << WINDOW_SIZE;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateFamily {
    /// `G: (0,1,g,1,0) -> (1,0,g,0,1)` and its inverse.
    #[default]
    MinimalPair,
    /// All single pair hops (one particle moves +1, another −1) inside the
    /// window, closed under repetition.
    FullMixing,
}

/// States reachable from `state` by one application of the family's moves.
pub fn elementary_moves(family: GateFamily, state: u8) -> Vec<u8> {
    debug_assert!((state as usize) < N_STATES);
    match family {
        GateFamily::MinimalPair => {
            // bits 1 and 3 occupied, 0 and 4 empty; middle bit is a spectator
            let middle = state & 0b00100;
            let outer = state & 0b11011;
            if outer == 0b01010 {
                vec![0b10001 | middle]
            } else if outer == 0b10001 {
                vec![0b01010 | middle]
            } else {
                Vec::new()
            }
        }
        GateFamily::FullMixing => {
            let mut out = Vec::new();
            let occ = |s: u8, i: usize| (s >> i) & 1 == 1;
            for i in 0..WINDOW_SIZE - 1 {
                // particle at i hops to i+1
                if !occ(state, i) {
                    continue;
                }
                for j in 1..WINDOW_SIZE {
                    // another particle at j hops to j-1
                    if j == i || !occ(state, j) {
                        continue;
                    }
                    let removed = state & !(1 << i) & !(1 << j);
                    let (a, b) = (i + 1, j - 1);
                    if a == b || occ(removed, a) || occ(removed, b) {
                        continue;
                    }
                    let next = removed | (1 << a) | (1 << b);
                    if next != state && !out.contains(&next) {
                        out.push(next);
                    }
                }
            }
            out.sort_unstable();
            out
        }
    }
}

/// Partition of the 32 window states into connected components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowKernel {
    family: GateFamily,
    component_of: [u8; N_STATES],
    components: Vec<Vec<u8>>,
}

impl WindowKernel {
    /// Breadth-first closure of [`elementary_moves`]; components are listed
    /// in order of their smallest member, members ascending.
    pub fn new(family: GateFamily) -> Self {
        let mut component_of = [u8::MAX; N_STATES];
        let mut components = Vec::new();
        for seed in 0..N_STATES as u8 {
            if component_of[seed as usize] != u8::MAX {
                continue;
            }
            let id = components.len() as u8;
            let mut members = vec![seed];
            component_of[seed as usize] = id;
            let mut queue = VecDeque::from([seed]);
            while let Some(s) = queue.pop_front() {
                for t in elementary_moves(family, s) {
                    if component_of[t as usize] == u8::MAX {
                        component_of[t as usize] = id;
                        members.push(t);
                        queue.push_back(t);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        Self {
            family,
            component_of,
            components,
        }
    }

    pub fn family(&self) -> GateFamily {
        self.family
    }

    pub fn components(&self) -> &[Vec<u8>] {
        &self.components
    }

    pub fn component_id(&self, state: u8) -> usize {
        self.component_of[state as usize] as usize
    }

    #[inline]
    pub fn component(&self, state: u8) -> &[u8] {
        &self.components[self.component_of[state as usize] as usize]
    }

    /// `d_s` of the component containing `state`.
    pub fn component_size(&self, state: u8) -> usize {
        self.component(state).len()
    }

    /// Averaged single-gate transition probability `from -> to`.
    pub fn transition_probability(&self, from: u8, to: u8) -> f64 {
        if self.component_of[from as usize] == self.component_of[to as usize] {
            1.0 / self.component_size(from) as f64
        } else {
            0.0
        }
    }

    /// Rows `(window_state, Q, P, component_id, component_size)`.
    pub fn table(&self) -> Vec<ComponentRow> {
        (0..N_STATES as u8)
            .map(|s| {
                let (q, p) = window_sector(s);
                ComponentRow {
                    window_state: s,
                    charge: q,
                    dipole: p,
                    component_id: self.component_id(s),
                    component_size: self.component_size(s),
                }
            })
            .collect()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ComponentRow {
    pub window_state: u8,
    pub charge: u32,
    pub dipole: i64,
    pub component_id: usize,
    pub component_size: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(occ: [u8; 5]) -> u8 {
        occ.iter().enumerate().fold(0, |a, (i, &n)| a | (n << i))
    }

    #[test]
    fn minimal_pair_moves() {
        assert_eq!(
            elementary_moves(GateFamily::MinimalPair, bits([0, 1, 0, 1, 0])),
            vec![bits([1, 0, 0, 0, 1])]
        );
        assert_eq!(
            elementary_moves(GateFamily::MinimalPair, bits([0, 1, 1, 1, 0])),
            vec![bits([1, 0, 1, 0, 1])]
        );
        assert!(elementary_moves(GateFamily::MinimalPair, 0b11111).is_empty());
        assert!(elementary_moves(GateFamily::FullMixing, 0b11111).is_empty());
    }

    #[test]
    fn full_mixing_contains_pair_hop() {
        let moves = elementary_moves(GateFamily::FullMixing, bits([0, 1, 1, 0, 0]));
        assert!(moves.contains(&bits([1, 0, 0, 1, 0])));
    }

    #[test]
    fn full_mixing_moves_match_brute_force() {
        // every pair (i -> i+1, j -> j-1) with distinct particles, checked on
        // explicit occupation arrays
        for s in 0..32u8 {
            let occ: Vec<u8> = (0..5).map(|i| (s >> i) & 1).collect();
            let mut expected = Vec::new();
            for i in 0..5 {
                for j in 0..5 {
                    if i == j || occ[i] == 0 || occ[j] == 0 || i + 1 >= 5 || j == 0 {
                        continue;
                    }
                    let mut next = occ.clone();
                    next[i] = 0;
                    next[j] = 0;
                    if next[i + 1] == 1 || next[j - 1] == 1 || i + 1 == j - 1 {
                        continue;
                    }
                    next[i + 1] = 1;
                    next[j - 1] = 1;
                    let packed = next.iter().enumerate().fold(0u8, |a, (k, &n)| a | (n << k));
                    if packed != s && !expected.contains(&packed) {
                        expected.push(packed);
                    }
                }
            }
            expected.sort_unstable();
            assert_eq!(
                elementary_moves(GateFamily::FullMixing, s),
                expected,
                "state {s:05b}"
            );
        }
    }

    #[test]
    fn minimal_pair_components() {
        let k = WindowKernel::new(GateFamily::MinimalPair);
        assert_eq!(
            k.component(bits([0, 1, 0, 1, 0])),
            &[bits([0, 1, 0, 1, 0]), bits([1, 0, 0, 0, 1])]
        );
        assert_eq!(k.component(0b11111), &[0b11111]);
        let sizes: Vec<usize> = k.components().iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().filter(|&&d| d == 2).count(), 2);
        assert_eq!(sizes.iter().sum::<usize>(), 32);
    }

    #[test]
    fn full_mixing_sector_q2_p4() {
        let k = WindowKernel::new(GateFamily::FullMixing);
        assert_eq!(
            k.component(bits([0, 1, 0, 1, 0])),
            &[bits([0, 1, 0, 1, 0]), bits([1, 0, 0, 0, 1])]
        );
    }

    #[test]
    fn components_respect_window_sectors() {
        for family in [GateFamily::MinimalPair, GateFamily::FullMixing] {
            let k = WindowKernel::new(family);
            for comp in k.components() {
                let key = window_sector(comp[0]);
                assert!(comp.iter().all(|&s| window_sector(s) == key));
            }
        }
    }

    #[test]
    fn minimal_components_nest_in_full() {
        let min = WindowKernel::new(GateFamily::MinimalPair);
        let full = WindowKernel::new(GateFamily::FullMixing);
        for comp in min.components() {
            let id = full.component_id(comp[0]);
            assert!(comp.iter().all(|&s| full.component_id(s) == id));
        }
    }

    #[test]
    fn kernel_rows_are_stochastic() {
        for family in [GateFamily::MinimalPair, GateFamily::FullMixing] {
            let k = WindowKernel::new(family);
            for a in 0..32u8 {
                let row: f64 = (0..32u8).map(|b| k.transition_probability(a, b)).sum();
                let col: f64 = (0..32u8).map(|b| k.transition_probability(b, a)).sum();
                assert!((row - 1.0).abs() < 1e-15);
                assert!((col - 1.0).abs() < 1e-15);
            }
        }
    }
}
