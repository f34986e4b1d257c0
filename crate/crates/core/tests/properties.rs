use std::collections::BTreeMap;

use proptest::prelude::*;

use dipolesim::gates::{GateFamily, WindowKernel};
use dipolesim::harness::RunConfig;
use dipolesim::lattice::{Axis, Configuration, LatticeGeometry};
use dipolesim::observables::{charge_variance, mean_charge, renyi2_charge, renyi2_dipole};
use dipolesim::state::{kernel_apply, ProbState};

fn family() -> impl Strategy<Value = GateFamily> {
    prop_oneof![Just(GateFamily::MinimalPair), Just(GateFamily::FullMixing)]
}

/// Random distribution over a random subset of configurations of an
/// `l`-site chain.
fn state(l: usize) -> impl Strategy<Value = ProbState> {
    let n = 1u64 << l;
    proptest::collection::vec((0..n, 0.01f64..1.0), 1..24).prop_map(move |w| {
        let geom = LatticeGeometry::chain(l).unwrap();
        ProbState::from_weights(geom, w.into_iter().map(|(c, p)| (Configuration(c), p))).unwrap()
    })
}

fn sector_masses(s: &ProbState) -> BTreeMap<(u32, i64), f64> {
    let g = *s.geometry();
    let mut m = BTreeMap::new();
    for (c, p) in s.iter() {
        *m.entry((c.charge(), g.dipole(c).x)).or_insert(0.0) += p;
    }
    m
}

proptest! {
    #[test]
    fn kernel_conserves_sector_masses(s in state(8), fam in family(), start in 0usize..4) {
        let kernel = WindowKernel::new(fam);
        let w = s.geometry().window(Axis::X, start, 0, 5).unwrap();
        let out = kernel_apply(&s, &kernel, w).unwrap();
        prop_assert!((out.total() - 1.0).abs() < 1e-12);
        let (a, b) = (sector_masses(&s), sector_masses(&out));
        for (k, p) in &b {
            let before = a.get(k).copied().unwrap_or(0.0);
            prop_assert!((p - before).abs() < 1e-12, "sector {k:?}: {before} -> {p}");
        }
    }

    #[test]
    fn kernel_is_idempotent(s in state(7), fam in family(), start in 0usize..3) {
        let kernel = WindowKernel::new(fam);
        let w = s.geometry().window(Axis::X, start, 0, 5).unwrap();
        let once = kernel_apply(&s, &kernel, w).unwrap();
        let twice = kernel_apply(&once, &kernel, w).unwrap();
        for (a, b) in once.probs().iter().zip(twice.probs()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn pack_unpack_bijection(bits in 0u64..(1 << 12), start in 0usize..8, local in 0u8..32) {
        let g = LatticeGeometry::chain(12).unwrap();
        let w = g.window(Axis::X, start, 0, 5).unwrap();
        let c = Configuration(bits);
        prop_assert_eq!(w.unpack_into(c, w.pack(c)), c);
        let d = w.unpack_into(c, local);
        prop_assert_eq!(w.pack(d), local);
        prop_assert_eq!(d.bits() & !w.mask(), c.bits() & !w.mask());
    }

    #[test]
    fn grid_pack_unpack(bits in 0u64..(1 << 30), x in 0usize..6) {
        let g = LatticeGeometry::grid(6, 5).unwrap();
        let w = g.window(Axis::Y, x, 0, 5).unwrap();
        let c = Configuration(bits);
        prop_assert_eq!(w.unpack_into(c, w.pack(c)), c);
        prop_assert!(w.sites().all(|s| g.coords(s).0 == x));
    }

    #[test]
    fn renyi2_bounded_and_symmetric(s in state(6), x in 0usize..6, y in 0usize..6) {
        prop_assume!(x != y);
        let r = renyi2_charge(&s, x, y).unwrap();
        prop_assert!((-1e-15..=1.0 + 1e-12).contains(&r));
        prop_assert!((r - renyi2_charge(&s, y, x).unwrap()).abs() < 1e-14);
        if x < 5 && y < 5 {
            let d = renyi2_dipole(&s, x, y).unwrap();
            prop_assert!((-1e-15..=1.0 + 1e-12).contains(&d));
            prop_assert!((d - renyi2_dipole(&s, y, x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn measurement_is_a_martingale(s in state(7), site in 0usize..7) {
        let p1 = s.occupation_probability(site);
        let (mut mean, mut var) = (0.0, 0.0);
        for (n, p) in [(0u8, 1.0 - p1), (1, p1)] {
            if p <= 1e-15 {
                continue;
            }
            let mut post = s.clone();
            post.condition_projective(site, n).unwrap();
            mean += p * mean_charge(&post);
            var += p * charge_variance(&post);
        }
        prop_assert!((mean - mean_charge(&s)).abs() < 1e-10);
        prop_assert!(var <= charge_variance(&s) + 1e-10);
    }

    #[test]
    fn weak_measurement_martingale(s in state(6), site in 0usize..6, strength in 0.1f64..5.0) {
        // average the posterior mean over the outcome density on a grid
        let p1 = s.occupation_probability(site);
        let sd = 1.0 / strength.sqrt();
        let density = |m: f64| {
            let g = |mu: f64| (-(m - mu).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
            (1.0 - p1) * g(-1.0) + p1 * g(1.0)
        };
        let (lo, hi, n) = (-1.0 - 10.0 * sd, 1.0 + 10.0 * sd, 4000);
        let h = (hi - lo) / n as f64;
        let mut mean = 0.0;
        for i in 0..n {
            let m = lo + (i as f64 + 0.5) * h;
            let mut post = s.clone();
            post.condition_weak(site, strength, m).unwrap();
            mean += h * density(m) * mean_charge(&post);
        }
        prop_assert!((mean - mean_charge(&s)).abs() < 1e-6);
    }

    #[test]
    fn config_round_trip(
        l in 5usize..20,
        rate in 0.0f64..1.0,
        weak in proptest::option::of(0.1f64..10.0),
        horizon in 1usize..1000,
        trajectories in 1usize..100,
        seed in 0u64..(i64::MAX as u64),
        pf in proptest::option::of(2usize..10_000),
        fam in family(),
    ) {
        let measurement = match weak {
            Some(s) => format!("rate = {rate}\nkind = \"weak\"\nstrength = {s}"),
            None => format!("rate = {rate}"),
        };
        let engine = pf.map(|n| format!("engine = \"pf:{n}\"\n")).unwrap_or_default();
        let family = match fam {
            GateFamily::MinimalPair => "minimal-pair",
            GateFamily::FullMixing => "full-mixing",
        };
        let text = format!(
            "[lattice]\nlengths = [{l}]\n[gates]\nfamily = \"{family}\"\n[measurement]\n{measurement}\n[run]\nhorizon = {horizon}\ntrajectories = {trajectories}\nseed = {seed}\n{engine}"
        );
        let c = RunConfig::from_toml(&text).unwrap();
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        prop_assert_eq!(c, back);
    }
}
