//! Shared fixtures and samplers for the integration suites.
#![allow(dead_code)] // each test target uses a different subset

use gridcert_core::netmodel::three_bus_fixture_z;
use gridcert_core::{Bus, ImpedanceMatrix, Line, Network};
use num_complex::Complex64;
use rand::Rng;

pub fn fixture_z() -> ImpedanceMatrix {
    ImpedanceMatrix::from_matrix(three_bus_fixture_z(), vec![1, 2]).unwrap()
}

/// Unit resistive two-bus network (Z = [1]).
pub fn two_bus_r1() -> Network {
    Network::new(
        vec![
            Bus { id: 0, shunt: Complex64::ZERO },
            Bus { id: 1, shunt: Complex64::ZERO },
        ],
        vec![Line { from_bus: 0, to_bus: 1, r: 1.0, x: 0.0 }],
        1.0,
    )
    .unwrap()
}

/// Chain 0-1-...-n with given per-segment impedances.
pub fn chain_network(rx: &[(f64, f64)], v0: f64) -> Network {
    let buses = (0..=rx.len())
        .map(|id| Bus { id, shunt: Complex64::ZERO })
        .collect();
    let lines = rx
        .iter()
        .enumerate()
        .map(|(k, &(r, x))| Line { from_bus: k, to_bus: k + 1, r, x })
        .collect();
    Network::new(buses, lines, v0).unwrap()
}

/// Random radial tree on `n` load buses, r and x in [0.01, 1], optional
/// capacitive shunts on load buses.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, with_shunts: bool, v0: f64) -> Network {
    let buses = (0..=n)
        .map(|id| {
            let shunt = if with_shunts && id > 0 && rng.random_bool(0.3) {
                Complex64::new(0.0, rng.random_range(0.0..0.3))
            } else {
                Complex64::ZERO
            };
            Bus { id, shunt }
        })
        .collect();
    let lines = (1..=n)
        .map(|id| Line {
            from_bus: rng.random_range(0..id),
            to_bus: id,
            r: rng.random_range(0.01..1.0),
            x: rng.random_range(0.01..1.0),
        })
        .collect();
    Network::new(buses, lines, v0).unwrap()
}

/// Random per-bus complex direction with moduli in [0.1, 1].
pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let mag = rng.random_range(0.1..1.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(mag, phase)
        })
        .collect()
}
