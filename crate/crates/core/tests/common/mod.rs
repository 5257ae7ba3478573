#![allow(dead_code)]

pub mod fock;

use nalgebra::DMatrix;
use prethermal::coupling::{tuned_trap_couplings, CouplingMatrix};
use prethermal::lattice::{Geometry, TrapConfig};
use prethermal::units::khz_to_rad;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const J_MAX_KHZ: f64 = 0.6;
pub const B_KHZ: f64 = 10.0;

/// Harmonic-trap chain with μ tuned to `alpha` and J_max = 0.6 kHz.
pub fn trap_chain(n: usize, alpha: f64) -> CouplingMatrix {
    let cfg = TrapConfig::new(
        n,
        Geometry::HarmonicTrap,
        khz_to_rad(4800.0),
        khz_to_rad(400.0),
        khz_to_rad(4900.0),
        khz_to_rad(600.0),
    );
    tuned_trap_couplings(&cfg, Some(alpha), Some(khz_to_rad(J_MAX_KHZ)))
        .unwrap()
        .1
}

/// Symmetric zero-diagonal matrix with entries uniform in [−1, 1], scaled so
/// the largest magnitude is exactly 1.
pub fn random_couplings(n: usize, seed: u64) -> CouplingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        for r in 0..c {
            let x: f64 = rng.random_range(-1.0..1.0);
            j[(r, c)] = x;
            j[(c, r)] = x;
        }
    }
    let scale = j.amax();
    CouplingMatrix::from_full(j / scale).unwrap()
}

/// Random couplings that are inversion symmetric, J_ij = J_{N+1−j, N+1−i}.
pub fn random_symmetric_couplings(n: usize, seed: u64) -> CouplingMatrix {
    let base = random_couplings(n, seed);
    let j = base.j();
    let mirrored = DMatrix::from_fn(n, n, |r, c| j[(n - 1 - c, n - 1 - r)]);
    CouplingMatrix::from_full((j + mirrored) * 0.5).unwrap()
}

pub fn linspace(t_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| t_max * k as f64 / (points - 1) as f64)
        .collect()
}
