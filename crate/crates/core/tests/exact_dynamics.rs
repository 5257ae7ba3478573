mod common;

use common::{linspace, random_couplings, random_symmetric_couplings, trap_chain};
use nalgebra::DMatrix;
use prethermal::coupling::CouplingMatrix;
use prethermal::exact::{
    build_full_ising, build_xy_sector, diagonal_ensemble, energy, evolve, evolve_with, excitation_drift,
    initial_state, observable_c, propagate, site_sz, ExcitationPattern, Propagation,
};
use prethermal::linalg::sym_eigen;
use prethermal::spinwave::build_spinwave;
use prethermal::units::khz_to_rad;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair(j: f64) -> CouplingMatrix {
    CouplingMatrix::from_full(DMatrix::from_row_slice(2, 2, &[0.0, j, j, 0.0])).unwrap()
}

#[test]
fn two_spin_spectrum() {
    let (j, b) = (0.7, 1.9);
    let h = build_full_ising(&pair(j), b).unwrap();
    assert_eq!(h.matrix().asymmetry(), 0.0);
    let e = h.spectrum().unwrap().values.clone();
    let root = (4.0 * b * b + j * j).sqrt();
    let mut want = [-root, -j, j, root];
    want.sort_by(f64::total_cmp);
    for (a, w) in e.iter().zip(want) {
        assert!((a - w).abs() < 1e-12, "{a} vs {w}");
    }
}

#[test]
fn two_spin_exchange_oscillation() {
    let (j, b) = (1.0, 200.0);
    let times = linspace(6.0, 61);
    let psi0 = ExcitationPattern::new(2, &[1]).unwrap();
    let xy = evolve(&build_xy_sector(&pair(j), b, 1).unwrap(), &psi0, &times).unwrap();
    let full = evolve(&build_full_ising(&pair(j), b).unwrap(), &psi0, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let exact = (2.0 * j * t).cos();
        assert!((xy.sz()[k][0] - exact).abs() < 1e-12);
        // {|01⟩, |10⟩} is closed under σ^xσ^x, so the full model agrees exactly
        assert!((full.sz()[k][0] - exact).abs() < 1e-10);
    }
}

#[test]
fn starts_from_the_pattern_and_is_static_without_couplings() {
    let zero = CouplingMatrix::from_full(DMatrix::zeros(5, 5)).unwrap();
    let psi0 = ExcitationPattern::new(5, &[2, 5]).unwrap();
    let trace = evolve(&build_full_ising(&zero, 3.0).unwrap(), &psi0, &[0.0, 1.0, 7.5]).unwrap();
    assert_eq!(trace.sz()[0], psi0.sz());
    for row in trace.sz() {
        for (a, b) in row.iter().zip(psi0.sz()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    let h = build_full_ising(&random_couplings(5, 2), 3.0).unwrap();
    for method in [Propagation::Dense, Propagation::Krylov] {
        let t0 = evolve_with(&h, &psi0, &[0.0], method).unwrap();
        assert_eq!(t0.sz()[0], psi0.sz());
    }
    let de = diagonal_ensemble(&build_full_ising(&zero, 3.0).unwrap(), &psi0).unwrap();
    for (a, b) in de.iter().zip(psi0.sz()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn krylov_agrees_with_dense() {
    let jm = random_couplings(10, 8);
    let h = build_full_ising(&jm, 5.0).unwrap();
    assert_eq!(h.dimension(), 1024);
    let psi0 = ExcitationPattern::new(10, &[3]).unwrap();
    let times = linspace(25.0, 26);
    let dense = evolve_with(&h, &psi0, &times, Propagation::Dense).unwrap();
    let krylov = evolve_with(&h, &psi0, &times, Propagation::Krylov).unwrap();
    let worst = dense
        .sz()
        .iter()
        .flatten()
        .zip(krylov.sz().iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn norm_and_energy_are_conserved() {
    let jm = random_couplings(8, 9);
    let h = build_full_ising(&jm, 4.0).unwrap();
    let psi0 = initial_state(&h, &ExcitationPattern::new(8, &[1, 6]).unwrap()).unwrap();
    let e0 = energy(&h, &psi0);
    for method in [Propagation::Dense, Propagation::Krylov] {
        propagate(&h, &psi0, &linspace(30.0, 16), method, |_, psi| {
            let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-10, "{method:?} norm {norm}");
            let e = energy(&h, psi);
            assert!(((e - e0) / e0).abs() < 1e-8, "{method:?} energy {e} vs {e0}");
        })
        .unwrap();
    }
}

#[test]
fn mirror_patterns_give_mirrored_traces() {
    let jm = trap_chain(7, 0.55);
    let h = build_full_ising(&jm, khz_to_rad(common::B_KHZ)).unwrap();
    let times = linspace(25.0 / jm.j_max(), 40);
    for sites in [vec![1], vec![2, 4]] {
        let p = ExcitationPattern::new(7, &sites).unwrap();
        let a = evolve(&h, &p, &times).unwrap();
        let b = evolve(&h, &p.mirror(), &times).unwrap();
        for (ra, rb) in a.sz().iter().zip(b.sz()) {
            for i in 0..7 {
                assert!((ra[i] - rb[6 - i]).abs() < 1e-10);
            }
        }
        for (ca, cb) in a.c_series().iter().zip(b.c_series()) {
            assert!((ca + cb).abs() < 1e-10);
        }
    }
}

#[test]
fn single_excitation_sector_is_the_hopping_matrix() {
    let jm = random_couplings(6, 4);
    let b = 2.5;
    let h = build_xy_sector(&jm, b, 1).unwrap();
    let dense = h.matrix().to_dense();
    let shifted = jm.j_script() + DMatrix::identity(6, 6) * (2.0 * b - 6.0 * b);
    // basis order is site 1..N for the one-excitation masks
    assert_eq!(h.basis(), &[1, 2, 4, 8, 16, 32]);
    assert_eq!(dense, shifted);
    let sys = build_spinwave(&jm, 10.0).unwrap();
    let eig = h.spectrum().unwrap();
    for k in 0..6 {
        let overlap: f64 = (0..6).map(|i| eig.vectors[(i, k)] * sys.v()[(i, k)]).sum();
        assert!((overlap.abs() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn two_excitation_sector_matches_full_band() {
    let jm = random_couplings(7, 12);
    let b = 25.0;
    let full = build_full_ising(&jm, b).unwrap();
    let sector = build_xy_sector(&jm, b, 2).unwrap();
    assert_eq!(sector.dimension(), 21);
    let fs = full.spectrum().unwrap();
    // full eigenstates living mostly in the two-excitation band
    let mut band: Vec<f64> = (0..full.dimension())
        .filter(|&n| {
            let w: f64 = (0..full.dimension())
                .filter(|&s| (s as u64).count_ones() == 2)
                .map(|s| fs.vectors[(s, n)].powi(2))
                .sum();
            w > 0.5
        })
        .map(|n| fs.values[n])
        .collect();
    band.sort_by(f64::total_cmp);
    let xy = sym_eigen(&sector.matrix().to_dense()).unwrap().values;
    assert_eq!(band.len(), xy.len());
    let scale = 7.0 * 2.0 / b;
    for (a, e) in band.iter().zip(xy.iter()) {
        assert!((a - e).abs() < scale, "{a} vs {e}");
    }
}

#[test]
fn excitation_drift_scales_with_field() {
    let jm = trap_chain(7, 0.55);
    let times = linspace(25.0 / jm.j_max(), 60);
    let psi0 = ExcitationPattern::new(7, &[1]).unwrap();
    let xy = evolve(&build_xy_sector(&jm, khz_to_rad(10.0), 1).unwrap(), &psi0, &times).unwrap();
    assert!(excitation_drift(&xy).unwrap() < 1e-10);
    let full = evolve(&build_full_ising(&jm, khz_to_rad(10.0)).unwrap(), &psi0, &times).unwrap();
    assert!(excitation_drift(&full).unwrap() < 0.05);
    let free = evolve(&build_full_ising(&jm, 0.0).unwrap(), &psi0, &times).unwrap();
    assert!(excitation_drift(&free).unwrap() > 0.5);
}

#[test]
fn diagonal_ensemble_is_the_long_time_average() {
    let jm = random_couplings(5, 31);
    let h = build_full_ising(&jm, 3.7).unwrap();
    let psi0 = ExcitationPattern::new(5, &[2]).unwrap();
    let de = diagonal_ensemble(&h, &psi0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut times: Vec<f64> = (0..20_000).map(|_| rng.random_range(0.0..1e4)).collect();
    times.sort_by(f64::total_cmp);
    let trace = evolve(&h, &psi0, &times).unwrap();
    let avg = trace.cumulative_sz().pop().unwrap();
    for (a, d) in avg.iter().zip(&de) {
        assert!((a - d).abs() < 0.01, "{a} vs {d}");
    }
}

#[test]
fn diagonal_ensemble_is_centred_for_symmetric_chains() {
    for (n, seed) in [(5, 1), (6, 2), (7, 3), (8, 4)] {
        let jm = random_symmetric_couplings(n, seed);
        let h = build_full_ising(&jm, 4.3).unwrap();
        for sites in [vec![1], vec![2], vec![1, 3], vec![2, n]] {
            let psi0 = ExcitationPattern::new(n, &sites).unwrap();
            let c = observable_c(&diagonal_ensemble(&h, &psi0).unwrap()).unwrap();
            assert!(c.abs() < 1e-8, "n={n} {psi0}: {c:e}");
        }
    }
}

#[test]
fn sector_mismatch_is_reported() {
    let jm = random_couplings(4, 1);
    let h = build_xy_sector(&jm, 2.0, 1).unwrap();
    let two = ExcitationPattern::new(4, &[1, 2]).unwrap();
    assert!(evolve(&h, &two, &[0.0]).is_err());
    assert!(evolve(&h, &ExcitationPattern::new(5, &[1]).unwrap(), &[0.0]).is_err());
    let psi = initial_state(&h, &ExcitationPattern::new(4, &[3]).unwrap()).unwrap();
    assert_eq!(site_sz(&h, &psi), vec![-1.0, -1.0, 1.0, -1.0]);
    assert!(evolve(&h, &ExcitationPattern::new(4, &[3]).unwrap(), &[1.0, 0.5]).is_err());
}
