mod common;

use common::{linspace, trap_chain};
use prethermal::coupling::CouplingMatrix;
use prethermal::exact::{build_full_ising, evolve, final_distribution, ExcitationPattern, Propagation, QuenchTrace};
use prethermal::spinwave::{build_spinwave, evolve_spinwave};
use prethermal::stochastic::{
    draw_noise, noise_average, postselect, prepare_and_measure, sample_shots, sample_shots_joint, NoiseDraw, NoiseModel,
};
use prethermal::units::{hz_to_rad, khz_to_rad};

fn b_field() -> f64 {
    khz_to_rad(common::B_KHZ)
}

fn spinwave_run(jm: &CouplingMatrix, psi0: &ExcitationPattern, times: &[f64], d: NoiseDraw) -> prethermal::Result<QuenchTrace> {
    evolve_spinwave(&build_spinwave(&jm.scaled(d.j_scale), b_field() + d.b_offset)?, psi0, times)
}

fn exact_run(jm: &CouplingMatrix, psi0: &ExcitationPattern, times: &[f64], d: NoiseDraw) -> prethermal::Result<QuenchTrace> {
    evolve(&build_full_ising(&jm.scaled(d.j_scale), b_field() + d.b_offset)?, psi0, times)
}

fn plateau(trace: &QuenchTrace) -> f64 {
    *trace.c_cumulative().last().unwrap()
}

#[test]
fn draws_are_reproducible_and_positive() {
    let model = NoiseModel { seed: 11, ..NoiseModel::default() };
    let a: Vec<NoiseDraw> = (0..500).map(|k| draw_noise(&model, k).unwrap()).collect();
    let b: Vec<NoiseDraw> = (0..500).map(|k| draw_noise(&model, k).unwrap()).collect();
    assert_eq!(a, b);
    assert!(a.iter().all(|d| d.j_scale > 0.0));
    let mean = a.iter().map(|d| d.j_scale).sum::<f64>() / 500.0;
    let sd = (a.iter().map(|d| (d.j_scale - mean).powi(2)).sum::<f64>() / 499.0).sqrt();
    assert!((mean - 1.0).abs() < 0.03 && (sd - 0.12).abs() < 0.02, "{mean} {sd}");
    let other = NoiseModel { seed: 12, ..model };
    assert_ne!(draw_noise(&other, 0).unwrap(), a[0]);
}

#[test]
fn noise_average_is_deterministic() {
    let jm = trap_chain(7, 0.55);
    let times = linspace(25.0 / jm.j_max(), 50);
    let psi0 = ExcitationPattern::new(7, &[1]).unwrap();
    let model = NoiseModel { seed: 5, ..NoiseModel::default() };
    let run = |d| spinwave_run(&jm, &psi0, &times, d);
    let a = noise_average(run, &model, 64).unwrap();
    let b = noise_average(run, &model, 64).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.noise_samples(), Some(64));
    let clean = noise_average(run, &NoiseModel::ideal(5), 64).unwrap();
    assert_eq!(clean, run(NoiseDraw::NONE).unwrap());
}

#[test]
fn mirrored_patterns_average_to_opposite_plateaus() {
    let jm = trap_chain(7, 0.55);
    let times = linspace(25.0 / jm.j_max(), 100);
    let model = NoiseModel { seed: 3, ..NoiseModel::default() };
    let left = ExcitationPattern::new(7, &[1]).unwrap();
    let a = noise_average(|d| exact_run(&jm, &left, &times, d), &model, 24).unwrap();
    let b = noise_average(|d| exact_run(&jm, &left.mirror(), &times, d), &model, 24).unwrap();
    assert!((plateau(&a) + plateau(&b)).abs() < 1e-9);
}

#[test]
fn coupling_noise_keeps_the_plateau() {
    let jm = trap_chain(7, 0.55);
    let times = linspace(25.0 / jm.j_max(), 200);
    let psi0 = ExcitationPattern::new(7, &[1]).unwrap();
    let run = |d| spinwave_run(&jm, &psi0, &times, d);
    let clean = plateau(&run(NoiseDraw::NONE).unwrap());
    let noisy = plateau(&noise_average(run, &NoiseModel { seed: 9, ..NoiseModel::default() }, 400).unwrap());
    assert!((clean - noisy).abs() < 0.03, "{clean} vs {noisy}");
}

#[test]
fn noise_average_converges() {
    let jm = trap_chain(7, 0.55);
    let times = linspace(25.0 / jm.j_max(), 100);
    let psi0 = ExcitationPattern::new(7, &[1]).unwrap();
    let run = |d| spinwave_run(&jm, &psi0, &times, d);
    let model = NoiseModel { seed: 21, ..NoiseModel::default() };
    let half = plateau(&noise_average(run, &model, 2000).unwrap());
    let full = plateau(&noise_average(run, &model, 4000).unwrap());
    assert!((half - full).abs() < 1.0 / 2000f64.sqrt(), "{half} vs {full}");
}

#[test]
fn field_offset_leaves_plateau_unchanged() {
    let jm = trap_chain(7, 0.55);
    let times = linspace(25.0 / jm.j_max(), 200);
    let psi0 = ExcitationPattern::new(7, &[1]).unwrap();
    let at = |offset| {
        let d = NoiseDraw { j_scale: 1.0, b_offset: offset };
        plateau(&exact_run(&jm, &psi0, &times, d).unwrap())
    };
    let base = at(0.0);
    for offset in [hz_to_rad(400.0), hz_to_rad(-400.0)] {
        assert!((at(offset) - base).abs() < 0.02);
    }
}

#[test]
fn shots_are_reproducible_per_stream() {
    let sz = [0.3, -0.8, 0.0, 1.0, -1.0];
    let model = NoiseModel { seed: 4, ..NoiseModel::default() };
    let a = sample_shots(&sz, &model, 300, 0).unwrap();
    assert_eq!(a, sample_shots(&sz, &model, 300, 0).unwrap());
    assert_ne!(a, sample_shots(&sz, &model, 300, 1).unwrap());
    assert_eq!(a[0].bitstring().len(), 5);
    assert!(sample_shots(&[1.5], &model, 1, 0).is_err());
}

#[test]
fn bernoulli_shots_estimate_marginals() {
    let sz = [0.3, -0.8, 0.0, 0.95, -1.0];
    let model = NoiseModel::ideal(8);
    let mut shots = sample_shots(&sz, &model, 20_000, 2).unwrap();
    let mut up = [0usize; 5];
    for s in &shots {
        for (u, &b) in up.iter_mut().zip(&s.bits) {
            *u += b as usize;
        }
    }
    for (i, &u) in up.iter().enumerate() {
        let p = (sz[i] + 1.0) / 2.0;
        let se = (p * (1.0 - p) / 20_000.0).sqrt().max(1e-12);
        assert!((u as f64 / 20_000.0 - p).abs() <= 4.0 * se + 1e-12, "site {i}");
    }
    let sel = postselect(&mut shots, 2).unwrap();
    assert_eq!(sel.accepted, shots.iter().filter(|s| s.accepted).count());
}

#[test]
fn postselection_is_unbiased() {
    let jm = trap_chain(7, 0.55);
    let h = build_full_ising(&jm, b_field()).unwrap();
    let psi0 = ExcitationPattern::new(7, &[1]).unwrap();
    let t = 8.0 / jm.j_max();
    let truth_dist = final_distribution(&h, &psi0, t, Propagation::Dense).unwrap();
    // ⟨σ^z⟩ conditioned on one excitation
    let mut mass = 0.0;
    let mut up = [0.0; 7];
    for (&s, &p) in truth_dist.states.iter().zip(&truth_dist.probabilities) {
        if s.count_ones() == 1 {
            mass += p;
            up[s.trailing_zeros() as usize] += p;
        }
    }
    let truth: Vec<f64> = up.iter().map(|u| 2.0 * u / mass - 1.0).collect();

    let model = NoiseModel {
        detection_error: 0.0,
        prep_flip_fidelity: 0.97,
        ..NoiseModel::ideal(0)
    };
    let mut hits = 0;
    let mut total = 0;
    for trial in 0..50 {
        let model = NoiseModel { seed: 1000 + trial, ..model };
        let mut shots =
            prepare_and_measure(&psi0, &model, 1000, 0, |p| final_distribution(&h, p, t, Propagation::Dense)).unwrap();
        let sel = postselect(&mut shots, 1).unwrap();
        assert!(sel.accepted_fraction > 0.9);
        for i in 0..7 {
            total += 1;
            if (sel.sz_estimate[i] - truth[i]).abs() <= 3.0 * sel.sz_stderr[i] {
                hits += 1;
            }
        }
    }
    assert!(hits as f64 >= 0.95 * total as f64, "{hits}/{total}");
}

#[test]
fn joint_sampling_preserves_the_sector() {
    let jm = trap_chain(5, 0.55);
    let h = prethermal::exact::build_xy_sector(&jm, b_field(), 2).unwrap();
    let psi0 = ExcitationPattern::new(5, &[1, 2]).unwrap();
    let dist = final_distribution(&h, &psi0, 3.0 / jm.j_max(), Propagation::Auto).unwrap();
    let shots = sample_shots_joint(&dist, &NoiseModel::ideal(2), 500, 0).unwrap();
    assert!(shots.iter().all(|s| s.excitations == 2));
    let noisy = sample_shots_joint(&dist, &NoiseModel { seed: 2, ..NoiseModel::default() }, 500, 0).unwrap();
    assert!(noisy.iter().any(|s| s.excitations != 2));
}
