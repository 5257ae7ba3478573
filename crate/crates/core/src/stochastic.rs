//! Emulation of experimental imperfections: slow coupling and field drifts
//! averaged over trajectories, state-preparation failures, detection errors
//! and post-selection on the excitation number.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ExcitationPattern, QuenchTrace};
use crate::units::hz_to_rad;

/// Shot sampling draws from streams offset by this much so they never share a
/// stream with the coupling-noise samples.
pub const SHOT_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of the global coupling scale factor.
    pub j_relative_sigma: f64,
    /// Standard deviation of the global field offset, rad/s.
    pub b_offset_sigma: f64,
    /// Probability that each targeted spin is actually flipped.
    pub prep_flip_fidelity: f64,
    /// Probability that a measured bit is read wrong.
    pub detection_error: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            j_relative_sigma: 0.12,
            b_offset_sigma: hz_to_rad(30.0),
            prep_flip_fidelity: 0.97,
            detection_error: 0.05,
            seed: 0,
        }
    }
}

impl NoiseModel {
    /// No drifts and perfect preparation and detection.
    pub fn ideal(seed: u64) -> Self {
        NoiseModel {
            j_relative_sigma: 0.0,
            b_offset_sigma: 0.0,
            prep_flip_fidelity: 1.0,
            detection_error: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::domain(format!("{what} out of range: {v}")))
            }
        };
        check(self.j_relative_sigma >= 0.0 && self.j_relative_sigma.is_finite(), "j_relative_sigma", self.j_relative_sigma)?;
        check(self.b_offset_sigma >= 0.0 && self.b_offset_sigma.is_finite(), "b_offset_sigma", self.b_offset_sigma)?;
        check(
            self.prep_flip_fidelity > 0.0 && self.prep_flip_fidelity <= 1.0,
            "prep_flip_fidelity",
            self.prep_flip_fidelity,
        )?;
        check(
            (0.0..1.0).contains(&self.detection_error),
            "detection_error",
            self.detection_error,
        )
    }

    fn is_static(&self) -> bool {
        self.j_relative_sigma == 0.0 && self.b_offset_sigma == 0.0
    }
}

/// Generator for one Monte-Carlo sample, independent of scheduling order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameters of one noisy trajectory: J → j_scale·J and B → B + b_offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraw {
    pub j_scale: f64,
    pub b_offset: f64,
}

impl NoiseDraw {
    pub const NONE: NoiseDraw = NoiseDraw {
        j_scale: 1.0,
        b_offset: 0.0,
    };
}

/// The draw for sample `index`. The scale is Normal(1, σ) truncated to
/// positive values by resampling.
pub fn draw_noise(model: &NoiseModel, index: u64) -> Result<NoiseDraw> {
    let mut rng = stream_rng(model.seed, index);
    let j_scale = if model.j_relative_sigma > 0.0 {
        let dist = Normal::new(1.0, model.j_relative_sigma).map_err(|e| Error::domain(e.to_string()))?;
        loop {
            let s: f64 = dist.sample(&mut rng);
            if s > 0.0 {
                break s;
            }
        }
    } else {
        1.0
    };
    let b_offset = if model.b_offset_sigma > 0.0 {
        Normal::new(0.0, model.b_offset_sigma)
            .map_err(|e| Error::domain(e.to_string()))?
            .sample(&mut rng)
    } else {
        0.0
    };
    Ok(NoiseDraw { j_scale, b_offset })
}

/// Averages `base_run` over `n_samples` slow-noise draws. Without any drift
/// the base run is returned unchanged.
pub fn noise_average<F>(base_run: F, model: &NoiseModel, n_samples: usize) -> Result<QuenchTrace>
where
    F: Fn(NoiseDraw) -> Result<QuenchTrace> + Sync,
{
    model.validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidSize {
            what: "noise sample count",
            got: 0,
            min: 1,
        });
    }
    if model.is_static() {
        return base_run(NoiseDraw::NONE);
    }
    let traces = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| base_run(draw_noise(model, k)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuenchTrace::mean(&traces)?.with_noise_samples(n_samples))
}

/// Leaves each targeted spin unflipped with probability 1 − prep_flip_fidelity.
pub fn corrupt_pattern<R: Rng>(pattern: &ExcitationPattern, model: &NoiseModel, rng: &mut R) -> Result<ExcitationPattern> {
    let kept: Vec<usize> = pattern
        .flipped()
        .iter()
        .copied()
        .filter(|_| model.prep_flip_fidelity >= 1.0 || rng.random::<f64>() < model.prep_flip_fidelity)
        .collect();
    ExcitationPattern::new(pattern.n_ions(), &kept)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// `bits[i]` is the outcome at site i + 1, true for up.
    pub bits: Vec<bool>,
    pub excitations: usize,
    pub accepted: bool,
}

impl ShotRecord {
    fn new(bits: Vec<bool>) -> Self {
        let excitations = bits.iter().filter(|&&b| b).count();
        ShotRecord {
            bits,
            excitations,
            accepted: false,
        }
    }

    /// '1' for up, site 1 first.
    pub fn bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

fn detect<R: Rng>(mut bits: Vec<bool>, model: &NoiseModel, rng: &mut R) -> ShotRecord {
    if model.detection_error > 0.0 {
        for b in &mut bits {
            if rng.random::<f64>() < model.detection_error {
                *b = !*b;
            }
        }
    }
    ShotRecord::new(bits)
}

/// Independent Bernoulli outcome per site with p_i = (sz_i + 1)/2, then
/// detection errors. Correlations between sites are lost, so post-selecting
/// these shots does not give conditional expectations of a correlated state;
/// use [`sample_shots_joint`] for that.
pub fn sample_shots(sz: &[f64], model: &NoiseModel, n_shots: usize, stream: u64) -> Result<Vec<ShotRecord>> {
    model.validate()?;
    let probs = sz
        .iter()
        .map(|&s| {
            let p = (s + 1.0) / 2.0;
            if (-1e-12..=1.0 + 1e-12).contains(&p) {
                Ok(p.clamp(0.0, 1.0))
            } else {
                Err(Error::domain(format!("magnetization {s} outside [-1, 1]")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut rng = stream_rng(model.seed, SHOT_STREAM_BASE + stream);
    Ok((0..n_shots)
        .map(|_| {
            let bits = probs.iter().map(|&p| rng.random::<f64>() < p).collect();
            detect(bits, model, &mut rng)
        })
        .collect())
}

/// Probability distribution over z-basis bitmasks (bit i − 1 is site i).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisDistribution {
    pub n_sites: usize,
    pub states: Vec<u64>,
    pub probabilities: Vec<f64>,
}

/// Samples measurement outcomes from the joint distribution of a state.
pub fn sample_shots_joint(
    dist: &BasisDistribution,
    model: &NoiseModel,
    n_shots: usize,
    stream: u64,
) -> Result<Vec<ShotRecord>> {
    model.validate()?;
    let mut rng = stream_rng(model.seed, SHOT_STREAM_BASE + stream);
    draw_joint(dist, model, n_shots, &mut rng)
}

fn draw_joint<R: Rng>(dist: &BasisDistribution, model: &NoiseModel, n_shots: usize, rng: &mut R) -> Result<Vec<ShotRecord>> {
    if dist.states.len() != dist.probabilities.len() {
        return Err(Error::domain("state and probability lists differ in length"));
    }
    let index = WeightedIndex::new(&dist.probabilities).map_err(|e| Error::domain(format!("bad distribution: {e}")))?;
    Ok((0..n_shots)
        .map(|_| {
            let mask = dist.states[index.sample(rng)];
            let bits = (0..dist.n_sites).map(|i| mask >> i & 1 == 1).collect();
            detect(bits, model, rng)
        })
        .collect())
}

/// Full shot pipeline: each shot prepares a possibly corrupted version of
/// `pattern`, draws an outcome from `final_state(prepared)`, then applies
/// detection errors. Distributions are computed once per distinct prepared
/// pattern.
pub fn prepare_and_measure<F>(
    pattern: &ExcitationPattern,
    model: &NoiseModel,
    n_shots: usize,
    stream: u64,
    final_state: F,
) -> Result<Vec<ShotRecord>>
where
    F: Fn(&ExcitationPattern) -> Result<BasisDistribution>,
{
    model.validate()?;
    let mut rng = stream_rng(model.seed, SHOT_STREAM_BASE + stream);
    let mut cache: BTreeMap<Vec<usize>, BasisDistribution> = BTreeMap::new();
    let mut shots = Vec::with_capacity(n_shots);
    for _ in 0..n_shots {
        let prepared = corrupt_pattern(pattern, model, &mut rng)?;
        let key = prepared.flipped().to_vec();
        if !cache.contains_key(&key) {
            cache.insert(key.clone(), final_state(&prepared)?);
        }
        shots.extend(draw_joint(&cache[&key], model, 1, &mut rng)?);
    }
    Ok(shots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSelection {
    pub target: usize,
    pub accepted: usize,
    pub total: usize,
    pub accepted_fraction: f64,
    pub sz_estimate: Vec<f64>,
    /// Binomial standard error of each estimate.
    pub sz_stderr: Vec<f64>,
}

/// Keeps shots with exactly `k` excitations and estimates ⟨σ_i^z⟩ from them.
/// Marks each record's `accepted` flag.
pub fn postselect(shots: &mut [ShotRecord], k: usize) -> Result<PostSelection> {
    let total = shots.len();
    if total == 0 {
        return Err(Error::domain("no shots to post-select"));
    }
    let n_sites = shots[0].bits.len();
    if shots.iter().any(|s| s.bits.len() != n_sites) {
        return Err(Error::domain("shots of different lengths"));
    }
    let mut up = vec![0usize; n_sites];
    let mut accepted = 0usize;
    for shot in shots.iter_mut() {
        shot.accepted = shot.excitations == k;
        if shot.accepted {
            accepted += 1;
            for (u, &b) in up.iter_mut().zip(&shot.bits) {
                *u += b as usize;
            }
        }
    }
    let accepted_fraction = accepted as f64 / total as f64;
    if accepted == 0 {
        return Err(Error::EmptySelection { accepted_fraction });
    }
    let n = accepted as f64;
    let freqs: Vec<f64> = up.iter().map(|&u| u as f64 / n).collect();
    Ok(PostSelection {
        target: k,
        accepted,
        total,
        accepted_fraction,
        sz_estimate: freqs.iter().map(|f| 2.0 * f - 1.0).collect(),
        sz_stderr: freqs.iter().map(|f| 2.0 * (f * (1.0 - f) / n).sqrt()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(sz: f64) -> QuenchTrace {
        QuenchTrace::from_sz(vec![0.0, 1.0], vec![vec![sz, -1.0], vec![-1.0, sz]]).unwrap()
    }

    #[test]
    fn static_model_returns_base_run() {
        let model = NoiseModel::ideal(3);
        let out = noise_average(|d| Ok(trace(d.j_scale)), &model, 10).unwrap();
        assert_eq!(out, trace(1.0));
        assert!(noise_average(|_| Ok(trace(1.0)), &model, 0).is_err());
    }

    #[test]
    fn draws_are_positive_and_reproducible() {
        let model = NoiseModel {
            j_relative_sigma: 0.7,
            ..NoiseModel::default()
        };
        for k in 0..500 {
            let a = draw_noise(&model, k).unwrap();
            assert!(a.j_scale > 0.0);
            assert_eq!(a, draw_noise(&model, k).unwrap());
        }
        assert_ne!(draw_noise(&model, 0).unwrap(), draw_noise(&model, 1).unwrap());
    }

    #[test]
    fn averaging_records_sample_count() {
        let model = NoiseModel::default();
        let out = noise_average(|d| Ok(trace(d.j_scale.min(1.0))), &model, 8).unwrap();
        assert_eq!(out.noise_samples(), Some(8));
    }

    #[test]
    fn perfect_detection_reads_input() {
        let model = NoiseModel::ideal(1);
        let shots = sample_shots(&[1.0, -1.0, -1.0], &model, 20, 0).unwrap();
        assert!(shots.iter().all(|s| s.bitstring() == "100"));
    }

    #[test]
    fn detection_error_rate() {
        let model = NoiseModel {
            detection_error: 0.05,
            ..NoiseModel::ideal(11)
        };
        let shots = sample_shots(&[1.0], &model, 100_000, 0).unwrap();
        let up = shots.iter().filter(|s| s.bits[0]).count() as f64 / 1e5;
        assert!((up - 0.95).abs() < 0.003, "{up}");
    }

    #[test]
    fn prep_failures_show_in_acceptance() {
        let model = NoiseModel {
            prep_flip_fidelity: 0.85,
            ..NoiseModel::ideal(5)
        };
        let pattern = ExcitationPattern::new(7, &[2, 4]).unwrap();
        let mut shots = prepare_and_measure(&pattern, &model, 20_000, 0, |p| {
            Ok(BasisDistribution {
                n_sites: 7,
                states: vec![p.mask()?],
                probabilities: vec![1.0],
            })
        })
        .unwrap();
        let sel = postselect(&mut shots, 2).unwrap();
        assert!((sel.accepted_fraction - 0.85 * 0.85).abs() < 0.01);
        assert!(shots.iter().all(|s| s.accepted == (s.excitations == 2)));
        assert!(matches!(postselect(&mut shots, 8), Err(Error::EmptySelection { .. })));
    }

    #[test]
    fn validation() {
        assert!(NoiseModel::default().validate().is_ok());
        let bad = NoiseModel {
            detection_error: 1.0,
            ..NoiseModel::default()
        };
        assert!(bad.validate().is_err());
        let bad = NoiseModel {
            prep_flip_fidelity: 0.0,
            ..NoiseModel::default()
        };
        assert!(bad.validate().is_err());
    }
}
