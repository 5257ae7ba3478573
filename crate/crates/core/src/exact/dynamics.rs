use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::HamiltonianRep;
use super::krylov::KrylovStepper;
use super::{ExcitationPattern, QuenchTrace};
use crate::error::{Error, Result};
use crate::linalg::{degenerate_clusters, SymEigen};
use crate::spinwave::PairGap;
use crate::stochastic::BasisDistribution;

/// Largest dimension handled by full diagonalization.
pub const DENSE_DIM_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    /// Dense up to [`DENSE_DIM_LIMIT`], Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

impl Propagation {
    fn resolve(self, dim: usize) -> Result<Propagation> {
        match self {
            Propagation::Auto if dim <= DENSE_DIM_LIMIT => Ok(Propagation::Dense),
            Propagation::Auto => Ok(Propagation::Krylov),
            Propagation::Dense if dim > DENSE_DIM_LIMIT => Err(too_large(dim)),
            other => Ok(other),
        }
    }
}

fn too_large(dim: usize) -> Error {
    Error::TooLarge {
        what: "dimension for dense diagonalization",
        got: dim,
        cap: DENSE_DIM_LIMIT,
        hint: "",
    }
}

pub fn initial_state(h: &HamiltonianRep, psi0: &ExcitationPattern) -> Result<Vec<Complex64>> {
    let idx = h.state_index(psi0)?;
    let mut psi = vec![Complex64::default(); h.dimension()];
    psi[idx] = Complex64::new(1.0, 0.0);
    Ok(psi)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::domain("times must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("times must be non-decreasing"));
    }
    Ok(())
}

/// Eigenbasis coefficients of a state, split into real and imaginary parts.
fn eigen_coefficients(spec: &SymEigen, psi0: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
    let re = DVector::from_iterator(psi0.len(), psi0.iter().map(|z| z.re));
    let im = DVector::from_iterator(psi0.len(), psi0.iter().map(|z| z.im));
    (spec.vectors.tr_mul(&re), spec.vectors.tr_mul(&im))
}

fn dense_state(spec: &SymEigen, coef: &(DVector<f64>, DVector<f64>), t: f64) -> Vec<Complex64> {
    let (cr, ci) = coef;
    let mut re = DVector::zeros(cr.len());
    let mut im = DVector::zeros(cr.len());
    for k in 0..cr.len() {
        let (s, c) = (spec.values[k] * t).sin_cos();
        // (cr + i ci)(cos − i sin)
        re[k] = cr[k] * c + ci[k] * s;
        im[k] = ci[k] * c - cr[k] * s;
    }
    let re = &spec.vectors * re;
    let im = &spec.vectors * im;
    re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
}

/// Calls `observe(k, ψ(times[k]))` for each time in order, with
/// ψ(t) = e^{−iHt} ψ₀. Times must be non-negative and non-decreasing.
pub fn propagate<F>(h: &HamiltonianRep, psi0: &[Complex64], times: &[f64], method: Propagation, mut observe: F) -> Result<()>
where
    F: FnMut(usize, &[Complex64]),
{
    check_times(times)?;
    if psi0.len() != h.dimension() {
        return Err(Error::Basis(format!(
            "state of length {} for a {}-dimensional Hamiltonian",
            psi0.len(),
            h.dimension()
        )));
    }
    match method.resolve(h.dimension())? {
        Propagation::Krylov => {
            let mut stepper = KrylovStepper::new(h.matrix());
            let mut psi = psi0.to_vec();
            let mut now = 0.0;
            for (k, &t) in times.iter().enumerate() {
                stepper.advance(&mut psi, t - now)?;
                now = t;
                observe(k, &psi);
            }
        }
        _ => {
            let spec = h.spectrum()?;
            let coef = eigen_coefficients(spec, psi0);
            for (k, &t) in times.iter().enumerate() {
                if t == 0.0 {
                    observe(k, psi0);
                } else {
                    observe(k, &dense_state(spec, &coef, t));
                }
            }
        }
    }
    Ok(())
}

/// ⟨σ_i^z⟩ for every site.
pub fn site_sz(h: &HamiltonianRep, psi: &[Complex64]) -> Vec<f64> {
    let n = h.n_sites();
    let mut up = vec![0.0; n];
    let mut total = 0.0;
    for (&mask, z) in h.basis().iter().zip(psi) {
        let p = z.norm_sqr();
        total += p;
        for (i, u) in up.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *u += p;
            }
        }
    }
    up.iter().map(|u| 2.0 * u - total).collect()
}

/// z-basis outcome probabilities of ψ(t) for a quench from `psi0`.
pub fn final_distribution(h: &HamiltonianRep, psi0: &ExcitationPattern, t: f64, method: Propagation) -> Result<BasisDistribution> {
    let start = initial_state(h, psi0)?;
    let mut probabilities = Vec::new();
    propagate(h, &start, &[t], method, |_, psi| {
        probabilities = psi.iter().map(|z| z.norm_sqr()).collect();
    })?;
    Ok(BasisDistribution {
        n_sites: h.n_sites(),
        states: h.basis().to_vec(),
        probabilities,
    })
}

/// ⟨ψ|H|ψ⟩
pub fn energy(h: &HamiltonianRep, psi: &[Complex64]) -> f64 {
    let mut hpsi = vec![Complex64::default(); psi.len()];
    h.matrix().apply(psi, &mut hpsi);
    psi.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum()
}

pub fn evolve(h: &HamiltonianRep, psi0: &ExcitationPattern, times: &[f64]) -> Result<QuenchTrace> {
    evolve_with(h, psi0, times, Propagation::Auto)
}

pub fn evolve_with(
    h: &HamiltonianRep,
    psi0: &ExcitationPattern,
    times: &[f64],
    method: Propagation,
) -> Result<QuenchTrace> {
    let start = initial_state(h, psi0)?;
    let sz = match method.resolve(h.dimension())? {
        Propagation::Krylov => {
            let mut rows = Vec::with_capacity(times.len());
            propagate(h, &start, times, Propagation::Krylov, |_, psi| rows.push(site_sz(h, psi)))?;
            rows
        }
        _ => {
            check_times(times)?;
            let spec = h.spectrum()?;
            let coef = eigen_coefficients(spec, &start);
            times
                .par_iter()
                .map(|&t| match t {
                    0.0 => site_sz(h, &start),
                    _ => site_sz(h, &dense_state(spec, &coef, t)),
                })
                .collect()
        }
    };
    QuenchTrace::from_sz(times.to_vec(), sz)
}

/// Infinite-time average of ⟨σ_i^z⟩. Degenerate eigenspaces are handled by
/// projecting the initial state onto each one as a block.
pub fn diagonal_ensemble(h: &HamiltonianRep, psi0: &ExcitationPattern) -> Result<Vec<f64>> {
    if h.dimension() > DENSE_DIM_LIMIT {
        return Err(too_large(h.dimension()));
    }
    let s0 = h.state_index(psi0)?;
    let spec = h.spectrum()?;
    let values = spec.values.as_slice();
    let scale = values.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
    let mut sz = vec![0.0; h.n_sites()];
    for block in degenerate_clusters(values, 1e-9 * scale) {
        let mut phi = DVector::<f64>::zeros(h.dimension());
        for n in block {
            phi.axpy(spec.vectors[(s0, n)], &spec.vectors.column(n), 1.0);
        }
        let psi: Vec<Complex64> = phi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for (acc, s) in sz.iter_mut().zip(site_sz(h, &psi)) {
            *acc += s;
        }
    }
    Ok(sz)
}

/// max_t |n(t) − n(0)| for the expected number of up spins.
pub fn excitation_drift(trace: &QuenchTrace) -> Result<f64> {
    let n = trace.n_excitations();
    let first = *n.first().ok_or_else(|| Error::domain("empty trace"))?;
    Ok(n.iter().map(|x| (x - first).abs()).fold(0.0, f64::max))
}

/// Energy differences between all pairs of eigenstates of `h` that overlap the
/// initial state, weighted by both overlaps. Pairs with weight below 1e-30 are
/// dropped.
pub fn full_pair_gaps(h: &HamiltonianRep, psi0: &ExcitationPattern) -> Result<Vec<PairGap>> {
    if h.dimension() > DENSE_DIM_LIMIT {
        return Err(too_large(h.dimension()));
    }
    let s0 = h.state_index(psi0)?;
    let spec = h.spectrum()?;
    let p: Vec<f64> = (0..h.dimension()).map(|n| spec.vectors[(s0, n)].powi(2)).collect();
    let mut gaps = Vec::new();
    for m in 0..p.len() {
        for n in m + 1..p.len() {
            let weight = p[m] * p[n];
            if weight >= 1e-30 {
                gaps.push(PairGap {
                    m,
                    n,
                    gap: (spec.values[m] - spec.values[n]).abs(),
                    weight,
                });
            }
        }
    }
    Ok(gaps)
}
