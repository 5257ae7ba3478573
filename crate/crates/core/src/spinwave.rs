//! Free-boson (Holstein-Primakoff) approximation of the quench dynamics.
//!
//! Spins map to hard-core bosons, σ_i^z = 2a_i†a_i − 1, and the hard-core
//! constraint is dropped. With 𝒥 = 𝒱 diag(ν) 𝒱ᵀ and c_k = Σ_i 𝒱_ik a_i the
//! quadratic Hamiltonian is diagonalized by c_k = cosh θ_k d_k − sinh θ_k d_k†.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::exact::{ExcitationPattern, QuenchTrace};
use crate::linalg::{self, sym_eigen};

#[derive(Debug, Clone)]
pub struct SpinWaveSystem {
    nus: Vec<f64>,
    v: DMatrix<f64>,
    thetas: Vec<f64>,
    epsilons: Vec<f64>,
    b_field: f64,
}

impl SpinWaveSystem {
    pub fn n(&self) -> usize {
        self.nus.len()
    }

    /// Eigenvalues ν_k of 𝒥, ascending.
    pub fn nus(&self) -> &[f64] {
        &self.nus
    }

    /// Column k is the eigenvector of ν_k.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn b_field(&self) -> f64 {
        self.b_field
    }

    /// Groups of quasiparticle energies closer than `tol` to their neighbour.
    /// Only groups with more than one member are returned.
    pub fn degenerate_clusters(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| self.epsilons[a].total_cmp(&self.epsilons[b]));
        let sorted: Vec<f64> = order.iter().map(|&k| self.epsilons[k]).collect();
        linalg::degenerate_clusters(&sorted, tol)
            .into_iter()
            .filter(|r| r.len() > 1)
            .map(|r| order[r].to_vec())
            .collect()
    }

    fn check_pattern(&self, psi0: &ExcitationPattern) -> Result<()> {
        if psi0.n_ions() != self.n() {
            return Err(Error::domain(format!(
                "pattern for {} sites applied to a {}-site chain",
                psi0.n_ions(),
                self.n()
            )));
        }
        Ok(())
    }
}

pub fn build_spinwave(jm: &CouplingMatrix, b: f64) -> Result<SpinWaveSystem> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::domain(format!("transverse field must be positive, got {b}")));
    }
    let eig = sym_eigen(jm.j_script())?;
    let nus: Vec<f64> = eig.values.iter().copied().collect();
    if let Some((mode, &nu)) = nus.iter().enumerate().find(|(_, &nu)| b + nu <= 0.0) {
        return Err(Error::BogoliubovInstability {
            mode,
            value: b + nu,
        });
    }
    let thetas = nus
        .iter()
        .map(|&nu| if nu == 0.0 { 0.0 } else { 0.5 * (nu / (nu + 2.0 * b)).atanh() })
        .collect();
    let epsilons = nus.iter().map(|&nu| 2.0 * (b * (b + nu)).sqrt()).collect();
    Ok(SpinWaveSystem {
        nus,
        v: eig.vectors,
        thetas,
        epsilons,
        b_field: b,
    })
}

/// ⟨d_k†d_k⟩ in the initial Fock state. These are the conserved quantities of
/// the free-boson dynamics.
pub fn gge_occupations(sys: &SpinWaveSystem, psi0: &ExcitationPattern) -> Result<Vec<f64>> {
    sys.check_pattern(psi0)?;
    let n_i = psi0.occupations();
    Ok((0..sys.n())
        .map(|k| {
            let th = sys.thetas[k];
            let proj: f64 = (0..sys.n()).map(|i| sys.v[(i, k)].powi(2) * n_i[i]).sum();
            (2.0 * th).cosh() * proj + th.sinh().powi(2)
        })
        .collect())
}

/// Lagrange multiplier of one conserved mode occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GgeMultiplier {
    Finite(f64),
    /// Zero occupation: the multiplier is +∞ and the mode stays empty.
    Frozen,
}

impl GgeMultiplier {
    /// Bose occupation 1/(e^λ − 1) reproduced by this multiplier.
    pub fn occupation(self) -> f64 {
        match self {
            GgeMultiplier::Finite(l) => 1.0 / l.exp_m1(),
            GgeMultiplier::Frozen => 0.0,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            GgeMultiplier::Finite(l) => l,
            GgeMultiplier::Frozen => f64::INFINITY,
        }
    }
}

/// Inverts the Bose function mode by mode, λ_k = ln(1 + 1/occ_k).
pub fn gge_lambdas(occ: &[f64]) -> Result<Vec<GgeMultiplier>> {
    occ.iter()
        .map(|&o| {
            if !(o >= 0.0 && o.is_finite()) {
                Err(Error::domain(format!("mode occupation must be finite and non-negative, got {o}")))
            } else if o == 0.0 {
                Ok(GgeMultiplier::Frozen)
            } else {
                Ok(GgeMultiplier::Finite(o.recip().ln_1p()))
            }
        })
        .collect()
}

/// Site magnetizations of the generalized Gibbs ensemble with the given mode occupations.
pub fn gge_magnetization(sys: &SpinWaveSystem, occ: &[f64]) -> Result<Vec<f64>> {
    if occ.len() != sys.n() {
        return Err(Error::domain(format!("{} occupations for {} modes", occ.len(), sys.n())));
    }
    let per_mode: Vec<f64> = (0..sys.n())
        .map(|k| {
            let th = sys.thetas[k];
            (2.0 * th).cosh() * occ[k] + th.sinh().powi(2)
        })
        .collect();
    Ok((0..sys.n())
        .map(|i| {
            let a: f64 = (0..sys.n()).map(|k| sys.v[(i, k)].powi(2) * per_mode[k]).sum();
            2.0 * a - 1.0
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgeState {
    pub d_occupations: Vec<f64>,
    pub lambdas: Vec<GgeMultiplier>,
    pub sz_gge: Vec<f64>,
}

impl GgeState {
    pub fn new(sys: &SpinWaveSystem, psi0: &ExcitationPattern) -> Result<Self> {
        let d_occupations = gge_occupations(sys, psi0)?;
        let lambdas = gge_lambdas(&d_occupations)?;
        let sz_gge = gge_magnetization(sys, &d_occupations)?;
        Ok(GgeState {
            d_occupations,
            lambdas,
            sz_gge,
        })
    }
}

/// a_i(t) = Σ_j u_ij a_j + w_ij a_j†.
#[derive(Debug, Clone)]
pub struct HeisenbergPropagator {
    pub u: DMatrix<Complex64>,
    pub w: DMatrix<Complex64>,
    pub time: f64,
}

impl HeisenbergPropagator {
    /// max |u u† − w w† − I|, zero when the bosonic commutators are preserved.
    pub fn symplectic_defect(&self) -> f64 {
        let n = self.u.nrows();
        let m = &self.u * self.u.adjoint() - &self.w * self.w.adjoint() - DMatrix::<Complex64>::identity(n, n);
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ⟨a_i†a_i⟩(t) for an initial Fock state with occupations `n`.
    pub fn number(&self, i: usize, n: &[f64]) -> f64 {
        n.iter()
            .enumerate()
            .map(|(j, &nj)| self.u[(i, j)].norm_sqr() * nj + self.w[(i, j)].norm_sqr() * (nj + 1.0))
            .sum()
    }

    /// ⟨a_i a_j⟩(t) for an initial Fock state with occupations `n`.
    pub fn anomalous(&self, i: usize, j: usize, n: &[f64]) -> Complex64 {
        n.iter()
            .enumerate()
            .map(|(k, &nk)| self.u[(i, k)] * self.w[(j, k)] * (nk + 1.0) + self.w[(i, k)] * self.u[(j, k)] * nk)
            .sum()
    }
}

pub fn propagator(sys: &SpinWaveSystem, t: f64) -> Result<HeisenbergPropagator> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be finite and non-negative, got {t}")));
    }
    let n = sys.n();
    let mut u_diag = Vec::with_capacity(n);
    let mut w_diag = Vec::with_capacity(n);
    for k in 0..n {
        let (ch, sh) = (sys.thetas[k].cosh(), sys.thetas[k].sinh());
        let minus = Complex64::from_polar(1.0, -sys.epsilons[k] * t);
        let plus = minus.conj();
        u_diag.push(minus * ch * ch - plus * sh * sh);
        w_diag.push((minus - plus) * ch * sh);
    }
    let mix = |d: &[Complex64]| {
        DMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| d[k] * (sys.v[(i, k)] * sys.v[(j, k)]))
                .sum::<Complex64>()
        })
    };
    Ok(HeisenbergPropagator {
        u: mix(&u_diag),
        w: mix(&w_diag),
        time: t,
    })
}

/// Site magnetizations at each requested time. Time points are evaluated in parallel.
pub fn evolve_spinwave(sys: &SpinWaveSystem, psi0: &ExcitationPattern, times: &[f64]) -> Result<QuenchTrace> {
    sys.check_pattern(psi0)?;
    let n_i = psi0.occupations();
    let sz = times
        .par_iter()
        .map(|&t| {
            let p = propagator(sys, t)?;
            Ok((0..sys.n()).map(|i| 2.0 * p.number(i, &n_i) - 1.0).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    QuenchTrace::from_sz(times.to_vec(), sz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub m: usize,
    pub n: usize,
    /// rad/s
    pub gap: f64,
    pub weight: f64,
}

/// Energy differences between all pairs of single-excitation eigenstates,
/// weighted by the initial state's overlap with both.
///
/// In the number-conserving sector the eigenstates are the columns of 𝒱 with
/// energies 2B + ν_m, so the gaps are |ν_m − ν_n|.
pub fn pair_gap_spectrum(sys: &SpinWaveSystem, psi0: &ExcitationPattern) -> Result<Vec<PairGap>> {
    sys.check_pattern(psi0)?;
    if psi0.excitations() != 1 {
        return Err(Error::UnsupportedSector(format!(
            "pair gaps need a single excitation, pattern {psi0} has {}",
            psi0.excitations()
        )));
    }
    let site = psi0.flipped()[0] - 1;
    let p: Vec<f64> = (0..sys.n()).map(|m| sys.v[(site, m)].powi(2)).collect();
    let mut gaps = Vec::with_capacity(sys.n() * (sys.n().saturating_sub(1)) / 2);
    for m in 0..sys.n() {
        for n in m + 1..sys.n() {
            gaps.push(PairGap {
                m,
                n,
                gap: (sys.nus[m] - sys.nus[n]).abs(),
                weight: p[m] * p[n],
            });
        }
    }
    Ok(gaps)
}

/// Smallest gap among pairs whose weight exceeds `min_weight`.
pub fn min_weighted_gap(gaps: &[PairGap], min_weight: f64) -> Option<f64> {
    gaps.iter()
        .filter(|g| g.weight > min_weight)
        .map(|g| g.gap)
        .min_by(f64::total_cmp)
}
