//! Spin-spin coupling matrices, the power-law exponent fit, and the
//! single-excitation potential that emerges from the non-uniform diagonal.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, Geometry, PhononModes, TrapConfig};
use crate::linalg;
use crate::units;

/// Symmetric coupling matrix J (rad/s), kept together with 𝒥, its copy with
/// the diagonal zeroed.
///
/// The diagonal of J drops out of the Ising Hamiltonian but is what shapes
/// the effective potential, so it is retained whenever the source provides
/// one.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    j: DMatrix<f64>,
    j_script: DMatrix<f64>,
    j_max: f64,
    alpha_fit: Option<f64>,
}

impl CouplingMatrix {
    /// Wraps a full matrix. Rejects asymmetry beyond 1e-12 relative and then
    /// symmetrizes exactly.
    pub fn from_full(j: DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        if n != j.ncols() {
            return Err(Error::domain(format!("coupling matrix is {}x{}", n, j.ncols())));
        }
        if n == 0 {
            return Err(Error::InvalidSize {
                what: "coupling matrix",
                got: n,
                min: 1,
            });
        }
        if j.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("coupling matrix has non-finite entries"));
        }
        let scale = j.amax().max(f64::MIN_POSITIVE);
        if linalg::asymmetry(&j) > 1e-12 * scale {
            return Err(Error::domain("coupling matrix is not symmetric"));
        }
        let j = (&j + j.transpose()) * 0.5;
        let mut j_script = j.clone();
        j_script.fill_diagonal(0.0);
        let mut j_max = 0.0_f64;
        for c in 0..n {
            for r in 0..c {
                j_max = j_max.max(j[(r, c)].abs());
            }
        }
        Ok(CouplingMatrix {
            j,
            j_script,
            j_max,
            alpha_fit: None,
        })
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    /// Full matrix including the diagonal J_ii.
    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    /// 𝒥: off-diagonal couplings with an exactly zero diagonal.
    pub fn j_script(&self) -> &DMatrix<f64> {
        &self.j_script
    }

    /// Largest off-diagonal magnitude.
    pub fn j_max(&self) -> f64 {
        self.j_max
    }

    pub fn alpha_fit(&self) -> Option<f64> {
        self.alpha_fit
    }

    pub fn has_physical_diagonal(&self) -> bool {
        self.j.diagonal().iter().any(|&x| x != 0.0)
    }

    /// Runs [`alpha_fit`] and stores the result.
    pub fn with_alpha_fit(mut self) -> Result<Self> {
        self.alpha_fit = Some(alpha_fit(&self)?);
        Ok(self)
    }

    /// Multiplies every coupling by `s` (the diagonal included).
    pub fn scaled(&self, s: f64) -> Self {
        CouplingMatrix {
            j: &self.j * s,
            j_script: &self.j_script * s,
            j_max: self.j_max * s.abs(),
            alpha_fit: self.alpha_fit,
        }
    }

    /// Rescales so that the largest off-diagonal magnitude equals `j_max`.
    pub fn normalized(&self, j_max: f64) -> Result<Self> {
        if self.j_max == 0.0 {
            return Err(Error::domain("cannot normalize an all-zero coupling matrix"));
        }
        Ok(self.scaled(j_max / self.j_max))
    }

    /// True when J_ij = J_{N+1-i,N+1-j} within `tol` relative to J_max.
    pub fn is_inversion_symmetric(&self, tol: f64) -> bool {
        let n = self.n();
        let scale = self.j.amax().max(f64::MIN_POSITIVE);
        (0..n).all(|i| {
            (0..n).all(|k| (self.j[(i, k)] - self.j[(n - 1 - i, n - 1 - k)]).abs() <= tol * scale)
        })
    }
}

/// J_ij = j_max/|i−j|^α with a zero diagonal.
pub fn power_law_couplings(n: usize, j_max: f64, alpha: f64) -> Result<CouplingMatrix> {
    if n < 2 {
        return Err(Error::InvalidSize {
            what: "power-law chain",
            got: n,
            min: 2,
        });
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::domain(format!("alpha must be >= 0, got {alpha}")));
    }
    if !(j_max.is_finite() && j_max > 0.0) {
        return Err(Error::domain(format!("j_max must be > 0, got {j_max}")));
    }
    let j = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            0.0
        } else {
            j_max / ((r as f64 - c as f64).abs()).powf(alpha)
        }
    });
    CouplingMatrix::from_full(j)
}

fn denominators(cfg: &TrapConfig, modes: &PhononModes) -> Result<Vec<f64>> {
    let omega_sq: Vec<f64> = modes
        .kappas
        .iter()
        .enumerate()
        .map(|(mode, &kappa)| {
            let w2 = cfg.omega_x * cfg.omega_x - cfg.omega_z * cfg.omega_z * kappa;
            if w2 <= 0.0 {
                Err(Error::Unstable { mode, omega_sq: w2 })
            } else {
                Ok(w2)
            }
        })
        .collect::<Result<_>>()?;
    let omegas: Vec<f64> = omega_sq.iter().map(|w| w.sqrt()).collect();
    lattice::check_resonance(cfg, &omegas)?;
    Ok(omega_sq.iter().map(|w2| cfg.mu * cfg.mu - w2).collect())
}

/// Couplings mediated by the transverse modes, diagonal included:
/// J_ij = ħ(δk)²Ω²/(2M) Σ_m V_im V_jm /(μ² − ω_m²).
pub fn ion_couplings(cfg: &TrapConfig, modes: &PhononModes) -> Result<CouplingMatrix> {
    cfg.validate()?;
    if modes.n() != cfg.n_ions {
        return Err(Error::domain(format!(
            "mode set has {} modes for {} ions",
            modes.n(),
            cfg.n_ions
        )));
    }
    let denom = denominators(cfg, modes)?;
    let pref = cfg.coupling_prefactor();
    let v = &modes.mode_matrix;
    let n = cfg.n_ions;
    let mut j = DMatrix::zeros(n, n);
    for (m, d) in denom.iter().enumerate() {
        let col = v.column(m);
        let w = pref / d;
        for c in 0..n {
            for r in 0..=c {
                j[(r, c)] += w * col[r] * col[c];
            }
        }
    }
    for c in 0..n {
        for r in 0..c {
            j[(c, r)] = j[(r, c)];
        }
    }
    CouplingMatrix::from_full(j)
}

/// Couplings for `cfg` from its exact modes, with the fitted exponent attached
/// when the fit is defined.
pub fn trap_couplings(cfg: &TrapConfig) -> Result<CouplingMatrix> {
    let modes = lattice::exact_modes(cfg)?;
    let jm = ion_couplings(cfg, &modes)?;
    Ok(match alpha_fit(&jm) {
        Ok(a) => CouplingMatrix {
            alpha_fit: Some(a),
            ..jm
        },
        Err(_) => jm,
    })
}

/// λ_m = ħ(δk)²Ω²/(2M(μ² − ω_x² + ω_z² κ_m)), the eigenvalues of J in the
/// uniform-spacing approximation.
pub fn eigen_spectrum_lambda(cfg: &TrapConfig, modes: &PhononModes) -> Result<Vec<f64>> {
    cfg.validate()?;
    let pref = cfg.coupling_prefactor();
    let base = cfg.mu * cfg.mu - cfg.omega_x * cfg.omega_x;
    let wz2 = cfg.omega_z * cfg.omega_z;
    modes
        .kappas
        .iter()
        .enumerate()
        .map(|(mode, &kappa)| {
            let d = base + wz2 * kappa;
            let omega_sq = cfg.omega_x * cfg.omega_x - wz2 * kappa;
            if d.abs() <= 2.0 * 1e-6 * omega_sq.abs() {
                Err(Error::Resonance {
                    mode,
                    mu: cfg.mu,
                    omega: omega_sq.abs().sqrt(),
                })
            } else {
                Ok(pref / d)
            }
        })
        .collect()
}

/// Least-squares exponent α from log|J_ij| against log|i−j| over all i<j.
pub fn alpha_fit(jm: &CouplingMatrix) -> Result<f64> {
    let n = jm.n();
    if n < 3 {
        return Err(Error::InvalidSize {
            what: "alpha fit",
            got: n,
            min: 3,
        });
    }
    let mut xs = Vec::with_capacity(n * (n - 1) / 2);
    let mut ys = Vec::with_capacity(n * (n - 1) / 2);
    for c in 1..n {
        for r in 0..c {
            let v = jm.j[(r, c)];
            if v <= 0.0 {
                return Err(Error::Fit(format!("J[{},{}] = {v} is not positive", r + 1, c + 1)));
            }
            xs.push(((c - r) as f64).ln());
            ys.push(v.ln());
        }
    }
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(-sxy / sxx)
}

/// One point of a detuning scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaScanPoint {
    pub detuning_ratio: f64,
    pub mu: f64,
    pub alpha: f64,
    pub j_max: f64,
}

/// Sweeps μ above the centre-of-mass mode, μ² = ω_x² + r ω_z² for each `r` in
/// `ratios`, and fits α at each point. Points within the resonance guard of a
/// mode are left out.
pub fn alpha_scan(cfg: &TrapConfig, ratios: &[f64]) -> Result<Vec<AlphaScanPoint>> {
    let modes = lattice::transverse_modes(cfg)?;
    scan_with_modes(cfg, &modes, ratios)
}

fn scan_with_modes(cfg: &TrapConfig, modes: &PhononModes, ratios: &[f64]) -> Result<Vec<AlphaScanPoint>> {
    ratios
        .par_iter()
        .filter_map(|&r| {
            let point = cfg.clone().with_detuning_ratio(r);
            match ion_couplings(&point, modes) {
                Err(Error::Resonance { .. }) => None,
                Err(e) => Some(Err(e)),
                Ok(jm) => Some(alpha_fit(&jm).map(|alpha| AlphaScanPoint {
                    detuning_ratio: r,
                    mu: point.mu,
                    alpha,
                    j_max: jm.j_max,
                })),
            }
        })
        .collect()
}

/// Log-spaced detuning ratios from 1e-3 to 1e3.
pub fn default_scan_ratios() -> Vec<f64> {
    let count = 121;
    (0..count)
        .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (count - 1) as f64))
        .collect()
}

/// Picks μ so that the fitted exponent equals `target`: a coarse scan over
/// [`default_scan_ratios`] followed by bisection between the bracketing grid
/// points.
pub fn tune_alpha(cfg: &TrapConfig, target: f64) -> Result<TrapConfig> {
    let modes = lattice::transverse_modes(cfg)?;
    let fit_at = |r: f64| -> Result<f64> {
        alpha_fit(&ion_couplings(&cfg.clone().with_detuning_ratio(r), &modes)?)
    };
    let scan = scan_with_modes(cfg, &modes, &default_scan_ratios())?;
    let bracket = scan
        .windows(2)
        .find(|w| (w[0].alpha - target) * (w[1].alpha - target) <= 0.0)
        .ok_or_else(|| {
            let lo = scan.iter().map(|p| p.alpha).fold(f64::INFINITY, f64::min);
            let hi = scan.iter().map(|p| p.alpha).fold(f64::NEG_INFINITY, f64::max);
            Error::domain(format!("target alpha {target} outside reachable range [{lo:.3}, {hi:.3}]"))
        })?;
    let (mut lo, mut hi) = (bracket[0].detuning_ratio.ln(), bracket[1].detuning_ratio.ln());
    let mut f_lo = bracket[0].alpha - target;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let f_mid = fit_at(mid.exp())? - target;
        if f_mid.abs() < 1e-10 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok(cfg.clone().with_detuning_ratio((0.5 * (lo + hi)).exp()))
}

/// Rescales the Rabi frequency so the trap couplings reach `target_j_max`
/// (J scales as Ω²).
pub fn calibrate_rabi(cfg: &TrapConfig, target_j_max: f64) -> Result<TrapConfig> {
    if !(target_j_max.is_finite() && target_j_max > 0.0) {
        return Err(Error::domain(format!("target j_max must be > 0, got {target_j_max}")));
    }
    let jm = ion_couplings(cfg, &lattice::exact_modes(cfg)?)?;
    if jm.j_max == 0.0 {
        return Err(Error::domain("trap produces zero couplings"));
    }
    Ok(cfg.clone().with_rabi(cfg.rabi * (target_j_max / jm.j_max).sqrt()))
}

/// Trap couplings with μ tuned to a target fitted exponent and Ω rescaled to
/// a target J_max, either step skipped when its target is `None`.
pub fn tuned_trap_couplings(
    cfg: &TrapConfig,
    alpha: Option<f64>,
    j_max: Option<f64>,
) -> Result<(TrapConfig, CouplingMatrix)> {
    let mut cfg = cfg.clone();
    if let Some(a) = alpha {
        cfg = tune_alpha(&cfg, a)?;
    }
    if let Some(j) = j_max {
        cfg = calibrate_rabi(&cfg, j)?;
    }
    let jm = trap_couplings(&cfg)?;
    Ok((cfg, jm))
}

/// Quadratic fit u ≈ offset + curvature·(i − (N+1)/2)² over a central window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    pub offset: f64,
    pub curvature: f64,
    pub rms_residual: f64,
    /// `rms_residual` divided by the spread (max − min) of u in the window.
    pub relative_rms: f64,
}

/// Single-excitation potential U_i = −J_ii, shifted so its minimum is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePotential {
    pub u: Vec<f64>,
    pub barrier_height: f64,
    /// 0-based sites of the lowest point in the left and right halves.
    pub well_minima_sites: [usize; 2],
    /// 0-based site of the highest point between the two wells.
    pub barrier_site: usize,
}

impl EffectivePotential {
    /// True when the barrier sits strictly inside the chain and above both
    /// wells.
    pub fn has_interior_maximum(&self) -> bool {
        let n = self.u.len();
        let [l, r] = self.well_minima_sites;
        self.barrier_site > 0
            && self.barrier_site + 1 < n
            && self.u[self.barrier_site] > self.u[l]
            && self.u[self.barrier_site] > self.u[r]
    }

    /// Fits the central `fraction` of the chain (|i − centre| ≤ fraction·N/2).
    pub fn central_quadratic_fit(&self, fraction: f64) -> QuadraticFit {
        let n = self.u.len();
        let centre = (n as f64 + 1.0) / 2.0;
        let half_width = fraction * n as f64 / 2.0;
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n)
            .filter_map(|k| {
                let d = (k + 1) as f64 - centre;
                (d.abs() <= half_width).then_some((d * d, self.u[k]))
            })
            .unzip();
        let coef = linalg::polyfit(&xs, &ys, 1);
        let rms = (xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - (coef[0] + coef[1] * x);
                r * r
            })
            .sum::<f64>()
            / xs.len() as f64)
            .sqrt();
        let spread = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - ys.iter().copied().fold(f64::INFINITY, f64::min);
        QuadraticFit {
            offset: coef[0],
            curvature: coef[1],
            rms_residual: rms,
            relative_rms: if spread > 0.0 { rms / spread } else { 0.0 },
        }
    }
}

pub fn effective_potential(jm: &CouplingMatrix) -> Result<EffectivePotential> {
    if !jm.has_physical_diagonal() {
        return Err(Error::DegeneratePotential);
    }
    let n = jm.n();
    let raw: Vec<f64> = jm.j.diagonal().iter().map(|d| -d).collect();
    let floor = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let u: Vec<f64> = raw.iter().map(|x| x - floor).collect();

    let argmin = |range: std::ops::Range<usize>| {
        range
            .min_by(|&a, &b| u[a].total_cmp(&u[b]))
            .expect("nonempty half")
    };
    let left = argmin(0..n / 2);
    let right = argmin(n - n / 2..n);
    let barrier_site = (left..=right)
        .max_by(|&a, &b| u[a].total_cmp(&u[b]))
        .expect("nonempty span");
    let barrier_height = u[barrier_site] - u[left].min(u[right]);
    Ok(EffectivePotential {
        u,
        barrier_height,
        well_minima_sites: [left, right],
        barrier_site,
    })
}

/// Which reading of the printed effective-mass expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DispersionFormula {
    /// M[μ² − ω_x² + 4ζ(3)]²/(ω_z² Ω² ln 2), the ζ term added as printed.
    Verbatim,
    /// M[μ² − ω_x² + 4ζ(3) ω_z²]²/(ω_z² Ω² ln 2), dimensionally consistent.
    AxialScaled,
}

/// Band-edge dispersion of J near q = π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumDispersion {
    pub m_eff: f64,
    /// ħ(δk)²/(2 M_eff), the coefficient of (q − π)² in λ(q), rad/s.
    pub quadratic_coeff: f64,
    pub formula: DispersionFormula,
}

pub fn continuum_dispersion(
    cfg: &TrapConfig,
    formula: DispersionFormula,
) -> Result<ContinuumDispersion> {
    cfg.validate()?;
    if cfg.geometry != Geometry::Uniform {
        return Err(Error::domain("continuum dispersion assumes uniform spacing"));
    }
    let zeta_term = match formula {
        DispersionFormula::Verbatim => 4.0 * units::ZETA_3,
        DispersionFormula::AxialScaled => 4.0 * units::ZETA_3 * cfg.omega_z * cfg.omega_z,
    };
    let bracket = cfg.mu * cfg.mu - cfg.omega_x * cfg.omega_x + zeta_term;
    let m_eff = cfg.mass * bracket * bracket
        / (cfg.omega_z * cfg.omega_z * cfg.rabi * cfg.rabi * std::f64::consts::LN_2);
    if !(m_eff.is_finite() && m_eff > 0.0) {
        return Err(Error::domain(format!("effective mass {m_eff} is not positive")));
    }
    Ok(ContinuumDispersion {
        m_eff,
        quadratic_coeff: units::HBAR * cfg.delta_k * cfg.delta_k / (2.0 * m_eff),
        formula,
    })
}
