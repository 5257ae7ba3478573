//! Ion-chain geometry and transverse phonon modes.
//!
//! Two spacings are supported. `Uniform` takes equally spaced ions as given
//! (the anharmonic axial potential that would produce them is never modelled,
//! only the resulting dipolar matrix matters downstream). `HarmonicTrap`
//! solves the Coulomb-plus-quadratic force balance for the equilibrium
//! positions.
//!
//! In both cases positions are measured in units of the configured length
//! `spacing`, and `omega_z` is tied to it by ω_z² = Q²/(4πε₀ M a₀³). For a
//! harmonic trap that makes `omega_z` the axial trap frequency and `spacing`
//! the natural Coulomb length.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, sym_eigen};
use crate::units;

const RESONANCE_TOLERANCE: f64 = 1e-6;
const EQUILIBRIUM_TOLERANCE: f64 = 1e-12;
const EQUILIBRIUM_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Uniform,
    HarmonicTrap,
}

/// Trap and Raman-drive parameters. All frequencies are angular (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub n_ions: usize,
    /// Transverse trap frequency (the centre-of-mass mode).
    pub omega_x: f64,
    /// Effective axial frequency, √(Q²/(4πε₀ M a₀³)).
    pub omega_z: f64,
    /// Raman beatnote detuning.
    pub mu: f64,
    /// Global Rabi frequency Ω.
    pub rabi: f64,
    /// Wavevector difference |δk| (1/m).
    pub delta_k: f64,
    pub mass: f64,
    pub charge: f64,
    /// Length unit a₀ (m).
    pub spacing: f64,
    pub geometry: Geometry,
}

impl TrapConfig {
    /// A 171Yb+ chain with the default 355 nm Raman geometry. `spacing` is
    /// derived from `omega_z`.
    pub fn new(
        n_ions: usize,
        geometry: Geometry,
        omega_x: f64,
        omega_z: f64,
        mu: f64,
        rabi: f64,
    ) -> Self {
        let mass = units::YB171_MASS;
        let charge = units::ELEMENTARY_CHARGE;
        TrapConfig {
            n_ions,
            omega_x,
            omega_z,
            mu,
            rabi,
            delta_k: units::DEFAULT_DELTA_K,
            mass,
            charge,
            spacing: length_scale(omega_z, mass, charge),
            geometry,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ions < 2 {
            return Err(Error::InvalidSize {
                what: "ion chain",
                got: self.n_ions,
                min: 2,
            });
        }
        let positive = [
            ("omega_x", self.omega_x),
            ("omega_z", self.omega_z),
            ("mu", self.mu),
            ("rabi", self.rabi),
            ("delta_k", self.delta_k),
            ("mass", self.mass),
            ("spacing", self.spacing),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        if !(self.charge.is_finite() && self.charge != 0.0) {
            return Err(Error::domain("charge must be nonzero"));
        }
        let implied = length_scale(self.omega_z, self.mass, self.charge);
        if ((implied - self.spacing) / self.spacing).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "spacing {} m inconsistent with omega_z (implies {} m)",
                self.spacing, implied
            )));
        }
        Ok(())
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_rabi(mut self, rabi: f64) -> Self {
        self.rabi = rabi;
        self
    }

    /// ħ(δk)²Ω²/(2M), in (rad/s)³.
    pub fn coupling_prefactor(&self) -> f64 {
        units::HBAR * self.delta_k * self.delta_k * self.rabi * self.rabi / (2.0 * self.mass)
    }

    /// (μ² − ω_x²)/ω_z², the single dimensionless number that fixes the shape
    /// of the coupling matrix for a given geometry.
    pub fn detuning_ratio(&self) -> f64 {
        (self.mu * self.mu - self.omega_x * self.omega_x) / (self.omega_z * self.omega_z)
    }

    /// Sets μ so that `detuning_ratio() == ratio`.
    pub fn with_detuning_ratio(self, ratio: f64) -> Self {
        let mu_sq = self.omega_x * self.omega_x + ratio * self.omega_z * self.omega_z;
        self.with_mu(mu_sq.sqrt())
    }
}

/// (Q²/(4πε₀ M ω²))^{1/3}.
pub fn length_scale(omega: f64, mass: f64, charge: f64) -> f64 {
    (units::coulomb_strength(charge) / (mass * omega * omega)).cbrt()
}

/// Transverse normal modes. Columns of `mode_matrix` are the mode vectors,
/// ordered by ascending κ.
#[derive(Debug, Clone)]
pub struct PhononModes {
    pub mode_matrix: DMatrix<f64>,
    pub kappas: Vec<f64>,
    /// Mode angular frequencies, present once a trap has been attached.
    pub frequencies: Option<Vec<f64>>,
}

impl PhononModes {
    pub fn n(&self) -> usize {
        self.kappas.len()
    }

    pub fn mode(&self, m: usize) -> DVector<f64> {
        self.mode_matrix.column(m).into_owned()
    }

    /// Fills in ω_m = √(ω_x² − ω_z² κ_m).
    pub fn with_frequencies(mut self, cfg: &TrapConfig) -> Result<Self> {
        self.frequencies = Some(mode_frequencies(cfg, &self.kappas)?);
        Ok(self)
    }

    /// Max deviation of each mode from being inversion symmetric or
    /// antisymmetric.
    pub fn inversion_defect(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0_f64;
        for col in self.mode_matrix.column_iter() {
            let sym = (0..n).map(|i| (col[i] - col[n - 1 - i]).abs()).fold(0.0, f64::max);
            let anti = (0..n).map(|i| (col[i] + col[n - 1 - i]).abs()).fold(0.0, f64::max);
            worst = worst.max(sym.min(anti));
        }
        worst
    }
}

/// Dimensionless dipolar matrix for unit spacing.
pub fn k_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidSize {
            what: "dipolar matrix",
            got: n,
            min: 2,
        });
    }
    let positions: Vec<f64> = (0..n).map(|i| i as f64).collect();
    Ok(k_matrix_from_positions(&positions))
}

/// K_ij = −|u_i − u_j|⁻³ off the diagonal, K_ii = −Σ_{j≠i} K_ij, with
/// positions in units of the length scale.
pub fn k_matrix_from_positions(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let d = (u[i] - u[j]).abs();
                let v = 1.0 / (d * d * d);
                k[(i, j)] = -v;
                diag += v;
            }
        }
        k[(i, i)] = diag;
    }
    k
}

/// Closed-form modes from first-order perturbation theory around the
/// nearest-neighbour chain. No frequencies attached.
pub fn perturbative_modes(n: usize) -> Result<PhononModes> {
    if n < 2 {
        return Err(Error::InvalidSize {
            what: "perturbative modes",
            got: n,
            min: 2,
        });
    }
    let nf = n as f64;
    let pi = std::f64::consts::PI;
    let mode_matrix = DMatrix::from_fn(n, n, |i, m| {
        if m == 0 {
            (1.0 / nf).sqrt()
        } else {
            let site = (i + 1) as f64;
            (2.0 / nf).sqrt() * (m as f64 * pi / nf * (site - 0.5)).cos()
        }
    });
    let kappas = (0..n)
        .map(|m| {
            (1..=n / 2)
                .map(|r| {
                    let r = r as f64;
                    (2.0 - 2.0 * (m as f64 * r * pi / nf).cos()) / (r * r * r)
                })
                .sum()
        })
        .collect();
    Ok(PhononModes {
        mode_matrix,
        kappas,
        frequencies: None,
    })
}

/// Numerically exact transverse modes for the configured geometry, with
/// stability and resonance checks.
pub fn exact_modes(cfg: &TrapConfig) -> Result<PhononModes> {
    let modes = transverse_modes(cfg)?;
    check_resonance(cfg, modes.frequencies.as_deref().unwrap_or(&[]))?;
    Ok(modes)
}

/// Same as [`exact_modes`] but without the resonance guard; used by detuning
/// scans where μ is still to be chosen.
pub fn transverse_modes(cfg: &TrapConfig) -> Result<PhononModes> {
    cfg.validate()?;
    let eq = equilibrium_positions(cfg)?;
    let u: Vec<f64> = eq.positions.iter().map(|z| z / cfg.spacing).collect();
    let k = k_matrix_from_positions(&u);
    let eig = sym_eigen(&k)?;
    let kappas: Vec<f64> = eig.values.iter().copied().collect();
    let frequencies = mode_frequencies(cfg, &kappas)?;
    Ok(PhononModes {
        mode_matrix: eig.vectors,
        kappas,
        frequencies: Some(frequencies),
    })
}

fn mode_frequencies(cfg: &TrapConfig, kappas: &[f64]) -> Result<Vec<f64>> {
    kappas
        .iter()
        .enumerate()
        .map(|(mode, &kappa)| {
            let omega_sq = cfg.omega_x * cfg.omega_x - cfg.omega_z * cfg.omega_z * kappa;
            if omega_sq <= 0.0 {
                Err(Error::Unstable { mode, omega_sq })
            } else {
                Ok(omega_sq.sqrt())
            }
        })
        .collect()
}

pub(crate) fn check_resonance(cfg: &TrapConfig, omegas: &[f64]) -> Result<()> {
    for (mode, &omega) in omegas.iter().enumerate() {
        if (cfg.mu - omega).abs() <= RESONANCE_TOLERANCE * omega {
            return Err(Error::Resonance {
                mode,
                mu: cfg.mu,
                omega,
            });
        }
    }
    Ok(())
}

/// Equilibrium positions along the chain axis.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    /// Positions in metres, ascending.
    pub positions: Vec<f64>,
    /// Max force residual relative to the trap force on the outermost ion.
    pub residual: f64,
    pub iterations: usize,
}

pub fn equilibrium_positions(cfg: &TrapConfig) -> Result<Equilibrium> {
    cfg.validate()?;
    let n = cfg.n_ions;
    match cfg.geometry {
        Geometry::Uniform => {
            let centre = (n as f64 + 1.0) / 2.0;
            let positions = (1..=n).map(|i| cfg.spacing * (i as f64 - centre)).collect();
            Ok(Equilibrium {
                positions,
                residual: 0.0,
                iterations: 0,
            })
        }
        Geometry::HarmonicTrap => {
            let mut eq = harmonic_equilibrium(n)?;
            for z in &mut eq.positions {
                *z *= cfg.spacing;
            }
            Ok(eq)
        }
    }
}

/// Dimensionless force on each ion in a harmonic well: u_i − Σ_{j≠i} sgn(u_i−u_j)/(u_i−u_j)².
fn harmonic_forces(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let coulomb: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = u[i] - u[j];
                    d.signum() / (d * d)
                })
                .sum();
            u[i] - coulomb
        })
        .collect()
}

fn relative_residual(u: &[f64], f: &[f64]) -> f64 {
    let scale = u.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    f.iter().fold(0.0_f64, |a, x| a.max(x.abs())) / scale
}

/// Damped Newton iteration in units of the Coulomb length, starting from an
/// equally spaced guess.
fn harmonic_equilibrium(n: usize) -> Result<Equilibrium> {
    let centre = (n as f64 - 1.0) / 2.0;
    // Empirical central spacing ≈ 2.018 N^-0.559.
    let guess = 2.018 * (n as f64).powf(-0.559);
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 - centre) * guess).collect();
    let mut f = harmonic_forces(&u);
    let norm = |f: &[f64]| f.iter().map(|x| x * x).sum::<f64>().sqrt();

    for iteration in 0..EQUILIBRIUM_MAX_ITERATIONS {
        if relative_residual(&u, &f) < EQUILIBRIUM_TOLERANCE {
            symmetrize(&mut u);
            let f = harmonic_forces(&u);
            return Ok(Equilibrium {
                residual: relative_residual(&u, &f),
                positions: u,
                iterations: iteration,
            });
        }
        let mut jac = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = (u[i] - u[j]).abs();
                    let c = 2.0 / (d * d * d);
                    jac[(i, i)] += c;
                    jac[(i, j)] -= c;
                }
            }
        }
        let rhs = -DVector::from_column_slice(&f);
        let step = jac
            .cholesky()
            .ok_or_else(|| Error::Eigen("force Jacobian not positive definite".into()))?
            .solve(&rhs);

        let f_norm = norm(&f);
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x + damping * s).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let f_trial = harmonic_forces(&trial);
                if norm(&f_trial) < f_norm || damping < 1e-6 {
                    u = trial;
                    f = f_trial;
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1e-12 {
                return Err(Error::SolverDiverged {
                    iterations: iteration,
                    residual: relative_residual(&u, &f),
                });
            }
        }
    }
    Err(Error::SolverDiverged {
        iterations: EQUILIBRIUM_MAX_ITERATIONS,
        residual: relative_residual(&u, &f),
    })
}

// The potential is inversion symmetric, so the exact solution is too.
fn symmetrize(u: &mut [f64]) {
    let n = u.len();
    for i in 0..n / 2 {
        let a = 0.5 * (u[n - 1 - i] - u[i]);
        u[i] = -a;
        u[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        u[n / 2] = 0.0;
    }
}

/// For each mode of `reference`, the index of the matching mode in `other`.
///
/// Modes are paired by ascending κ; inside clusters whose relative gaps are
/// below 1e-9 the pairing is decided greedily by largest overlap.
pub fn match_modes(reference: &PhononModes, other: &PhononModes) -> Vec<usize> {
    let n = reference.n();
    let sorted = |m: &PhononModes| {
        let mut idx: Vec<usize> = (0..m.n()).collect();
        idx.sort_by(|&a, &b| m.kappas[a].total_cmp(&m.kappas[b]));
        idx
    };
    let ref_order = sorted(reference);
    let other_order = sorted(other);
    let ref_sorted: Vec<f64> = ref_order.iter().map(|&k| reference.kappas[k]).collect();
    let scale = ref_sorted.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(1.0);

    let mut out = vec![0; n];
    for cluster in linalg::degenerate_clusters(&ref_sorted, 1e-9 * scale) {
        let mut free: Vec<usize> = cluster.clone().map(|k| other_order[k]).collect();
        for k in cluster {
            let r = ref_order[k];
            let rv = reference.mode_matrix.column(r);
            let (pos, _) = free
                .iter()
                .enumerate()
                .map(|(p, &o)| (p, rv.dot(&other.mode_matrix.column(o)).abs()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            out[r] = free.remove(pos);
        }
    }
    out
}
