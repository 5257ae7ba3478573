use nalgebra::DMatrix;
use num_complex::Complex64;

use super::sparse::SparseSym;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymEigen};

const MAX_DIM: usize = 40;
const STEP_TOL: f64 = 1e-12;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos propagator for e^{−iHt} acting on a state, advanced in substeps
/// whose length is set by the a-posteriori Krylov error estimate.
pub(crate) struct KrylovStepper<'a> {
    h: &'a SparseSym,
    last_step: Option<f64>,
}

impl<'a> KrylovStepper<'a> {
    pub(crate) fn new(h: &'a SparseSym) -> Self {
        KrylovStepper { h, last_step: None }
    }

    /// Replaces `psi` by e^{−iH dt} psi.
    pub(crate) fn advance(&mut self, psi: &mut [Complex64], dt: f64) -> Result<()> {
        let mut remaining = dt;
        while remaining > 0.0 {
            let basis = self.lanczos(psi)?;
            let mut halvings = 0usize;
            let mut tau = self.last_step.map_or(remaining, |s| (2.0 * s).min(remaining));
            loop {
                let (coef, err) = basis.exp_coefficients(tau);
                if err <= STEP_TOL || basis.exact {
                    let beta0 = basis.beta0;
                    psi.iter_mut().for_each(|z| *z = Complex64::default());
                    for (v, c) in basis.vectors.iter().zip(&coef) {
                        for (p, x) in psi.iter_mut().zip(v) {
                            *p += x * c * beta0;
                        }
                    }
                    if tau < remaining {
                        self.last_step = Some(tau);
                    }
                    remaining -= tau;
                    break;
                }
                tau *= 0.5;
                halvings += 1;
                if halvings > 60 {
                    return Err(Error::SolverDiverged {
                        iterations: halvings,
                        residual: err,
                    });
                }
            }
        }
        Ok(())
    }

    fn lanczos(&self, psi: &[Complex64]) -> Result<LanczosBasis> {
        let dim = self.h.dim();
        let beta0 = norm(psi);
        let m_max = MAX_DIM.min(dim);
        let mut vectors: Vec<Vec<Complex64>> = vec![psi.iter().map(|z| z / beta0).collect()];
        let mut alphas = Vec::with_capacity(m_max);
        let mut betas = Vec::with_capacity(m_max);
        let scale = self.h.norm_inf().max(f64::MIN_POSITIVE);
        let mut w = vec![Complex64::default(); dim];
        let mut exact = false;
        for j in 0..m_max {
            self.h.apply(&vectors[j], &mut w);
            let a = dot(&vectors[j], &w).re;
            alphas.push(a);
            // two passes of full reorthogonalization
            for _ in 0..2 {
                for v in &vectors {
                    let c = dot(v, &w);
                    for (x, y) in w.iter_mut().zip(v) {
                        *x -= c * y;
                    }
                }
            }
            let b = norm(&w);
            betas.push(b);
            if b <= 1e-12 * scale {
                exact = true;
                break;
            }
            if j + 1 < m_max {
                vectors.push(w.iter().map(|z| z / b).collect());
            } else if vectors.len() == dim {
                exact = true;
            }
        }
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        // nalgebra's QR iteration stops at ~1e-9 relative accuracy here, too
        // coarse for the phases
        Ok(LanczosBasis {
            vectors,
            eig: sym_eigen(&t)?,
            beta0,
            exact,
        })
    }
}

struct LanczosBasis {
    vectors: Vec<Vec<Complex64>>,
    eig: SymEigen,
    beta0: f64,
    exact: bool,
}

impl LanczosBasis {
    /// Coefficients of e^{−iTτ} e₁ and the error estimate, the weight on the
    /// last Lanczos vector.
    fn exp_coefficients(&self, tau: f64) -> (Vec<Complex64>, f64) {
        let q = &self.eig.vectors;
        let m = q.nrows();
        let phases: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(q[(0, k)], -self.eig.values[k] * tau))
            .collect();
        let coef: Vec<Complex64> = (0..m)
            .map(|j| (0..m).map(|k| phases[k] * q[(j, k)]).sum())
            .collect();
        let err = if self.exact {
            0.0
        } else {
            coef[m - 1].norm()
        };
        (coef, err)
    }
}
