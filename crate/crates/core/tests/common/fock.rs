//! Brute-force bosonic reference: explicit ladder operators on a Fock space
//! truncated to `cap` bosons per site.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub struct FockSpace {
    pub n: usize,
    pub cap: usize,
    pub dim: usize,
}

impl FockSpace {
    pub fn new(n: usize, cap: usize) -> Self {
        FockSpace {
            n,
            cap,
            dim: (cap + 1).pow(n as u32),
        }
    }

    pub fn occupations(&self, idx: usize) -> Vec<usize> {
        let mut rest = idx;
        (0..self.n)
            .map(|_| {
                let o = rest % (self.cap + 1);
                rest /= self.cap + 1;
                o
            })
            .collect()
    }

    pub fn index(&self, occ: &[usize]) -> usize {
        occ.iter().rev().fold(0, |acc, &o| acc * (self.cap + 1) + o)
    }

    pub fn basis_state(&self, occ: &[usize]) -> Vec<Complex64> {
        let mut v = vec![Complex64::default(); self.dim];
        v[self.index(occ)] = Complex64::new(1.0, 0.0);
        v
    }

    /// a_site applied to psi.
    pub fn lower(&self, site: usize, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.dim];
        for (idx, amp) in psi.iter().enumerate() {
            let mut occ = self.occupations(idx);
            if occ[site] > 0 {
                let f = (occ[site] as f64).sqrt();
                occ[site] -= 1;
                out[self.index(&occ)] += amp * f;
            }
        }
        out
    }

    /// a_site† applied to psi; amplitude pushed above the cap is dropped.
    pub fn raise(&self, site: usize, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.dim];
        for (idx, amp) in psi.iter().enumerate() {
            let mut occ = self.occupations(idx);
            if occ[site] < self.cap {
                occ[site] += 1;
                let f = (occ[site] as f64).sqrt();
                out[self.index(&occ)] += amp * f;
            }
        }
        out
    }

    /// H₀ = ½ Σ_{i≠j} 𝒥_ij (a_i + a_i†)(a_j + a_j†) + 2B Σ_i a_i†a_i as a dense
    /// real matrix.
    pub fn quadratic_hamiltonian(&self, js: &DMatrix<f64>, b: f64) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for col in 0..self.dim {
            let e = self.basis_state(&self.occupations(col));
            let mut out = vec![Complex64::default(); self.dim];
            for i in 0..self.n {
                let ni = self.raise(i, &self.lower(i, &e));
                for (o, x) in out.iter_mut().zip(&ni) {
                    *o += x * (2.0 * b);
                }
                for j in 0..self.n {
                    if i == j || js[(i, j)] == 0.0 {
                        continue;
                    }
                    let xj: Vec<Complex64> = add(&self.lower(j, &e), &self.raise(j, &e));
                    let xixj = add(&self.lower(i, &xj), &self.raise(i, &xj));
                    for (o, x) in out.iter_mut().zip(&xixj) {
                        *o += x * (0.5 * js[(i, j)]);
                    }
                }
            }
            for row in 0..self.dim {
                h[(row, col)] = out[row].re;
            }
        }
        h
    }

    pub fn number(&self, site: usize, psi: &[Complex64]) -> f64 {
        let a = self.lower(site, psi);
        a.iter().map(|z| z.norm_sqr()).sum()
    }

    /// ⟨ψ|a_i a_j|ψ⟩
    pub fn pair(&self, i: usize, j: usize, psi: &[Complex64]) -> Complex64 {
        let aa = self.lower(i, &self.lower(j, psi));
        psi.iter().zip(&aa).map(|(x, y)| x.conj() * y).sum()
    }
}

pub fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// e^{−iHt} through a full eigendecomposition of H.
pub struct DenseEvolution {
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl DenseEvolution {
    pub fn new(h: DMatrix<f64>) -> Self {
        DenseEvolution {
            eig: SymmetricEigen::new(h),
        }
    }

    pub fn apply(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let v = &self.eig.eigenvectors;
        let dim = psi.len();
        let coef: Vec<Complex64> = (0..dim)
            .map(|k| {
                let c: Complex64 = (0..dim).map(|s| psi[s] * v[(s, k)]).sum();
                c * Complex64::from_polar(1.0, -self.eig.eigenvalues[k] * t)
            })
            .collect();
        (0..dim)
            .map(|s| (0..dim).map(|k| coef[k] * v[(s, k)]).sum())
            .collect()
    }
}
