use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::sparse::SparseSym;
use super::ExcitationPattern;
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymEigen};

pub const DEFAULT_FULL_SPACE_CAP: usize = 16;
/// Largest excitation sector that will be enumerated.
pub const SECTOR_DIM_CAP: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HamiltonianKind {
    FullIsing,
    XySector(usize),
}

/// Spin Hamiltonian in the z basis. Basis states are bitmasks with bit
/// `i − 1` set when site i is up.
#[derive(Debug)]
pub struct HamiltonianRep {
    kind: HamiltonianKind,
    n_sites: usize,
    matrix: SparseSym,
    basis: Vec<u64>,
    index: Option<HashMap<u64, usize>>,
    spectrum: OnceLock<SymEigen>,
}

impl HamiltonianRep {
    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix(&self) -> &SparseSym {
        &self.matrix
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn basis_index(&self, mask: u64) -> Option<usize> {
        match &self.index {
            Some(map) => map.get(&mask).copied(),
            None => ((mask as u128) < (1u128 << self.n_sites)).then_some(mask as usize),
        }
    }

    /// Index of the product state `psi0` in this basis.
    pub fn state_index(&self, psi0: &ExcitationPattern) -> Result<usize> {
        if psi0.n_ions() != self.n_sites {
            return Err(Error::Basis(format!(
                "pattern for {} sites, Hamiltonian has {}",
                psi0.n_ions(),
                self.n_sites
            )));
        }
        let mask = psi0.mask()?;
        self.basis_index(mask).ok_or_else(|| {
            Error::Basis(format!(
                "pattern {psi0} with {} excitations is outside the {:?} basis",
                psi0.excitations(),
                self.kind
            ))
        })
    }

    /// Full eigendecomposition, computed once on first use. Eigenvalues are
    /// ascending. The couplings flip spins in pairs, so each excitation-parity
    /// block is diagonalized on its own.
    pub fn spectrum(&self) -> Result<&SymEigen> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let dense = self.matrix.to_dense();
        let dim = self.dimension();
        let mut pairs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(dim);
        for parity in 0..2 {
            let rows: Vec<usize> = (0..dim).filter(|&i| self.basis[i].count_ones() % 2 == parity).collect();
            if rows.is_empty() {
                continue;
            }
            let block = DMatrix::from_fn(rows.len(), rows.len(), |r, c| dense[(rows[r], rows[c])]);
            let eig = sym_eigen(&block)?;
            for k in 0..rows.len() {
                let mut v = DVector::zeros(dim);
                for (r, &i) in rows.iter().enumerate() {
                    v[i] = eig.vectors[(r, k)];
                }
                pairs.push((eig.values[k], v));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let s = SymEigen {
            values: DVector::from_iterator(dim, pairs.iter().map(|p| p.0)),
            vectors: DMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>()),
        };
        Ok(self.spectrum.get_or_init(|| s))
    }

    fn new(kind: HamiltonianKind, n_sites: usize, matrix: SparseSym, basis: Vec<u64>, indexed: bool) -> Self {
        let index = indexed.then(|| basis.iter().enumerate().map(|(i, &m)| (m, i)).collect());
        HamiltonianRep {
            kind,
            n_sites,
            matrix,
            basis,
            index,
            spectrum: OnceLock::new(),
        }
    }
}

fn field_energy(mask: u64, n: usize, b: f64) -> f64 {
    let up = mask.count_ones() as f64;
    b * (2.0 * up - n as f64)
}

/// H = Σ_{i<j} J_ij σ_i^x σ_j^x + B Σ_i σ_i^z on all 2^N states, for N up to
/// [`DEFAULT_FULL_SPACE_CAP`].
pub fn build_full_ising(jm: &CouplingMatrix, b: f64) -> Result<HamiltonianRep> {
    build_full_ising_capped(jm, b, DEFAULT_FULL_SPACE_CAP)
}

pub fn build_full_ising_capped(jm: &CouplingMatrix, b: f64, cap: usize) -> Result<HamiltonianRep> {
    let n = jm.n();
    if n > cap.min(30) {
        return Err(Error::TooLarge {
            what: "chain for the full spin space",
            got: n,
            cap: cap.min(30),
            hint: "; use an XY excitation sector or the spin-wave model",
        });
    }
    check_field(b)?;
    let j = jm.j_script();
    let pairs: Vec<(u64, f64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |k| (i, k)))
        .filter(|&(i, k)| j[(i, k)] != 0.0)
        .map(|(i, k)| ((1u64 << i) | (1u64 << k), j[(i, k)]))
        .collect();
    let dim = 1usize << n;
    let rows = (0..dim as u64)
        .map(|s| {
            let mut row = Vec::with_capacity(pairs.len() + 1);
            let diag = field_energy(s, n, b);
            if diag != 0.0 {
                row.push((s as u32, diag));
            }
            row.extend(pairs.iter().map(|&(flip, jv)| ((s ^ flip) as u32, jv)));
            row
        })
        .collect();
    Ok(HamiltonianRep::new(
        HamiltonianKind::FullIsing,
        n,
        SparseSym::from_rows(rows),
        (0..dim as u64).collect(),
        false,
    ))
}

/// Σ_{i<j} J_ij (σ_i^+σ_j^− + h.c.) + B Σ_i σ_i^z restricted to states with
/// exactly `k` up spins.
pub fn build_xy_sector(jm: &CouplingMatrix, b: f64, k: usize) -> Result<HamiltonianRep> {
    let n = jm.n();
    if k > n {
        return Err(Error::domain(format!("sector k = {k} exceeds chain size {n}")));
    }
    if n > 64 {
        return Err(Error::TooLarge {
            what: "chain for the bitmask basis",
            got: n,
            cap: 64,
            hint: "",
        });
    }
    check_field(b)?;
    let dim = binomial(n, k);
    if dim > SECTOR_DIM_CAP as u128 {
        return Err(Error::TooLarge {
            what: "excitation sector",
            got: usize::try_from(dim).unwrap_or(usize::MAX),
            cap: SECTOR_DIM_CAP,
            hint: "",
        });
    }
    let basis = combinations(n, k);
    let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let j = jm.j_script();
    let rows = basis
        .iter()
        .map(|&s| {
            let mut row = Vec::new();
            let diag = field_energy(s, n, b);
            if diag != 0.0 {
                row.push((index[&s] as u32, diag));
            }
            for from in (0..n).filter(|&i| s >> i & 1 == 1) {
                for to in (0..n).filter(|&i| s >> i & 1 == 0) {
                    let jv = j[(from, to)];
                    if jv != 0.0 {
                        let t = s ^ (1 << from) ^ (1 << to);
                        row.push((index[&t] as u32, jv));
                    }
                }
            }
            row
        })
        .collect();
    Ok(HamiltonianRep::new(
        HamiltonianKind::XySector(k),
        n,
        SparseSym::from_rows(rows),
        basis,
        true,
    ))
}

fn check_field(b: f64) -> Result<()> {
    if b.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("transverse field must be finite, got {b}")))
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All n-bit masks with k bits set, ascending.
fn combinations(n: usize, k: usize) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let limit = 1u128 << n;
    let mut out = Vec::with_capacity(binomial(n, k) as usize);
    let mut s: u128 = (1u128 << k) - 1;
    while s < limit {
        out.push(s as u64);
        // next integer with the same popcount
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}
