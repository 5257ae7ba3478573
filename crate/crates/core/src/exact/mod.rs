//! Exact Schrödinger evolution of the spin Hamiltonian, in the full Hilbert
//! space or in fixed-excitation sectors of its number-conserving part.

mod dynamics;
mod hamiltonian;
mod krylov;
mod pattern;
pub mod sparse;
mod trace;

pub use dynamics::{
    diagonal_ensemble, energy, evolve, evolve_with, excitation_drift, final_distribution, full_pair_gaps, initial_state, propagate,
    site_sz, Propagation, DENSE_DIM_LIMIT,
};
pub use hamiltonian::{
    build_full_ising, build_full_ising_capped, build_xy_sector, HamiltonianKind, HamiltonianRep,
    DEFAULT_FULL_SPACE_CAP, SECTOR_DIM_CAP,
};
pub use pattern::ExcitationPattern;
pub use trace::{observable_c, QuenchTrace};
