//! Physical constants (SI) and frequency conversions.
//!
//! Energies are carried as angular frequencies in rad/s throughout the crate
//! (Planck's constant set to one). User-facing inputs are ordinary
//! frequencies in kHz and are converted here.

use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a 171Yb+ ion.
pub const YB171_MASS: f64 = 170.936_325_8 * ATOMIC_MASS_UNIT;

/// Apéry's constant, ζ(3).
pub const ZETA_3: f64 = 1.202_056_903_159_594_3;

/// Raman wavevector difference for counter-propagating-at-90° 355 nm beams.
pub const DEFAULT_DELTA_K: f64 = std::f64::consts::SQRT_2 * 2.0 * PI / 355e-9;

pub fn khz_to_rad(khz: f64) -> f64 {
    2.0 * PI * khz * 1e3
}

pub fn rad_to_khz(rad: f64) -> f64 {
    rad / (2.0 * PI * 1e3)
}

pub fn hz_to_rad(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Coulomb constant scaled by the ion's charge squared, Q²/(4πε₀).
pub fn coulomb_strength(charge: f64) -> f64 {
    charge * charge / (4.0 * PI * VACUUM_PERMITTIVITY)
}
