//! Physical constants in the meV / ps / nm unit system used throughout the
//! crate.
//!
//! Energies are in meV, times in ps. A detuning `E` (meV) enters phase
//! factors as the angular frequency `E / HBAR` (rad/ps).

/// Reduced Planck constant, meV·ps.
pub const HBAR: f64 = 0.658_211_956_9;

/// Boltzmann constant, meV/K.
pub const K_B: f64 = 0.086_173_332_62;

/// Reduced Planck constant, J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Elementary charge, C (1 eV in J).
pub const EV_SI: f64 = 1.602_176_634e-19;

/// Converts an energy in meV to an angular frequency in rad/ps.
#[inline]
pub fn mev_to_rad_per_ps(e: f64) -> f64 {
    e / HBAR
}

/// Converts an angular frequency in rad/ps to an energy in meV.
#[inline]
pub fn rad_per_ps_to_mev(w: f64) -> f64 {
    w * HBAR
}
