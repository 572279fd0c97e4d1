//! Unit conventions.
//!
//! All internal state is kept in natural units `hbar = m = c = 1`, in which
//! the Compton wavelength and Compton period are both `2*pi`. Every external
//! interface (config files, CSV output, CLI flags) uses lengths in units of
//! `lambda_c` and times in units of `T_c`; the conversion happens at the IO
//! boundary and nowhere else.

use std::f64::consts::TAU;

/// Compton wavelength in natural units.
pub const LAMBDA_C: f64 = TAU;

/// Compton period in natural units.
pub const T_C: f64 = TAU;

/// Upper limit on the particle-wave coupling; above this the neglected
/// wave-induced inertial-mass correction is no longer negligible.
pub const B_MAX: f64 = 25.0;

/// Convert a length expressed in Compton wavelengths to natural units.
pub fn from_lambda_c(x: f64) -> f64 {
    x * LAMBDA_C
}

/// Convert a natural-unit length to Compton wavelengths.
pub fn to_lambda_c(x: f64) -> f64 {
    x / LAMBDA_C
}

/// Convert a time expressed in Compton periods to natural units.
pub fn from_tc(t: f64) -> f64 {
    t * T_C
}

/// Convert a natural-unit time to Compton periods.
pub fn to_tc(t: f64) -> f64 {
    t / T_C
}
