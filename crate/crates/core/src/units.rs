//! Physical constants (CODATA 2018) and the unit conventions used internally.
//!
//! Lengths inside [`crate::dipolar`] are in µm and times in µs, so rates come
//! out in 1/µs. Everything crossing the public SI boundary goes through the
//! helpers here.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817_00e-34;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634_00e-19;

/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;

/// Atomic unit of electric dipole moment e·a₀, C·m.
pub const ATOMIC_DIPOLE: f64 = ELEMENTARY_CHARGE * BOHR_RADIUS;

pub const UM3_PER_M3: f64 = 1e18;
pub const US_PER_S: f64 = 1e6;

/// Rate in 1/µs to 1/s.
pub fn per_us_to_per_s(rate: f64) -> f64 {
    rate * US_PER_S
}

/// Volumetric rate in µm³/µs to m³/s.
pub fn um3_per_us_to_m3_per_s(q: f64) -> f64 {
    q * US_PER_S / UM3_PER_M3
}
