//! CODATA 2018 values, SI units.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Atomic mass unit, kg. Reference mass of the CSL model.
pub const AMU: f64 = 1.660_539_066_60e-27;
