//! Physical constants (CODATA 2018 exact values where available).

/// Elementary charge e (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

/// Planck constant h (J s).
pub const PLANCK: f64 = 6.62607015e-34;

/// Vacuum permittivity ε0 (F/m).
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;

/// Boltzmann constant k_B (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Magnetic flux quantum Φ0 = h/2e (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
