//! Physical constants (SI, 2018 CODATA exact values where defined).

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_8128e-12;

/// Boltzmann constant, J/K.
pub const KB: f64 = 1.380_649e-23;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
