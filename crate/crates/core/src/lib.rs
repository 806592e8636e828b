//! Phase structure of a non-Hermitian XY model with four-state clock
//! anisotropy: exactly solvable classical and quantum-mechanical companion
//! models, the d-dimensional RG flow in both PT regimes, fixed points and
//! critical exponents, and the fixed-point-collision / walking analysis
//! near two dimensions.

pub mod numerics;
pub mod quantum_fock;
pub mod rg_core;
pub mod toy_classical;
pub mod walking;

pub use num_complex::Complex64;
