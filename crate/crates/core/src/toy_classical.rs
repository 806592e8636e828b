//! Zero-dimensional classical companion model: a complex Hamiltonian
//! H(theta) = -J cos(theta) - i K sin(theta) on the circle, whose partition
//! function is real for every (J, K) and reduces to a Bessel function in
//! closed form. Serves as the exactly solvable oracle for the quadrature
//! and special-function kernels.

use crate::numerics::{self, quadrature_periodic, NumericsError};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ToyModelError {
    #[error("invalid toy-model parameters: {0}")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, ToyModelError>;

/// Inverse temperature and the two circle couplings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ToyParams {
    /// Inverse temperature, strictly positive.
    pub beta: f64,
    /// Real (cosine) coupling, non-negative.
    pub j: f64,
    /// Imaginary (sine) coupling, non-negative.
    pub k: f64,
}

impl ToyParams {
    pub fn new(beta: f64, j: f64, k: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ToyModelError::InvalidParams("beta must be finite and > 0"));
        }
        if !(j.is_finite() && j >= 0.0 && k.is_finite() && k >= 0.0) {
            return Err(ToyModelError::InvalidParams(
                "couplings must be finite and non-negative",
            ));
        }
        Ok(Self { beta, j, k })
    }
}

/// Closed-form partition function.
///
/// Z = I0(beta sqrt(J^2 - K^2)) for J >= K and, by the analytic continuation
/// I0(ix) = J0(x), Z = J0(beta sqrt(K^2 - J^2)) for K > J. Always real.
pub fn partition_exact(p: &ToyParams) -> Result<f64> {
    let disc = p.j * p.j - p.k * p.k;
    if disc >= 0.0 {
        Ok(numerics::bessel_i0(p.beta * disc.sqrt())?)
    } else {
        Ok(numerics::bessel_j0(p.beta * (-disc).sqrt())?)
    }
}

/// Direct numerical evaluation of Z = (1/2pi) * integral of
/// exp(beta (J cos t + i K sin t)) over the circle.
///
/// The imaginary part vanishes by the theta -> -theta symmetry; it is
/// returned so callers can assert it.
pub fn partition_quadrature(p: &ToyParams, n_points: usize) -> Result<Complex64> {
    if n_points < 64 {
        return Err(ToyModelError::InvalidParams("n_points must be >= 64"));
    }
    let (beta, j, k) = (p.beta, p.j, p.k);
    let z = quadrature_periodic(
        move |t| {
            let amp = (beta * j * t.cos()).exp();
            let phase = beta * k * t.sin();
            Complex64::new(amp * phase.cos(), amp * phase.sin())
        },
        n_points,
    )?;
    Ok(z)
}

/// The equivalent real Hamiltonian H'(theta) = -sqrt(J^2 - K^2) cos(theta).
///
/// For K > J the square root continues to the principal branch
/// +i sqrt(K^2 - J^2), so the value becomes purely imaginary. Only the
/// partition function is a branch-independent observable; this is exposed
/// for inspection alongside it.
pub fn equivalent_real_hamiltonian(p: &ToyParams, theta: f64) -> Complex64 {
    let disc = p.j * p.j - p.k * p.k;
    if disc >= 0.0 {
        Complex64::new(-disc.sqrt() * theta.cos(), 0.0)
    } else {
        Complex64::new(0.0, -(-disc).sqrt() * theta.cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Frozen from the I0 power-series oracle (see numerics::special).
    const I0_OF_2: f64 = 2.2795853023360673;
    // Frozen from the alternating-series oracle for J0(2).
    const J0_OF_2: f64 = 0.22389077914123567;

    #[test]
    fn free_energy_vanishes_at_j_equals_k() {
        let p = ToyParams::new(1.0, 0.7, 0.7).unwrap();
        assert_eq!(partition_exact(&p).unwrap(), 1.0);
    }

    #[test]
    fn hermitian_limit_is_i0() {
        let p = ToyParams::new(1.0, 2.0, 0.0).unwrap();
        assert_relative_eq!(partition_exact(&p).unwrap(), I0_OF_2, max_relative = 1e-12);
    }

    #[test]
    fn antihermitian_limit_is_j0() {
        let p = ToyParams::new(1.0, 0.0, 2.0).unwrap();
        assert_relative_eq!(partition_exact(&p).unwrap(), J0_OF_2, max_relative = 1e-10);
    }

    #[test]
    fn quadrature_matches_exact_hermitian() {
        let p = ToyParams::new(1.0, 2.0, 0.0).unwrap();
        let z = partition_quadrature(&p, 256).unwrap();
        assert_relative_eq!(z.re, I0_OF_2, max_relative = 1e-10);
        assert!(z.im.abs() < 1e-12);
    }

    #[test]
    fn quadrature_at_exceptional_point() {
        let p = ToyParams::new(1.0, 1.0, 1.0).unwrap();
        let z = partition_quadrature(&p, 256).unwrap();
        assert!((z.re - 1.0).abs() < 1e-12);
        assert!(z.im.abs() < 1e-12);
    }

    #[test]
    fn quadrature_cross_oracle_broken_regime() {
        // beta = 2, J = 1, K = 3: Z = J0(2 sqrt(8)).
        let p = ToyParams::new(2.0, 1.0, 3.0).unwrap();
        let z = partition_quadrature(&p, 512).unwrap();
        let exact = partition_exact(&p).unwrap();
        assert!((z.re - exact).abs() < 1e-10);
        assert!(z.im.abs() < 1e-12);
    }

    #[test]
    fn oracle_grid_agreement() {
        // The full acceptance grid: quadrature vs closed form everywhere.
        for &beta in &[0.5, 1.0, 2.0] {
            for &j in &[0.0, 0.5, 1.0, 2.0] {
                for &k in &[0.0, 0.5, 1.0, 2.0] {
                    let p = ToyParams::new(beta, j, k).unwrap();
                    let z = partition_quadrature(&p, 256).unwrap();
                    let exact = partition_exact(&p).unwrap();
                    assert!(
                        (z.re - exact).abs() < 1e-9,
                        "beta={beta} j={j} k={k}: {} vs {exact}",
                        z.re
                    );
                    assert!(z.im.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn partition_depends_only_on_j2_minus_k2() {
        // (J, K) pairs with equal J^2 - K^2 give the same Z.
        let base = ToyParams::new(1.3, 2.0, 1.0).unwrap(); // disc = 3
        let alt = ToyParams::new(1.3, 3.0f64.sqrt(), 0.0).unwrap();
        let alt2 = ToyParams::new(1.3, 2.5, (2.5f64 * 2.5 - 3.0).sqrt()).unwrap();
        let z0 = partition_exact(&base).unwrap();
        assert_relative_eq!(z0, partition_exact(&alt).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(z0, partition_exact(&alt2).unwrap(), max_relative = 1e-12);
        // ... and swapping J and K genuinely changes it (sign of the disc).
        let swapped = ToyParams::new(1.3, 1.0, 2.0).unwrap();
        assert!((z0 - partition_exact(&swapped).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn monotonic_in_beta_j_for_k_zero() {
        let mut prev = 0.0;
        for i in 1..=20 {
            let bj = 0.25 * i as f64;
            let p = ToyParams::new(bj, 1.0, 0.0).unwrap();
            let z = partition_exact(&p).unwrap();
            assert!(z > prev, "Z not increasing at beta J = {bj}");
            prev = z;
        }
    }

    #[test]
    fn equivalent_hamiltonian_branches() {
        let hermitian = ToyParams::new(1.0, 2.0, 0.0).unwrap();
        assert_eq!(
            equivalent_real_hamiltonian(&hermitian, 0.0),
            Complex64::new(-2.0, 0.0)
        );
        let exceptional = ToyParams::new(1.0, 1.5, 1.5).unwrap();
        assert_eq!(
            equivalent_real_hamiltonian(&exceptional, 0.4),
            Complex64::new(0.0, 0.0)
        );
        let broken = ToyParams::new(1.0, 0.0, 2.0).unwrap();
        assert_eq!(
            equivalent_real_hamiltonian(&broken, 0.0),
            Complex64::new(0.0, -2.0)
        );
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ToyParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ToyParams::new(1.0, -1.0, 0.0).is_err());
        assert!(ToyParams::new(1.0, 0.0, f64::NAN).is_err());
    }
}
