use super::{NumericsError, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Trapezoid rule on the periodic interval [0, 2pi), normalized by 2pi.
///
/// Returns (1/2pi) * integral of f over one period. Spectrally accurate for
/// smooth periodic integrands: the error decays faster than any power of
/// 1/n_points.
pub fn quadrature_periodic<F>(f: F, n_points: usize) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if n_points < 16 {
        return Err(NumericsError::OutOfRange {
            what: "quadrature_periodic (n_points must be >= 16)",
            value: n_points as f64,
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n_points {
        let theta = TAU * k as f64 / n_points as f64;
        let v = f(theta);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(NumericsError::NonFinite("quadrature_periodic integrand"));
        }
        acc += v;
    }
    Ok(acc / n_points as f64)
}
