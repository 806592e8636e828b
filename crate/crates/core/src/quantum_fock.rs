//! Truncated Fock-space realization of the non-Hermitian bosonic clock
//! Hamiltonian
//!
//! ```text
//! H = eps a'a - [(J+K) a^N + (J-K) (a')^N] / 2
//! ```
//!
//! together with its diagonal similarity transformation to Hermitian form
//! (valid for J > K), spectral-reality diagnostics across the J = K
//! exceptional point, and the coherent-state semiclassical maps, including
//! the two-site Bose-Hubbard / Josephson reduction with gain and loss.

use crate::numerics::{eigenvalues_dense, DenseMatrix, NumericsError};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum FockError {
    #[error("invalid Hamiltonian spec: {0}")]
    InvalidSpec(String),
    #[error("similarity transformation requires J > K (PT-broken input: J = {j}, K = {k})")]
    PtBroken { j: f64, k: f64 },
    #[error("coupling overflow: sqrt((m+N)!/m!) exceeds f64 range at m = {0}")]
    CouplingOverflow(usize),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, FockError>;

/// Maximum Fock-space dimension accepted by the dense eigensolver.
pub const MAX_CUTOFF: usize = 512;

/// Parameters of the clock Hamiltonian and its truncation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClockHamiltonianSpec {
    /// Oscillator energy epsilon.
    pub eps: f64,
    /// Real coupling J >= 0.
    pub j: f64,
    /// Imaginary coupling K >= 0.
    pub k: f64,
    /// Clock order N >= 1.
    pub n: usize,
    /// Fock-space dimension (states |0> .. |cutoff-1>), cutoff >= N.
    pub cutoff: usize,
}

impl ClockHamiltonianSpec {
    pub fn new(eps: f64, j: f64, k: f64, n: usize, cutoff: usize) -> Result<Self> {
        if !(eps.is_finite() && j.is_finite() && k.is_finite()) {
            return Err(FockError::InvalidSpec("parameters must be finite".into()));
        }
        if j < 0.0 || k < 0.0 {
            return Err(FockError::InvalidSpec(
                "couplings J, K must be non-negative".into(),
            ));
        }
        if n == 0 {
            return Err(FockError::InvalidSpec("clock order N must be >= 1".into()));
        }
        if cutoff < n {
            return Err(FockError::InvalidSpec(format!(
                "cutoff {cutoff} < N = {n}: the clock coupling block vanishes entirely"
            )));
        }
        if cutoff > MAX_CUTOFF {
            return Err(FockError::InvalidSpec(format!(
                "cutoff {cutoff} exceeds the dense-eigensolver bound {MAX_CUTOFF}"
            )));
        }
        Ok(Self { eps, j, k, n, cutoff })
    }
}

/// Dense matrix representation of the truncated Hamiltonian.
///
/// Entries are nonzero only on the main diagonal and the +-N-th
/// off-diagonals.
#[derive(Debug, Clone)]
pub struct FockMatrix {
    pub dim: usize,
    pub entries: DenseMatrix,
    pub spec: ClockHamiltonianSpec,
}

/// How the spectrum relates to the PT transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PtPhaseLabel {
    Symmetric,
    Broken,
    Exceptional,
}

impl std::fmt::Display for PtPhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PtPhaseLabel::Symmetric => "symmetric",
            PtPhaseLabel::Broken => "broken",
            PtPhaseLabel::Exceptional => "exceptional",
        };
        f.write_str(s)
    }
}

/// Full spectrum of a truncated Hamiltonian plus reality diagnostics.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Eigenvalues sorted by (re, im); non-real values occur in conjugate pairs.
    pub eigenvalues: Vec<Complex64>,
    pub max_abs_imag: f64,
    pub n_complex_pairs: usize,
    pub pt_phase_label: PtPhaseLabel,
    /// Imaginary-part tolerance actually used for the classification.
    pub tol_imag: f64,
}

/// Two-site Bose-Hubbard parameters in the semiclassical (coherent-state)
/// description.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoseHubbardParams {
    pub j_tunnel: f64,
    pub u: f64,
    pub mu: f64,
    /// Total particle number n = n1 + n2.
    pub n_total: f64,
    /// Population imbalance n1 - n2.
    pub delta_n: f64,
    /// Phase difference across the wells.
    pub delta_theta: f64,
}

impl BoseHubbardParams {
    /// Closed system: |delta_n| < n_total is enforced.
    pub fn closed(j_tunnel: f64, u: f64, mu: f64, n_total: f64, delta_n: f64, delta_theta: f64) -> Result<Self> {
        let p = Self::open(j_tunnel, u, mu, n_total, delta_n, delta_theta)?;
        if delta_n.abs() >= n_total {
            return Err(FockError::InvalidSpec(
                "closed system requires |delta_n| < n_total".into(),
            ));
        }
        Ok(p)
    }

    /// Open (gain/loss) system: the imbalance may exceed the total, making
    /// the tunneling term imaginary.
    pub fn open(j_tunnel: f64, u: f64, mu: f64, n_total: f64, delta_n: f64, delta_theta: f64) -> Result<Self> {
        if !(j_tunnel > 0.0 && u > 0.0 && n_total > 0.0) {
            return Err(FockError::InvalidSpec(
                "j_tunnel, u, n_total must be positive".into(),
            ));
        }
        if !(mu.is_finite() && delta_n.is_finite() && delta_theta.is_finite()) {
            return Err(FockError::InvalidSpec("parameters must be finite".into()));
        }
        Ok(Self { j_tunnel, u, mu, n_total, delta_n, delta_theta })
    }
}

/// Builds the truncated matrix of the clock Hamiltonian in the Fock basis
/// |0> .. |cutoff-1> with a|m> = sqrt(m) |m-1>.
///
/// The a^N term populates row m, column m+N with -(J+K)/2 sqrt((m+N)!/m!);
/// the (a')^N term populates row m+N, column m with -(J-K)/2 times the same
/// factor. Factorial ratios are accumulated in log space so cutoffs up to
/// 512 cannot overflow the accumulation.
pub fn build_clock_hamiltonian(spec: &ClockHamiltonianSpec) -> Result<FockMatrix> {
    let dim = spec.cutoff;
    let mut m = DenseMatrix::zeros(dim);
    for i in 0..dim {
        m.set(i, i, spec.eps * i as f64);
    }
    let upper = -(spec.j + spec.k) / 2.0;
    let lower = -(spec.j - spec.k) / 2.0;
    for row in 0..dim.saturating_sub(spec.n) {
        let mut log_ratio = 0.0;
        for f in (row + 1)..=(row + spec.n) {
            log_ratio += (f as f64).ln();
        }
        let half = 0.5 * log_ratio;
        if half > 709.0 {
            return Err(FockError::CouplingOverflow(row));
        }
        let coupling = half.exp();
        if upper != 0.0 {
            m.set(row, row + spec.n, upper * coupling);
        }
        if lower != 0.0 {
            m.set(row + spec.n, row, lower * coupling);
        }
    }
    Ok(FockMatrix {
        dim,
        entries: m,
        spec: *spec,
    })
}

/// Applies the diagonal similarity transformation exp(lambda a'a) H
/// exp(-lambda a'a) with lambda = arctanh(K/J)/N, which Hermitizes the
/// Hamiltonian when J > K: both off-diagonal bands become
/// -sqrt(J^2 - K^2)/2 sqrt((m+N)!/m!).
///
/// For J <= K the transformation leaves the real domain and an error is
/// returned.
pub fn similarity_transform(h: &FockMatrix) -> Result<FockMatrix> {
    let spec = h.spec;
    if !(spec.j > spec.k) {
        return Err(FockError::PtBroken { j: spec.j, k: spec.k });
    }
    let lambda = (spec.k / spec.j).atanh() / spec.n as f64;
    let dim = h.dim;
    let mut out = DenseMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let v = h.entries.get(i, j);
            if v != 0.0 {
                out.set(i, j, v * (lambda * (i as f64 - j as f64)).exp());
            }
        }
    }
    Ok(FockMatrix {
        dim,
        entries: out,
        spec,
    })
}

/// Computes the full spectrum and classifies the PT phase.
///
/// With `tol_imag = None` the tolerance defaults to 1e-8 times the spectral
/// radius, which separates eigensolver noise from genuine PT breaking.
pub fn spectrum_report(h: &FockMatrix, tol_imag: Option<f64>) -> Result<SpectrumReport> {
    let eigenvalues = eigenvalues_dense(&h.entries)?;
    let radius = eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.norm()));
    let tol = tol_imag.unwrap_or(1e-8 * radius.max(f64::MIN_POSITIVE));
    let max_abs_imag = eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.im.abs()));
    let n_nonreal = eigenvalues.iter().filter(|e| e.im.abs() > tol).count();
    let pt_phase_label = if (h.spec.j - h.spec.k).abs() <= 1e-12 {
        PtPhaseLabel::Exceptional
    } else if max_abs_imag < tol {
        PtPhaseLabel::Symmetric
    } else {
        PtPhaseLabel::Broken
    };
    Ok(SpectrumReport {
        eigenvalues,
        max_abs_imag,
        n_complex_pairs: n_nonreal / 2,
        pt_phase_label,
        tol_imag: tol,
    })
}

/// Coherent-state expectation value of the clock Hamiltonian:
/// eps |alpha|^2 - |alpha|^N (J cos(N theta) + i K sin(N theta)).
pub fn semiclassical_energy(spec: &ClockHamiltonianSpec, alpha_abs: f64, theta: f64) -> Complex64 {
    let n = spec.n as f64;
    let amp = alpha_abs.powi(spec.n as i32);
    Complex64::new(
        spec.eps * alpha_abs * alpha_abs - amp * spec.j * (n * theta).cos(),
        -amp * spec.k * (n * theta).sin(),
    )
}

/// Semiclassical two-site Bose-Hubbard (Josephson) energy:
/// E_n - J sqrt(n^2 - dn^2) cos(dtheta) + (U/4) dn^2 with
/// E_n = -(mu + U/2) n + U n^2 / 4.
///
/// When dn^2 > n^2 the square root continues to +i sqrt(dn^2 - n^2) and the
/// tunneling term becomes purely imaginary.
pub fn josephson_semiclassical(p: &BoseHubbardParams) -> Complex64 {
    let n = p.n_total;
    let e_n = -(p.mu + p.u / 2.0) * n + p.u * n * n / 4.0;
    let real_base = e_n + p.u / 4.0 * p.delta_n * p.delta_n;
    let disc = n * n - p.delta_n * p.delta_n;
    if disc >= 0.0 {
        Complex64::new(real_base - p.j_tunnel * disc.sqrt() * p.delta_theta.cos(), 0.0)
    } else {
        Complex64::new(
            real_base,
            -p.j_tunnel * (-disc).sqrt() * p.delta_theta.cos(),
        )
    }
}

/// Gain/loss bookkeeping: well 1 gains `delta_gain`, well 2 loses it.
///
/// Returns the shifted imbalance dn = n10 - n20 + 2 delta_gain and whether
/// the PT symmetry is broken (delta_gain > n20, the point at which the
/// tunneling term turns imaginary). The total particle number is invariant
/// under the shift.
pub fn gain_loss_imbalance(n10: f64, n20: f64, delta_gain: f64) -> Result<(f64, bool)> {
    if !(n10 >= 0.0 && n20 >= 0.0) {
        return Err(FockError::InvalidSpec(
            "well populations must be non-negative".into(),
        ));
    }
    let total_before = n10 + n20;
    let total_after = (n10 + delta_gain) + (n20 - delta_gain);
    debug_assert_eq!(total_before, total_after);
    let _ = (total_before, total_after);
    let delta_n = n10 - n20 + 2.0 * delta_gain;
    Ok((delta_n, delta_gain > n20))
}
