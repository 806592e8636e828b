//! The d-dimensional RG system for the XY model with four-state clock
//! anisotropy in both PT regimes:
//!
//! ```text
//! dkappa/dl  = +-(4/pi^2) ytilde^2 - kappa^2 y^2 + (d-2) kappa
//! dy/dl      = [d - f(d) kappa] y
//! dytilde/dl = [d - 4 f(d) / (pi^2 kappa)] ytilde
//! ```
//!
//! with f(d) = (d-2) Gamma(d/2-1) / (2 pi^{d/2-2}) and the upper sign in the
//! PT-symmetric regime (ytilde^2 = y_r^2 - y_i^2 > 0), the lower sign in the
//! PT-broken one. Also the parameter map from the field theory to the
//! effective clock model, fixed-point location and classification, critical
//! exponents, flow integration, and the d = 2 fixed-line scan.

use crate::numerics::{
    eigenvalues_small, gamma_fn, integrate_ode_with, newton_root, DenseMatrix, IntegratorConfig,
    NumericsError, Termination,
};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum RgError {
    #[error("invalid RG state: {0}")]
    InvalidState(&'static str),
    #[error("spacetime dimension {0} outside the supported range [2, 4]")]
    DimensionOutOfRange(f64),
    #[error("m^2 >= 0: amplitude freezing is invalid in the disordered phase")]
    DisorderedPhase,
    #[error("unsupported (d, regime) combination: {0}")]
    UnsupportedRegime(String),
    #[error("fixed-line scan requires y* values in [0, 0.3], got {0}")]
    FixedLineRange(f64),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, RgError>;

/// Euler-Mascheroni constant, used in the d -> 2 expansion of f(d).
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Which side of the PT transition the couplings sit on. The sign of
/// y_r^2 - y_i^2 is an RG invariant (ln(y_r/y_i) does not flow), so the
/// phase is a constant tag along any trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PtPhase {
    Symmetric,
    Broken,
}

impl PtPhase {
    /// Sign of the ytilde^2 contribution to dkappa/dl.
    fn kappa_sign(self) -> f64 {
        match self {
            PtPhase::Symmetric => 1.0,
            PtPhase::Broken => -1.0,
        }
    }
}

impl std::fmt::Display for PtPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PtPhase::Symmetric => "symmetric",
            PtPhase::Broken => "broken",
        })
    }
}

/// Running couplings at one flow scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RGState {
    /// Dimensionless stiffness, > 0.
    pub kappa: f64,
    /// Vortex fugacity, >= 0.
    pub y: f64,
    /// Clock coupling ytilde = sqrt(|y_r^2 - y_i^2|), >= 0.
    pub y_tilde: f64,
    pub pt_phase: PtPhase,
    /// Spacetime dimension, in [2, 4].
    pub d: f64,
}

impl RGState {
    pub fn new(kappa: f64, y: f64, y_tilde: f64, pt_phase: PtPhase, d: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(RgError::InvalidState("kappa must be finite and > 0"));
        }
        if !(y.is_finite() && y >= 0.0 && y_tilde.is_finite() && y_tilde >= 0.0) {
            return Err(RgError::InvalidState("y and y_tilde must be >= 0"));
        }
        check_dimension(d)?;
        Ok(Self { kappa, y, y_tilde, pt_phase, d })
    }
}

fn check_dimension(d: f64) -> Result<()> {
    if !(d.is_finite() && (2.0..=4.0).contains(&d)) {
        return Err(RgError::DimensionOutOfRange(d));
    }
    Ok(())
}

/// Field-theory couplings before amplitude freezing.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldTheoryParams {
    /// Mass squared; must be negative for the ordered phase.
    pub m2: f64,
    /// Quartic coupling, > 0.
    pub u: f64,
    /// Real clock coupling, >= 0.
    pub v: f64,
    /// Imaginary clock coupling, >= 0.
    pub w: f64,
    /// Clock order (4 for the four-state model).
    pub n: usize,
}

impl FieldTheoryParams {
    pub fn new(m2: f64, u: f64, v: f64, w: f64, n: usize) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(RgError::InvalidState("u must be finite and > 0"));
        }
        if !(v >= 0.0 && w >= 0.0 && v.is_finite() && w.is_finite() && m2.is_finite()) {
            return Err(RgError::InvalidState("v, w must be finite and >= 0"));
        }
        if n == 0 {
            return Err(RgError::InvalidState("clock order must be >= 1"));
        }
        Ok(Self { m2, u, v, w, n })
    }
}

/// Effective clock-model couplings after freezing the amplitude at
/// rho_0^2 = -2 m^2 / u.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EffectiveCouplings {
    /// Stiffness K = rho_0^2.
    pub k_stiffness: f64,
    /// z_r = v rho_0^N / 2^{N/2}.
    pub z_r: f64,
    /// z_i = w rho_0^N / 2^{N/2}.
    pub z_i: f64,
    /// sqrt(z_r^2 - z_i^2), continued to i sqrt(z_i^2 - z_r^2) when PT-broken.
    pub z_tilde: Complex64,
    pub pt_phase: PtPhase,
}

/// Maps the field theory onto the effective clock model. Requires m2 < 0.
pub fn map_to_effective(p: &FieldTheoryParams) -> Result<EffectiveCouplings> {
    if p.m2 >= 0.0 {
        return Err(RgError::DisorderedPhase);
    }
    let rho0_sq = -2.0 * p.m2 / p.u;
    let rho0 = rho0_sq.sqrt();
    let scale = rho0.powi(p.n as i32) / 2f64.powf(p.n as f64 / 2.0);
    let z_r = p.v * scale;
    let z_i = p.w * scale;
    let disc = z_r * z_r - z_i * z_i;
    let (z_tilde, pt_phase) = if disc >= 0.0 {
        (Complex64::new(disc.sqrt(), 0.0), PtPhase::Symmetric)
    } else {
        (Complex64::new(0.0, (-disc).sqrt()), PtPhase::Broken)
    };
    Ok(EffectiveCouplings {
        k_stiffness: rho0_sq,
        z_r,
        z_i,
        z_tilde,
        pt_phase,
    })
}

/// f(d) = (d-2) Gamma(d/2 - 1) / (2 pi^{d/2 - 2}).
///
/// At d = 2 the product (d-2) Gamma((d-2)/2) tends to 2, giving the analytic
/// limit f(2) = pi; a two-term expansion covers |d - 2| <= 1e-6, consistent
/// with the d = 2 flow equation dytilde/dl = [2 - 4/(pi kappa)] ytilde.
pub fn f_of_d(d: f64) -> Result<f64> {
    check_dimension(d)?;
    let eps = d - 2.0;
    if eps.abs() <= 1e-6 {
        return Ok(PI * (1.0 - eps * (EULER_GAMMA + PI.ln()) / 2.0));
    }
    let gamma = gamma_fn(d / 2.0 - 1.0)?;
    Ok(eps * gamma / (2.0 * PI.powf(d / 2.0 - 2.0)))
}

/// The three beta functions at a state. Errors if kappa <= 0.
pub fn beta_functions(s: &RGState) -> Result<(f64, f64, f64)> {
    if !(s.kappa > 0.0) {
        return Err(RgError::InvalidState("kappa must be > 0"));
    }
    let f = f_of_d(s.d)?;
    Ok(beta_raw(s.kappa, s.y, s.y_tilde, s.d, f, s.pt_phase))
}

#[inline]
fn beta_raw(kappa: f64, y: f64, y_tilde: f64, d: f64, f: f64, phase: PtPhase) -> (f64, f64, f64) {
    let sign = phase.kappa_sign();
    let dk = sign * 4.0 / (PI * PI) * y_tilde * y_tilde - kappa * kappa * y * y + (d - 2.0) * kappa;
    let dy = (d - f * kappa) * y;
    let dyt = (d - 4.0 * f / (PI * PI * kappa)) * y_tilde;
    (dk, dy, dyt)
}

/// Analytic Jacobian of the beta functions.
pub fn beta_jacobian(s: &RGState) -> Result<DenseMatrix> {
    if !(s.kappa > 0.0) {
        return Err(RgError::InvalidState("kappa must be > 0"));
    }
    let f = f_of_d(s.d)?;
    Ok(jacobian_raw(s.kappa, s.y, s.y_tilde, s.d, f, s.pt_phase))
}

fn jacobian_raw(
    kappa: f64,
    y: f64,
    y_tilde: f64,
    d: f64,
    f: f64,
    phase: PtPhase,
) -> DenseMatrix {
    let sign = phase.kappa_sign();
    let mut j = DenseMatrix::zeros(3);
    j.set(0, 0, -2.0 * kappa * y * y + (d - 2.0));
    j.set(0, 1, -2.0 * kappa * kappa * y);
    j.set(0, 2, sign * 8.0 / (PI * PI) * y_tilde);
    j.set(1, 0, -f * y);
    j.set(1, 1, d - f * kappa);
    j.set(2, 0, 4.0 * f / (PI * PI * kappa * kappa) * y_tilde);
    j.set(2, 2, d - 4.0 * f / (PI * PI * kappa));
    j
}

/// Closed-form fixed-point coordinates and eigenvalues.
pub mod closed_form {
    use super::*;

    /// kappa_1 = d / f(d).
    pub fn kappa1(d: f64) -> Result<f64> {
        Ok(d / f_of_d(d)?)
    }

    /// y_1 = sqrt((d-2)/kappa_1).
    pub fn y1(d: f64) -> Result<f64> {
        Ok(((d - 2.0) / kappa1(d)?).sqrt())
    }

    /// kappa_2 = 4 f(d) / (pi^2 d).
    pub fn kappa2(d: f64) -> Result<f64> {
        Ok(4.0 * f_of_d(d)? / (PI * PI * d))
    }

    /// ytilde_2 = (pi/2) sqrt((d-2) kappa_2).
    pub fn ytilde2(d: f64) -> Result<f64> {
        Ok(PI / 2.0 * ((d - 2.0) * kappa2(d)?).sqrt())
    }

    /// The y-direction eigenvalue at P2: lambda_0 = d - f(d) kappa_2.
    pub fn lambda0(d: f64) -> Result<f64> {
        Ok(d - f_of_d(d)? * kappa2(d)?)
    }

    /// The spiral pair at P2: [d - 2 +- i sqrt((d-2)(7d+2))] / 2.
    pub fn lambda_pm(d: f64) -> (Complex64, Complex64) {
        let re = (d - 2.0) / 2.0;
        let im = ((d - 2.0) * (7.0 * d + 2.0)).max(0.0).sqrt() / 2.0;
        (Complex64::new(re, im), Complex64::new(re, -im))
    }

    /// Hermitian-channel (kappa, y) subsystem eigenvalues at its fixed point:
    /// a_pm = [2 - d +- sqrt((d-2)(9d-2))] / 2.
    pub fn hermitian_a_pm(d: f64) -> (f64, f64) {
        let root = ((d - 2.0) * (9.0 * d - 2.0)).max(0.0).sqrt();
        ((2.0 - d + root) / 2.0, (2.0 - d - root) / 2.0)
    }
}

/// Identity of a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointLabel {
    P1,
    P2,
    Gaussian,
    FixedLinePoint,
}

impl std::fmt::Display for FixedPointLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FixedPointLabel::P1 => "P1",
            FixedPointLabel::P2 => "P2",
            FixedPointLabel::Gaussian => "gaussian",
            FixedPointLabel::FixedLinePoint => "fixed_line_point",
        })
    }
}

/// Linear stability class from the Jacobian eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Sink,
    Source,
    Saddle,
    SpiralSource,
    SpiralSink,
    Marginal,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Sink => "sink",
            Classification::Source => "source",
            Classification::Saddle => "saddle",
            Classification::SpiralSource => "spiral_source",
            Classification::SpiralSink => "spiral_sink",
            Classification::Marginal => "marginal",
        })
    }
}

/// A located fixed point with its linearization.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub label: FixedPointLabel,
    /// (kappa, y, y_tilde).
    pub location: (f64, f64, f64),
    pub jacobian: DenseMatrix,
    /// Sorted by descending real part, then descending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub classification: Classification,
}

const FIXED_POINT_RESIDUAL: f64 = 1e-12;
const IMAG_CLASSIFICATION_TOL: f64 = 1e-10;

/// Locates the nontrivial fixed points for d in (2, 4].
///
/// In the PT-symmetric regime the only one is P1 = (d/f, sqrt((d-2)/kappa1), 0);
/// the PT-broken regime adds P2 = (4f/(pi^2 d), 0, (pi/2) sqrt((d-2) kappa2)).
/// Closed-form seeds are refined by Newton to residual < 1e-12; eigenvalues
/// come from the analytic Jacobian.
pub fn fixed_points(d: f64, phase: PtPhase) -> Result<Vec<FixedPoint>> {
    check_dimension(d)?;
    if d <= 2.0 {
        return Err(RgError::DimensionOutOfRange(d));
    }
    let mut seeds = vec![(
        FixedPointLabel::P1,
        [closed_form::kappa1(d)?, closed_form::y1(d)?, 0.0],
    )];
    if phase == PtPhase::Broken {
        seeds.push((
            FixedPointLabel::P2,
            [closed_form::kappa2(d)?, 0.0, closed_form::ytilde2(d)?],
        ));
    }
    let f = f_of_d(d)?;
    let mut out = Vec::with_capacity(seeds.len());
    for (label, seed) in seeds {
        let refined = newton_root(
            |x| {
                let (a, b, c) = beta_raw(x[0], x[1], x[2], d, f, phase);
                vec![a, b, c]
            },
            |x| jacobian_raw(x[0], x[1], x[2], d, f, phase),
            &seed,
            FIXED_POINT_RESIDUAL,
        )?;
        let [kappa, y, y_tilde]: [f64; 3] = refined.root.clone().try_into().unwrap();
        let jacobian = jacobian_raw(kappa, y, y_tilde, d, f, phase);
        let eigenvalues = {
            let mut e = eigenvalues_small(&jacobian)?;
            e.sort_by(|a, b| {
                b.re.partial_cmp(&a.re)
                    .unwrap()
                    .then(b.im.partial_cmp(&a.im).unwrap())
            });
            e
        };
        let classification = classify(&eigenvalues, jacobian.max_abs());
        out.push(FixedPoint {
            label,
            location: (kappa, y, y_tilde),
            jacobian,
            eigenvalues,
            classification,
        });
    }
    Ok(out)
}

fn classify(eigenvalues: &[Complex64], scale: f64) -> Classification {
    let tol = 1e-10 * scale.max(1.0);
    let has_imag = eigenvalues.iter().any(|e| e.im.abs() > IMAG_CLASSIFICATION_TOL);
    if eigenvalues.iter().any(|e| e.re.abs() <= tol) {
        return Classification::Marginal;
    }
    let all_pos = eigenvalues.iter().all(|e| e.re > 0.0);
    let all_neg = eigenvalues.iter().all(|e| e.re < 0.0);
    match (all_pos, all_neg, has_imag) {
        (true, _, true) => Classification::SpiralSource,
        (true, _, false) => Classification::Source,
        (_, true, true) => Classification::SpiralSink,
        (_, true, false) => Classification::Sink,
        _ => Classification::Saddle,
    }
}

/// Critical-exponent regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    HermitianXy,
    PtSymmetricClock,
    PtBroken,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::HermitianXy => "hermitian_xy",
            Regime::PtSymmetricClock => "pt_symmetric_clock",
            Regime::PtBroken => "pt_broken",
        })
    }
}

/// Critical exponents for one (d, regime) pair.
///
/// `nu` is `None` where no single power law exists (the d = 2 fixed-line and
/// walking regimes); `eta` is only known at this order for d = 2; `beta_op`
/// is nu * eta / 2 where both are defined.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    pub d: f64,
    pub regime: Regime,
    pub nu: Option<f64>,
    /// epsilon-expansion companion value 1/(2 sqrt(eps)) + 1/8 (Hermitian
    /// channel only), reported side by side with the direct eigenvalue route.
    pub nu_epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub beta_op: Option<f64>,
    /// True in the d = 2 PT-broken (walking) regime, where the order
    /// parameter vanishes identically.
    pub order_parameter_vanishes: bool,
    /// True when lambda_0 is small enough that nu has effectively diverged
    /// (proximity to the d -> 2 fixed-point collision).
    pub near_collision: bool,
    /// The eigenvalue nu derives from (zero where not applicable).
    pub source_eigenvalue: Complex64,
}

const NEAR_COLLISION_LAMBDA: f64 = 1e-2;

/// Builds the exponent report for a supported (d, regime) pair.
///
/// For d in (2, 4]: the Hermitian / PT-symmetric channel reports
/// nu = 1/a_+ from the (kappa, y) subsystem next to the epsilon-expansion
/// value; the PT-broken channel reports nu = 1/lambda_0. At exactly d = 2:
/// eta = 1/4 in all regimes; the symmetric clock regime has a continuously
/// varying nu (see [`fixed_line_scan`]) and the broken regime has walking
/// scaling with a vanishing order parameter.
pub fn exponent_report(d: f64, regime: Regime) -> Result<ExponentReport> {
    check_dimension(d)?;
    let at_two = d == 2.0;
    match regime {
        Regime::HermitianXy | Regime::PtSymmetricClock if !at_two => {
            // Both flow to P1; the clock direction does not alter nu here.
            let a_plus = hermitian_subsystem_leading_eigenvalue(d)?;
            let eps = d - 2.0;
            Ok(ExponentReport {
                d,
                regime,
                nu: Some(1.0 / a_plus),
                nu_epsilon: Some(1.0 / (2.0 * eps.sqrt()) + 0.125),
                eta: None,
                beta_op: None,
                order_parameter_vanishes: false,
                near_collision: false,
                source_eigenvalue: Complex64::new(a_plus, 0.0),
            })
        }
        Regime::PtBroken if !at_two => {
            let lambda0 = closed_form::lambda0(d)?;
            Ok(ExponentReport {
                d,
                regime,
                nu: Some(1.0 / lambda0),
                nu_epsilon: None,
                eta: None,
                beta_op: None,
                order_parameter_vanishes: false,
                near_collision: lambda0 < NEAR_COLLISION_LAMBDA,
                source_eigenvalue: Complex64::new(lambda0, 0.0),
            })
        }
        Regime::HermitianXy => {
            // d = 2: the BKT regime proper; eta = 1/4, no power-law nu.
            Ok(ExponentReport {
                d,
                regime,
                nu: None,
                nu_epsilon: None,
                eta: Some(0.25),
                beta_op: None,
                order_parameter_vanishes: true,
                near_collision: false,
                source_eigenvalue: Complex64::new(0.0, 0.0),
            })
        }
        Regime::PtSymmetricClock => {
            // d = 2: continuously varying nu(y*) ~ 1/y* along the third
            // fixed line; see fixed_line_exponent_at for pointwise values.
            Ok(ExponentReport {
                d,
                regime,
                nu: None,
                nu_epsilon: None,
                eta: Some(0.25),
                beta_op: None,
                order_parameter_vanishes: false,
                near_collision: false,
                source_eigenvalue: Complex64::new(0.0, 0.0),
            })
        }
        Regime::PtBroken => {
            // d = 2: walking regime after the collision; BKT-like essential
            // scaling, order parameter always vanishes.
            Ok(ExponentReport {
                d,
                regime,
                nu: None,
                nu_epsilon: None,
                eta: Some(0.25),
                beta_op: None,
                order_parameter_vanishes: true,
                near_collision: true,
                source_eigenvalue: Complex64::new(0.0, 0.0),
            })
        }
    }
}

/// Leading eigenvalue a_+ of the 2d (kappa, y) subsystem at its nontrivial
/// fixed point, computed from the analytic 2x2 Jacobian.
pub fn hermitian_subsystem_leading_eigenvalue(d: f64) -> Result<f64> {
    check_dimension(d)?;
    if d <= 2.0 {
        return Err(RgError::DimensionOutOfRange(d));
    }
    let f = f_of_d(d)?;
    let kappa = d / f;
    let y = ((d - 2.0) / kappa).sqrt();
    // Jacobian of (dkappa, dy) = (-k^2 y^2 + (d-2) k, (d - f k) y).
    let j = DenseMatrix::from_rows(&[
        vec![-2.0 * kappa * y * y + (d - 2.0), -2.0 * kappa * kappa * y],
        vec![-f * y, d - f * kappa],
    ])?;
    let eigs = eigenvalues_small(&j)?;
    Ok(eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Pointwise exponents on the d = 2 third fixed line (kappa = 2/pi,
/// y = ytilde = y*): nu = 1 / lambda_leading(y*), eta = 1/4,
/// beta_op = nu eta / 2.
pub fn fixed_line_exponent_at(y_star: f64) -> Result<ExponentReport> {
    let scan = fixed_line_scan(&[y_star])?;
    let lambda = scan[0].1;
    let nu = if lambda > 0.0 { Some(1.0 / lambda) } else { None };
    Ok(ExponentReport {
        d: 2.0,
        regime: Regime::PtSymmetricClock,
        nu,
        nu_epsilon: None,
        eta: Some(0.25),
        beta_op: nu.map(|n| n * 0.25 / 2.0),
        order_parameter_vanishes: false,
        near_collision: false,
        source_eigenvalue: Complex64::new(lambda, 0.0),
    })
}

/// Why an RG flow stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowTermination {
    SpanComplete,
    Diverged,
    MaxSteps,
    /// ||beta||_inf dropped below 1e-12: the flow entered a fixed-point
    /// neighborhood.
    FixedPointReached,
    /// kappa fell below the positivity floor; the trajectory left the
    /// domain of the flow equations.
    LeftDomain,
}

impl std::fmt::Display for FlowTermination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlowTermination::SpanComplete => "span_complete",
            FlowTermination::Diverged => "diverged",
            FlowTermination::MaxSteps => "max_steps",
            FlowTermination::FixedPointReached => "fixed_point_reached",
            FlowTermination::LeftDomain => "left_domain",
        })
    }
}

/// Ordered (l, state) samples of an integrated flow.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub samples: Vec<(f64, RGState)>,
    pub termination: FlowTermination,
}

impl FlowTrace {
    pub fn last(&self) -> &(f64, RGState) {
        self.samples.last().expect("trace always holds the start")
    }
}

const BETA_STOP_NORM: f64 = 1e-12;
const KAPPA_FLOOR: f64 = 1e-6;

/// Integrates the flow from `s0` to scale `l_max`.
///
/// Stops early on divergence, on entering a fixed-point neighborhood
/// (||beta||_inf < 1e-12), or when kappa crosses its positivity floor.
pub fn integrate_rg_flow(s0: &RGState, l_max: f64, cfg: &IntegratorConfig) -> Result<FlowTrace> {
    beta_functions(s0)?; // validates the state and the dimension
    let f = f_of_d(s0.d)?;
    let d = s0.d;
    let phase = s0.pt_phase;
    let rhs = move |_l: f64, y: &[f64], dy: &mut [f64]| {
        let kappa = y[0].max(f64::MIN_POSITIVE);
        let (a, b, c) = beta_raw(kappa, y[1], y[2], d, f, phase);
        dy[0] = a;
        dy[1] = b;
        dy[2] = c;
    };
    let stop = move |_l: f64, y: &[f64]| {
        if y[0] < KAPPA_FLOOR {
            return true;
        }
        let (a, b, c) = beta_raw(y[0], y[1], y[2], d, f, phase);
        a.abs().max(b.abs()).max(c.abs()) < BETA_STOP_NORM
    };
    let trace = integrate_ode_with(rhs, &[s0.kappa, s0.y, s0.y_tilde], (0.0, l_max), cfg, stop)?;
    let termination = match trace.termination {
        Termination::SpanComplete => FlowTermination::SpanComplete,
        Termination::Diverged => FlowTermination::Diverged,
        Termination::MaxSteps => FlowTermination::MaxSteps,
        Termination::Halted => {
            if trace.last().y[0] < KAPPA_FLOOR {
                FlowTermination::LeftDomain
            } else {
                FlowTermination::FixedPointReached
            }
        }
    };
    let samples = trace
        .samples
        .iter()
        .map(|s| {
            (
                s.l,
                RGState {
                    kappa: s.y[0],
                    y: s.y[1],
                    y_tilde: s.y[2],
                    pt_phase: phase,
                    d,
                },
            )
        })
        .collect();
    Ok(FlowTrace {
        samples,
        termination,
    })
}

/// Scans the d = 2 third fixed line (kappa = 2/pi, y = ytilde = y*),
/// returning for each y* the largest real part among the eigenvalues of the
/// numerically linearized full 3d system.
///
/// The leading eigenvalue is proportional to y* to leading order, so the
/// correlation-length exponent varies continuously as nu ~ 1/y*.
pub fn fixed_line_scan(y_star_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if y_star_grid.is_empty() {
        return Err(RgError::EmptyInput("fixed_line_scan grid"));
    }
    let kappa_star = 2.0 / PI;
    let f2 = f_of_d(2.0)?;
    let mut out = Vec::with_capacity(y_star_grid.len());
    for &y_star in y_star_grid {
        if !(0.0..=0.3).contains(&y_star) {
            return Err(RgError::FixedLineRange(y_star));
        }
        let j = numeric_jacobian(kappa_star, y_star, y_star, 2.0, f2, PtPhase::Symmetric);
        let eigs = eigenvalues_small(&j)?;
        let leading = eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        out.push((y_star, leading));
    }
    Ok(out)
}

/// Central finite-difference Jacobian of the beta functions (step 1e-6).
fn numeric_jacobian(kappa: f64, y: f64, y_tilde: f64, d: f64, f: f64, phase: PtPhase) -> DenseMatrix {
    let h = 1e-6;
    let base = [kappa, y, y_tilde];
    let mut j = DenseMatrix::zeros(3);
    for col in 0..3 {
        let mut up = base;
        let mut dn = base;
        up[col] += h;
        dn[col] -= h;
        let bu = beta_raw(up[0], up[1], up[2], d, f, phase);
        let bd = beta_raw(dn[0], dn[1], dn[2], d, f, phase);
        let du = [bu.0, bu.1, bu.2];
        let dd = [bd.0, bd.1, bd.2];
        for row in 0..3 {
            j.set(row, col, (du[row] - dd[row]) / (2.0 * h));
        }
    }
    j
}

/// Straight-line fit through the origin of a fixed-line scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedLineFit {
    pub slope: f64,
    /// RMS residual of the fit normalized by the RMS of the data.
    pub residual: f64,
}

/// Fits `leading_eigenvalue = slope * y_star` through the origin.
pub fn fixed_line_fit(points: &[(f64, f64)]) -> Result<FixedLineFit> {
    if points.is_empty() {
        return Err(RgError::EmptyInput("fixed_line_fit"));
    }
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    if sxx == 0.0 {
        return Err(RgError::EmptyInput("fixed_line_fit (degenerate grid)"));
    }
    let slope = sxy / sxx;
    let ss_res: f64 = points.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    let ss_dat: f64 = points.iter().map(|(_, y)| y * y).sum();
    Ok(FixedLineFit {
        slope,
        residual: (ss_res / ss_dat.max(f64::MIN_POSITIVE)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn f_of_d_reference_values() {
        // d = 3: Gamma(1/2) = sqrt(pi), denominator 2 pi^{-1/2} => pi/2.
        assert_relative_eq!(f_of_d(3.0).unwrap(), PI / 2.0, max_relative = 1e-12);
        // d = 4: 2 Gamma(1) / 2 = 1.
        assert_relative_eq!(f_of_d(4.0).unwrap(), 1.0, max_relative = 1e-12);
        // d = 2: the series limit.
        assert_eq!(f_of_d(2.0).unwrap(), PI);
        // The series joins the direct formula smoothly.
        let eps = 1e-6;
        let series = f_of_d(2.0 + eps).unwrap();
        let direct = (eps) * gamma_fn(1.0 + eps / 2.0 - 1.0 + 0.0).unwrap()
            / (2.0 * PI.powf((2.0 + eps) / 2.0 - 2.0));
        assert_relative_eq!(series, direct, max_relative = 1e-9);
        assert!(f_of_d(1.9).is_err());
        assert!(f_of_d(4.1).is_err());
    }

    #[test]
    fn d2_reduction_matches_bkt_form() {
        // At d = 2 the betas must equal (+-(4/pi^2) yt^2 - k^2 y^2,
        // (2 - pi k) y, (2 - 4/(pi k)) yt) exactly (f(2) = pi).
        for &(kappa, y, yt) in &[(0.5, 0.2, 0.1), (2.0 / PI, 0.3, 0.3), (1.2, 0.0, 0.4)] {
            for phase in [PtPhase::Symmetric, PtPhase::Broken] {
                let s = RGState::new(kappa, y, yt, phase, 2.0).unwrap();
                let (dk, dy, dyt) = beta_functions(&s).unwrap();
                let sign = phase.kappa_sign();
                assert_relative_eq!(
                    dk,
                    sign * 4.0 / (PI * PI) * yt * yt - kappa * kappa * y * y,
                    epsilon = 1e-15
                );
                assert_relative_eq!(dy, (2.0 - PI * kappa) * y, epsilon = 1e-15);
                assert_relative_eq!(dyt, (2.0 - 4.0 / (PI * kappa)) * yt, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn beta_vanishes_at_bkt_fixed_point() {
        let s = RGState::new(2.0 / PI, 0.0, 0.0, PtPhase::Symmetric, 2.0).unwrap();
        let (dk, dy, dyt) = beta_functions(&s).unwrap();
        assert_eq!((dk, dy, dyt), (0.0, 0.0, 0.0));
    }

    #[test]
    fn beta_vanishes_at_p1_and_p2_closed_forms() {
        let d = 3.0;
        let p1 = RGState::new(
            closed_form::kappa1(d).unwrap(),
            closed_form::y1(d).unwrap(),
            0.0,
            PtPhase::Broken,
            d,
        )
        .unwrap();
        let (a, b, c) = beta_functions(&p1).unwrap();
        assert!(a.abs() < 1e-14 && b.abs() < 1e-14 && c.abs() < 1e-14);

        let p2 = RGState::new(
            closed_form::kappa2(d).unwrap(),
            0.0,
            closed_form::ytilde2(d).unwrap(),
            PtPhase::Broken,
            d,
        )
        .unwrap();
        let (a, b, c) = beta_functions(&p2).unwrap();
        assert!(a.abs() < 1e-14 && b.abs() < 1e-14 && c.abs() < 1e-14);
    }

    #[test]
    fn p2_closed_form_values_at_d3() {
        assert_relative_eq!(closed_form::kappa1(3.0).unwrap(), 6.0 / PI, epsilon = 1e-14);
        assert_relative_eq!(
            closed_form::y1(3.0).unwrap(),
            (PI / 6.0).sqrt(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            closed_form::kappa2(3.0).unwrap(),
            2.0 / (3.0 * PI),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            closed_form::ytilde2(3.0).unwrap(),
            PI / 2.0 * (2.0 / (3.0 * PI)).sqrt(),
            epsilon = 1e-14
        );
        assert_relative_eq!(closed_form::lambda0(3.0).unwrap(), 8.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn fixed_points_broken_d3() {
        let fps = fixed_points(3.0, PtPhase::Broken).unwrap();
        assert_eq!(fps.len(), 2);
        let p1 = &fps[0];
        assert_eq!(p1.label, FixedPointLabel::P1);
        assert!((p1.location.0 - 1.9098593171027440).abs() < 1e-9);
        assert!((p1.location.1 - 0.7236012545582677).abs() < 1e-9);
        assert!(p1.location.2.abs() < 1e-12);
        assert_eq!(p1.classification, Classification::Saddle);

        let p2 = &fps[1];
        assert_eq!(p2.label, FixedPointLabel::P2);
        assert!((p2.location.0 - 0.2122065907891938).abs() < 1e-10);
        assert!(p2.location.1.abs() < 1e-12);
        assert!((p2.location.2 - 0.7235987755982988).abs() < 1e-9);
        assert_eq!(p2.classification, Classification::SpiralSource);

        // Eigenvalues: {8/3, 0.5 +- i sqrt(23)/2}.
        let eigs = &p2.eigenvalues;
        assert!((eigs[0] - Complex64::new(8.0 / 3.0, 0.0)).norm() < 1e-8);
        assert!((eigs[1] - Complex64::new(0.5, 23.0f64.sqrt() / 2.0)).norm() < 1e-8);
        assert!((eigs[2] - Complex64::new(0.5, -(23.0f64.sqrt()) / 2.0)).norm() < 1e-8);
    }

    #[test]
    fn fixed_points_symmetric_d3_only_p1() {
        let fps = fixed_points(3.0, PtPhase::Symmetric).unwrap();
        assert_eq!(fps.len(), 1);
        assert_eq!(fps[0].label, FixedPointLabel::P1);
    }

    #[test]
    fn fixed_point_residuals_over_d_grid() {
        for &d in &[2.1, 2.5, 3.0, 3.5, 4.0] {
            let f = f_of_d(d).unwrap();
            for fp in fixed_points(d, PtPhase::Broken).unwrap() {
                let (k, y, yt) = fp.location;
                let (a, b, c) = beta_raw(k, y, yt, d, f, PtPhase::Broken);
                let res = a.abs().max(b.abs()).max(c.abs());
                assert!(res < 1e-12, "residual {res} at d = {d} for {:?}", fp.label);
            }
        }
    }

    #[test]
    fn p2_eigenvalues_match_closed_forms_over_d_grid() {
        for &d in &[2.1, 2.5, 3.0, 3.5, 4.0] {
            let fps = fixed_points(d, PtPhase::Broken).unwrap();
            let p2 = fps.iter().find(|f| f.label == FixedPointLabel::P2).unwrap();
            let lambda0 = closed_form::lambda0(d).unwrap();
            let (lp, lm) = closed_form::lambda_pm(d);
            let want = [Complex64::new(lambda0, 0.0), lp, lm];
            // Both lists sorted by descending (re, im).
            let mut want = want.to_vec();
            want.sort_by(|a, b| {
                b.re.partial_cmp(&a.re)
                    .unwrap()
                    .then(b.im.partial_cmp(&a.im).unwrap())
            });
            for (got, expect) in p2.eigenvalues.iter().zip(&want) {
                assert!(
                    (got - expect).norm() < 1e-8,
                    "d = {d}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let f = f_of_d(2.7).unwrap();
        for &(k, y, yt) in &[(0.8, 0.3, 0.2), (1.5, 0.05, 0.4), (0.3, 0.6, 0.01)] {
            for phase in [PtPhase::Symmetric, PtPhase::Broken] {
                let analytic = jacobian_raw(k, y, yt, 2.7, f, phase);
                let numeric = numeric_jacobian(k, y, yt, 2.7, f, phase);
                for i in 0..3 {
                    for j in 0..3 {
                        assert!(
                            (analytic.get(i, j) - numeric.get(i, j)).abs() < 1e-7,
                            "J[{i}][{j}] mismatch"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hermitian_channel_eigenvalues_at_d3() {
        let a_plus = hermitian_subsystem_leading_eigenvalue(3.0).unwrap();
        assert_relative_eq!(a_plus, 2.0, epsilon = 1e-12);
        let (ap, am) = closed_form::hermitian_a_pm(3.0);
        assert_relative_eq!(ap, 2.0, epsilon = 1e-14);
        assert_relative_eq!(am, -3.0, epsilon = 1e-14);
        // Numeric route agrees with the closed form across d.
        for &d in &[2.2, 2.8, 3.3, 4.0] {
            let numeric = hermitian_subsystem_leading_eigenvalue(d).unwrap();
            let (closed, _) = closed_form::hermitian_a_pm(d);
            assert_relative_eq!(numeric, closed, max_relative = 1e-10);
        }
    }

    #[test]
    fn exponent_reports() {
        let broken = exponent_report(3.0, Regime::PtBroken).unwrap();
        assert_relative_eq!(broken.nu.unwrap(), 0.375, epsilon = 1e-13);
        assert!(broken.eta.is_none());
        assert!(!broken.near_collision);

        let herm = exponent_report(3.0, Regime::HermitianXy).unwrap();
        assert_relative_eq!(herm.nu.unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(herm.nu_epsilon.unwrap(), 0.625, epsilon = 1e-14);

        // Approaching the collision, lambda_0 -> 0+ and the flag fires.
        let near = exponent_report(2.0001, Regime::PtBroken).unwrap();
        assert!(near.near_collision);
        assert!(near.nu.unwrap() > 100.0);

        let walking = exponent_report(2.0, Regime::PtBroken).unwrap();
        assert!(walking.nu.is_none());
        assert_eq!(walking.eta, Some(0.25));
        assert!(walking.order_parameter_vanishes);

        assert!(exponent_report(4.5, Regime::PtBroken).is_err());
    }

    #[test]
    fn flow_is_stationary_at_p1() {
        let fps = fixed_points(3.0, PtPhase::Broken).unwrap();
        let (k, y, yt) = fps[0].location;
        let s = RGState::new(k, y.max(0.0), yt.max(0.0), PtPhase::Broken, 3.0).unwrap();
        let trace = integrate_rg_flow(&s, 5.0, &IntegratorConfig::default()).unwrap();
        for (_, st) in &trace.samples {
            let dist = (st.kappa - k)
                .abs()
                .max((st.y - y).abs())
                .max((st.y_tilde - yt).abs());
            assert!(dist < 1e-8);
        }
    }

    #[test]
    fn flow_on_fixed_line_stays_put() {
        // d = 2 symmetric, kappa = 2/pi, y = ytilde = y*: the третья fixed line.
        let y_star = 0.1;
        let s = RGState::new(2.0 / PI, y_star, y_star, PtPhase::Symmetric, 2.0).unwrap();
        let trace = integrate_rg_flow(&s, 10.0, &IntegratorConfig::default()).unwrap();
        for (_, st) in &trace.samples {
            assert!((st.kappa - 2.0 / PI).abs() < 1e-8);
            assert!((st.y - y_star).abs() < 1e-8);
            assert!((st.y_tilde - y_star).abs() < 1e-8);
        }
    }

    #[test]
    fn ytilde_pair_consistency_with_tilde_flow() {
        // Integrating (y_r, y_i) with the shared factor [d - 4f/(pi^2 k)]
        // and forming sqrt(|y_r^2 - y_i^2|) must reproduce the ytilde flow,
        // for both orderings of y_r and y_i.
        let d = 2.5;
        let f = f_of_d(d).unwrap();
        for (yr0, yi0) in [(0.3, 0.1), (0.1, 0.3)] {
            let phase = if yr0 >= yi0 {
                PtPhase::Symmetric
            } else {
                PtPhase::Broken
            };
            let yt0 = (yr0 * yr0 - yi0 * yi0) as f64;
            let yt0 = yt0.abs().sqrt();
            let kappa0 = 1.1;
            let y0 = 0.2;

            // 4d system: (kappa, y, y_r, y_i).
            let rhs4 = move |_: f64, s: &[f64], ds: &mut [f64]| {
                let (k, y, yr, yi) = (s[0], s[1], s[2], s[3]);
                let sign_term = 4.0 / (PI * PI) * (yr * yr - yi * yi);
                ds[0] = sign_term - k * k * y * y + (d - 2.0) * k;
                ds[1] = (d - f * k) * y;
                let factor = d - 4.0 * f / (PI * PI * k);
                ds[2] = factor * yr;
                ds[3] = factor * yi;
            };
            let cfg = IntegratorConfig::default();
            let t4 =
                crate::numerics::integrate_ode(rhs4, &[kappa0, y0, yr0, yi0], (0.0, 3.0), &cfg)
                    .unwrap();

            let s3 = RGState::new(kappa0, y0, yt0, phase, d).unwrap();
            let t3 = integrate_rg_flow(&s3, 3.0, &cfg).unwrap();

            let last4 = t4.last();
            let (_, last3) = t3.last();
            let yt_from_pair = (last4.y[2] * last4.y[2] - last4.y[3] * last4.y[3])
                .abs()
                .sqrt();
            assert!(
                (yt_from_pair - last3.y_tilde).abs() < 1e-7,
                "{yt_from_pair} vs {}",
                last3.y_tilde
            );
            // The RG invariant: sign(y_r^2 - y_i^2) never changes.
            for s in &t4.samples {
                let diff = s.y[2] * s.y[2] - s.y[3] * s.y[3];
                if phase == PtPhase::Symmetric {
                    assert!(diff >= -1e-12);
                } else {
                    assert!(diff <= 1e-12);
                }
            }
            // ln(y_r / y_i) is conserved along the flow.
            let r0 = (yr0 / yi0).ln();
            for s in &t4.samples {
                let r = (s.y[2] / s.y[3]).ln();
                assert!((r - r0).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn collision_scan_monotone() {
        let ds = [2.1, 2.05, 2.02, 2.01, 2.005];
        let mut gaps = Vec::new();
        let mut lambdas = Vec::new();
        for &d in &ds {
            gaps.push(closed_form::kappa1(d).unwrap() - closed_form::kappa2(d).unwrap());
            lambdas.push(closed_form::lambda0(d).unwrap());
        }
        for w in gaps.windows(2) {
            assert!(w[1] < w[0] && w[1] > 0.0);
        }
        for w in lambdas.windows(2) {
            assert!(w[1] < w[0] && w[1] > 0.0);
        }
        // y1 and ytilde2 also collapse onto the collision point.
        assert!(closed_form::y1(2.005).unwrap() < closed_form::y1(2.1).unwrap());
        assert!(closed_form::ytilde2(2.005).unwrap() < closed_form::ytilde2(2.1).unwrap());
    }

    #[test]
    fn fixed_line_scan_linear_in_y_star() {
        let grid: Vec<f64> = (1..=10).map(|i| 0.02 * i as f64).collect();
        let scan = fixed_line_scan(&grid).unwrap();
        let fit = fixed_line_fit(&scan).unwrap();
        assert!(fit.residual < 0.02, "residual {}", fit.residual);
        // Doubling y* doubles the eigenvalue within a couple of percent.
        let at_01 = scan.iter().find(|(y, _)| (*y - 0.1).abs() < 1e-12).unwrap().1;
        let at_02 = scan.iter().find(|(y, _)| (*y - 0.2).abs() < 1e-12).unwrap().1;
        assert!((at_02 / at_01 - 2.0).abs() < 0.04);
        // The leading-order slope is 4/sqrt(pi).
        assert!((fit.slope - 4.0 / PI.sqrt()).abs() / fit.slope < 0.05);
    }

    #[test]
    fn fixed_line_scan_zero_is_marginal() {
        let scan = fixed_line_scan(&[0.0]).unwrap();
        assert!(scan[0].1.abs() < 1e-12);
    }

    #[test]
    fn map_to_effective_values() {
        let p = FieldTheoryParams::new(-1.0, 2.0, 0.0, 0.0, 4).unwrap();
        let eff = map_to_effective(&p).unwrap();
        assert_eq!(eff.k_stiffness, 1.0);
        assert_eq!(eff.z_r, 0.0);
        assert_eq!(eff.z_i, 0.0);

        // rho_0^2 = 4, rho_0 = 2: z_r = v rho_0^4 / 2^2 = 16/4 = 4.
        let p = FieldTheoryParams::new(-2.0, 1.0, 1.0, 0.0, 4).unwrap();
        let eff = map_to_effective(&p).unwrap();
        assert_eq!(eff.k_stiffness, 4.0);
        assert_relative_eq!(eff.z_r, 4.0, epsilon = 1e-12);
        assert_eq!(eff.z_i, 0.0);
        assert_eq!(eff.pt_phase, PtPhase::Symmetric);

        // N = 2 broken case: z_r = 3/2, z_i = 5/2, z_tilde = 2i.
        let p = FieldTheoryParams::new(-1.0, 2.0, 3.0, 5.0, 2).unwrap();
        let eff = map_to_effective(&p).unwrap();
        assert_relative_eq!(eff.z_r, 1.5, epsilon = 1e-12);
        assert_relative_eq!(eff.z_i, 2.5, epsilon = 1e-12);
        assert!((eff.z_tilde - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        assert_eq!(eff.pt_phase, PtPhase::Broken);

        assert!(map_to_effective(&FieldTheoryParams::new(1.0, 2.0, 0.0, 0.0, 4).unwrap()).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(RGState::new(0.0, 0.0, 0.0, PtPhase::Symmetric, 3.0).is_err());
        assert!(RGState::new(1.0, -0.1, 0.0, PtPhase::Symmetric, 3.0).is_err());
        assert!(RGState::new(1.0, 0.0, 0.0, PtPhase::Symmetric, 4.5).is_err());
        assert!(RGState::new(1.0, 0.0, 0.0, PtPhase::Symmetric, 1.99).is_err());
        assert!(RGState::new(1.0, 0.0, 0.0, PtPhase::Symmetric, 2.0).is_ok());
    }
}
