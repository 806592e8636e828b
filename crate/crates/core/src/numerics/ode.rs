//! Embedded adaptive Runge-Kutta integrator (Dormand-Prince 5(4)) with a
//! PI step-size controller. Flows integrated by this crate are smooth but
//! pass near hyperbolic and spiral fixed points, where mild stiffness makes
//! the PI controller worthwhile.

use super::{NumericsError, Result};

/// Configuration for [`integrate_ode`].
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; `0.0` selects one automatically.
    pub initial_step: f64,
    /// Upper bound on the step length.
    pub max_step: f64,
    pub max_steps: usize,
    /// The flow is declared divergent once any component magnitude exceeds this.
    pub divergence_bound: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            initial_step: 0.0,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
            divergence_bound: 1e6,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(NumericsError::BadConfig("tolerances must be positive"));
        }
        if self.max_steps == 0 {
            return Err(NumericsError::BadConfig("max_steps must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(NumericsError::BadConfig("max_step must be positive"));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(NumericsError::BadConfig("divergence_bound must be positive"));
        }
        Ok(())
    }
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the end of the requested span.
    SpanComplete,
    /// A component magnitude exceeded `divergence_bound` (or became non-finite).
    Diverged,
    /// `max_steps` accepted steps without reaching the span end.
    MaxSteps,
    /// The caller-supplied stop predicate fired.
    Halted,
}

/// One accepted sample of the solution.
#[derive(Debug, Clone)]
pub struct OdeSample {
    pub l: f64,
    pub y: Vec<f64>,
}

/// Ordered accepted steps plus the reason the run ended.
#[derive(Debug, Clone)]
pub struct OdeTrace {
    pub samples: Vec<OdeSample>,
    pub termination: Termination,
    /// Number of rejected trial steps (diagnostic).
    pub rejected_steps: usize,
}

impl OdeTrace {
    pub fn last(&self) -> &OdeSample {
        self.samples.last().expect("trace always holds y0")
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights are row A[5]; the error weights are b5 - b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const STEP_FLOOR: f64 = 1e-14;

/// Integrates `dy/dl = rhs(l, y)` over `l_span`, recording every accepted step.
///
/// The right-hand side writes its value into the output slice. Terminates
/// with [`Termination::Diverged`] when the state leaves the configured
/// bound, [`Termination::MaxSteps`] when the step budget is exhausted, and
/// errors with [`NumericsError::StepUnderflow`] if error control pushes the
/// step below 1e-14.
pub fn integrate_ode<F>(rhs: F, y0: &[f64], l_span: (f64, f64), cfg: &IntegratorConfig) -> Result<OdeTrace>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    integrate_ode_with(rhs, y0, l_span, cfg, |_, _| false)
}

/// [`integrate_ode`] with a stop predicate evaluated on every accepted step;
/// a `true` result ends the run with [`Termination::Halted`].
pub fn integrate_ode_with<F, S>(
    rhs: F,
    y0: &[f64],
    l_span: (f64, f64),
    cfg: &IntegratorConfig,
    stop: S,
) -> Result<OdeTrace>
where
    F: Fn(f64, &[f64], &mut [f64]),
    S: Fn(f64, &[f64]) -> bool,
{
    cfg.validate()?;
    let dim = y0.len();
    if dim == 0 {
        return Err(NumericsError::EmptyInput("integrate_ode"));
    }
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(NumericsError::NonFinite("integrate_ode initial state"));
    }
    let (l0, l_end) = l_span;
    let span = l_end - l0;

    let mut l = l0;
    let mut y = y0.to_vec();
    let mut samples = vec![OdeSample { l, y: y.clone() }];
    let mut rejected = 0usize;

    if span == 0.0 {
        return Ok(OdeTrace {
            samples,
            termination: Termination::SpanComplete,
            rejected_steps: 0,
        });
    }
    let dir = span.signum();

    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; dim]);
    let mut y_stage = vec![0.0; dim];
    let mut y_next = vec![0.0; dim];

    rhs(l, &y, &mut k[0]);
    if !k[0].iter().all(|v| v.is_finite()) {
        return Err(NumericsError::NonFinite("integrate_ode rhs at y0"));
    }

    let mut h = if cfg.initial_step > 0.0 {
        cfg.initial_step
    } else {
        initial_step_guess(&y, &k[0], span.abs(), cfg)
    }
    .min(cfg.max_step)
    .min(span.abs());

    // PI controller state.
    let mut err_prev: f64 = 1.0;
    const SAFETY: f64 = 0.9;
    const ALPHA: f64 = 0.17; // 1/5 - 0.75 * BETA
    const BETA: f64 = 0.04;

    if stop(l, &y) {
        return Ok(OdeTrace {
            samples,
            termination: Termination::Halted,
            rejected_steps: 0,
        });
    }

    let mut accepted = 0usize;
    loop {
        if accepted >= cfg.max_steps {
            return Ok(OdeTrace {
                samples,
                termination: Termination::MaxSteps,
                rejected_steps: rejected,
            });
        }
        let remaining = (l_end - l).abs();
        let mut h_try = h.min(remaining);
        if h_try < STEP_FLOOR {
            // Only the final sliver of the span remains.
            return Ok(OdeTrace {
                samples,
                termination: Termination::SpanComplete,
                rejected_steps: rejected,
            });
        }

        // Trial steps until the error estimate passes.
        let err = loop {
            let hs = dir * h_try;
            for stage in 1..7 {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(stage) {
                        let a = A[stage - 1][j];
                        if a != 0.0 {
                            acc += a * kj[i];
                        }
                    }
                    y_stage[i] = y[i] + hs * acc;
                }
                let (head, tail) = k.split_at_mut(stage);
                let _ = head;
                rhs(l + C[stage] * hs, &y_stage, &mut tail[0]);
            }
            // Stage 6 input is already the 5th-order solution (FSAL).
            y_next.copy_from_slice(&y_stage);

            let mut err_sq = 0.0;
            let mut finite = true;
            for i in 0..dim {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                e *= hs;
                let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_next[i].abs());
                let r = e / sc;
                if !r.is_finite() {
                    finite = false;
                    break;
                }
                err_sq += r * r;
            }
            if !finite {
                // The trial step produced non-finite values: treat as a hard
                // rejection and shrink.
                rejected += 1;
                h_try *= 0.25;
                if h_try < STEP_FLOOR {
                    return Ok(OdeTrace {
                        samples,
                        termination: Termination::Diverged,
                        rejected_steps: rejected,
                    });
                }
                continue;
            }
            let err = (err_sq / dim as f64).sqrt().max(1e-30);
            if err <= 1.0 {
                break err;
            }
            rejected += 1;
            let fac = (SAFETY * err.powf(-ALPHA)).clamp(0.2, 1.0);
            h_try *= fac;
            if h_try < STEP_FLOOR {
                return Err(NumericsError::StepUnderflow { l, step: h_try });
            }
        };

        // Accept.
        l += dir * h_try;
        std::mem::swap(&mut y, &mut y_next);
        k.swap(0, 6); // FSAL: last stage derivative becomes k1
        accepted += 1;
        samples.push(OdeSample { l, y: y.clone() });

        if y.iter().any(|v| !v.is_finite() || v.abs() > cfg.divergence_bound) {
            return Ok(OdeTrace {
                samples,
                termination: Termination::Diverged,
                rejected_steps: rejected,
            });
        }
        if stop(l, &y) {
            return Ok(OdeTrace {
                samples,
                termination: Termination::Halted,
                rejected_steps: rejected,
            });
        }
        if (l_end - l).abs() < STEP_FLOOR || (dir > 0.0 && l >= l_end) || (dir < 0.0 && l <= l_end)
        {
            return Ok(OdeTrace {
                samples,
                termination: Termination::SpanComplete,
                rejected_steps: rejected,
            });
        }

        // PI step update.
        let fac = SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA);
        h = (h_try * fac.clamp(0.2, 6.0)).min(cfg.max_step);
        err_prev = err;
    }
}

/// Cheap starting-step heuristic based on the scale of y0 and f(y0).
fn initial_step_guess(y: &[f64], f: &[f64], span: f64, cfg: &IntegratorConfig) -> f64 {
    let sc = |v: f64| cfg.abs_tol + cfg.rel_tol * v.abs();
    let d0 = y.iter().map(|&v| (v / sc(v)).powi(2)).sum::<f64>().sqrt();
    let d1 = f
        .iter()
        .zip(y)
        .map(|(&fv, &yv)| (fv / sc(yv)).powi(2))
        .sum::<f64>()
        .sqrt();
    let h = if d0 > 1e-10 && d1 > 1e-10 {
        0.01 * d0 / d1
    } else {
        1e-6 * span.max(1.0)
    };
    h.clamp(1e-10, span)
}
