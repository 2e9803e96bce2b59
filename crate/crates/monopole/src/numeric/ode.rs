//! Adaptive Dormand-Prince 5(4) integration for small complex linear and
//! matrix ODE systems.
//!
//! Error control is relative by default (`atol = 0`), which keeps the
//! integrator scale-invariant: the scattering problem evolves solutions over
//! ten orders of magnitude and the Nahm flow runs into simple poles, and in
//! both cases the absolute scale of the state carries no information. The
//! step controller is the usual 0.9·err^(-1/5) update clamped to [0.2, 5].

use std::fmt;

/// Minimal state interface for the integrator: real-scalar axpy updates and
/// an infinity norm for error control.
pub trait OdeState: Clone {
    /// `self += a · x`.
    fn axpy(&mut self, a: f64, x: &Self);
    /// Max element magnitude.
    fn inf_norm(&self) -> f64;
}

impl OdeState for crate::CVector2 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x.scale(a);
    }
    fn inf_norm(&self) -> f64 {
        self.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl OdeState for nalgebra::DVector<crate::Complex> {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x.scale(a);
    }
    fn inf_norm(&self) -> f64 {
        self.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Integration failure, tagged with the time it occurred at.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    /// Controller drove the step below the representable resolution of t.
    StepUnderflow { t: f64 },
    /// Step budget exhausted before reaching the endpoint.
    MaxSteps { t: f64 },
    /// Solution norm crossed the blow-up threshold.
    BlowUp { t: f64, norm: f64 },
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::StepUnderflow { t } => write!(f, "step size underflow at t = {t}"),
            OdeError::MaxSteps { t } => write!(f, "step budget exhausted at t = {t}"),
            OdeError::BlowUp { t, norm } => {
                write!(f, "solution blew up near t = {t} (norm {norm:.3e})")
            }
        }
    }
}

impl std::error::Error for OdeError {}

impl From<OdeError> for crate::Error {
    fn from(e: OdeError) -> Self {
        crate::Error::Numeric(e.to_string())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Relative tolerance per step.
    pub rtol: f64,
    /// Absolute tolerance floor; zero selects purely relative control.
    pub atol: f64,
    /// Starting step magnitude; `None` uses 1e-3 of the span.
    pub h_init: Option<f64>,
    pub max_steps: usize,
    /// Error out when the state inf-norm exceeds this.
    pub blowup_norm: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 0.0,
            h_init: None,
            max_steps: 2_000_000,
            blowup_norm: 1e12,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            ..Default::default()
        }
    }
}

// Dormand-Prince 5(4) coefficients. Row i of A feeds stage i+1; B is the
// fifth-order solution, E = B - B4 the embedded error weights.
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
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction) and return
/// the state at `t1`.
pub fn integrate<S, F>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y0: S,
    opts: &OdeOptions,
) -> Result<S, OdeError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let mut y = y0;
    drive(f, t0, t1, &mut y, opts, |_, _| {})?;
    Ok(y)
}

/// Integrate and record the state at each requested time.
///
/// `samples` must be monotone in the direction of integration and lie inside
/// [t0, t1] (inclusive, to roundoff); the stepper lands on each one exactly.
pub fn integrate_sampled<S, F>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y0: S,
    samples: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<S>, OdeError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let dir = (t1 - t0).signum();
    for w in samples.windows(2) {
        assert!(
            (w[1] - w[0]) * dir > 0.0,
            "samples must be strictly monotone along the integration direction"
        );
    }
    let mut out = Vec::with_capacity(samples.len());
    let mut y = y0;
    let mut t_prev = t0;
    for &ts in samples {
        if (ts - t_prev).abs() > 0.0 {
            drive(f, t_prev, ts, &mut y, opts, |_, _| {})?;
        }
        out.push(y.clone());
        t_prev = ts;
    }
    if (t1 - t_prev).abs() > 0.0 {
        drive(f, t_prev, t1, &mut y, opts, |_, _| {})?;
    }
    Ok(out)
}

/// Core stepper: advances `y` in place from `t0` to `t1`, invoking
/// `on_accept(t, y)` after every accepted step.
pub fn drive<S, F>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y: &mut S,
    opts: &OdeOptions,
    mut on_accept: impl FnMut(f64, &S),
) -> Result<(), OdeError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(());
    }
    let dir = span.signum();
    let mut h = opts.h_init.map(|v| v.abs()).unwrap_or(span.abs() * 1e-3) * dir;
    let mut t = t0;
    let mut k: Vec<S> = Vec::with_capacity(7);

    for _ in 0..opts.max_steps {
        // Done when the remainder is at roundoff scale; an unclamped step
        // can land one ulp short of t1 and must not trigger underflow.
        let floor = t.abs().max(t1.abs()) * f64::EPSILON * 4.0 + f64::MIN_POSITIVE * 1e4;
        if (t1 - t) * dir <= floor {
            return Ok(());
        }
        // Clamp the last step and remember to land on t1 exactly.
        let mut last = false;
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
            last = true;
        }
        if h.abs() < floor {
            return Err(OdeError::StepUnderflow { t });
        }

        k.clear();
        k.push(f(t, y));
        for (i, row) in A.iter().enumerate() {
            let mut yi = y.clone();
            for (j, &a) in row.iter().enumerate().take(i + 1) {
                if a != 0.0 {
                    yi.axpy(h * a, &k[j]);
                }
            }
            k.push(f(t + C[i] * h, &yi));
        }

        let mut y_new = y.clone();
        let mut err = y.clone();
        err.axpy(-1.0, y); // zero of the right shape
        for i in 0..7 {
            if B[i] != 0.0 {
                y_new.axpy(h * B[i], &k[i]);
            }
            if E[i] != 0.0 {
                err.axpy(h * E[i], &k[i]);
            }
        }

        let scale = opts.atol + opts.rtol * y.inf_norm().max(y_new.inf_norm()).max(1e-300);
        let ratio = err.inf_norm() / scale;

        if ratio <= 1.0 {
            t = if last { t1 } else { t + h };
            *y = y_new;
            let n = y.inf_norm();
            if !n.is_finite() || n > opts.blowup_norm {
                return Err(OdeError::BlowUp { t, norm: n });
            }
            on_accept(t, y);
            let grow = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= grow;
        } else {
            h *= (0.9 * ratio.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Err(OdeError::MaxSteps { t })
}
