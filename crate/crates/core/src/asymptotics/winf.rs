//! Terminal radial momentum estimators.
//!
//! Every shell in a dispersing solution settles onto an outgoing ray with a
//! terminal radial momentum `w_inf`. Two independent estimators recover it
//! from a recorded trajectory:
//!
//! * a late-time extrapolation from the last two samples, assuming the
//!   leading `1/t` approach to the limit;
//! * an integral identity: the momentum magnitude `P = sqrt(W^2 + ell/R^2)`
//!   obeys `dP/dt = (m/R^2) (W/P)` classically, and the Lorentz factor obeys
//!   `dgamma/dt = (m/R^2) (W/gamma)` relativistically, so integrating the
//!   recorded right side and adding a quadratic-decay tail gives the limit of
//!   `P` (which equals the limit of `W`).

use crate::diagnostics::{fit_exponent, FitResult, MIN_FIT_SAMPLES};
use crate::error::{CoreError, Result};
use crate::phase::{Ensemble, Model};
use crate::runner::Trajectory;

fn late_formula(t1: f64, w1: f64, t2: f64, w2: f64) -> f64 {
    let est = w2 + (w2 - w1) * (1.0 + t2) / (t2 - t1);
    est.max(w2)
}

/// Extrapolate the terminal momentum from the last two samples, assuming the
/// limit is approached like `c / (1 + t)`. The estimate never falls below the
/// last recorded momentum (the true limit cannot, since `W` never decreases).
///
/// Requires the trajectory to span at least `min_span` and to end with
/// positive radial momentum.
pub fn winf_late(tr: &Trajectory, min_span: f64) -> Result<f64> {
    if tr.len() < 2 || tr.span() < min_span {
        return Err(CoreError::TrajectoryTooShort {
            span: tr.span(),
            min: min_span,
        });
    }
    let n = tr.len();
    let (t1, t2) = (tr.times[n - 2], tr.times[n - 1]);
    let (w1, w2) = (tr.states[n - 2].w, tr.states[n - 1].w);
    if !(w2 > 0.0) {
        return Err(CoreError::TerminalMomentumNotPositive { w: w2 });
    }
    Ok(late_formula(t1, w1, t2, w2))
}

/// The late-time extrapolation applied to every shell of two snapshots of the
/// same ensemble, matched by index.
pub fn winf_late_all(prev: &Ensemble, last: &Ensemble) -> Result<Vec<f64>> {
    if prev.len() != last.len() {
        return Err(CoreError::InvalidInput {
            what: "snapshot pair",
            why: format!(
                "snapshots hold {} and {} shells; need identical ensembles",
                prev.len(),
                last.len()
            ),
        });
    }
    let (t1, t2) = (prev.time, last.time);
    if !(t2 > t1) {
        return Err(CoreError::InvalidInput {
            what: "snapshot pair",
            why: format!("need strictly increasing times, got {t1} then {t2}"),
        });
    }
    let mut out = Vec::with_capacity(last.len());
    for (i, (p, q)) in prev.particles.iter().zip(&last.particles).enumerate() {
        let (w1, w2) = (p.state.w, q.state.w);
        if !(w2 > 0.0) {
            return Err(CoreError::InvalidInput {
                what: "snapshot pair",
                why: format!("shell {i} has nonpositive momentum {w2} at t = {t2}"),
            });
        }
        out.push(late_formula(t1, w1, t2, w2));
    }
    Ok(out)
}

fn momentum_magnitude(model: Model, w: f64, ell_over_r2: f64) -> f64 {
    match model {
        Model::Classical => (w * w + ell_over_r2).sqrt(),
        Model::Relativistic => (1.0 + w * w + ell_over_r2).sqrt(),
    }
}

/// Integral estimator for the terminal momentum, using the recorded enclosed
/// mass along the trajectory. Trapezoid rule over the samples plus a tail
/// that assumes the integrand keeps decaying like `1/t^2` past the end.
pub fn winf_integral(tr: &Trajectory, model: Model) -> Result<f64> {
    if tr.len() < 2 {
        return Err(CoreError::TrajectoryTooShort {
            span: tr.span(),
            min: 0.0,
        });
    }
    let mut integrand = Vec::with_capacity(tr.len());
    for (s, &m) in tr.states.iter().zip(&tr.m_at) {
        if s.r <= 0.0 {
            return Err(CoreError::RadiusNotPositive {
                context: "winf_integral",
                r: s.r,
            });
        }
        let p = momentum_magnitude(model, s.w, s.ell / (s.r * s.r));
        let ratio = if p > 0.0 { s.w / p } else { 0.0 };
        integrand.push(m / (s.r * s.r) * ratio);
    }
    let mut integral = 0.0;
    for i in 0..tr.len() - 1 {
        let dt = tr.times[i + 1] - tr.times[i];
        integral += 0.5 * dt * (integrand[i] + integrand[i + 1]);
    }
    let t_end = *tr.times.last().unwrap();
    if t_end > 0.0 {
        integral += integrand[tr.len() - 1] * t_end;
    }
    let s0 = &tr.states[0];
    let start = momentum_magnitude(model, s0.w, s0.ell / (s0.r * s0.r));
    match model {
        Model::Classical => Ok(start + integral),
        Model::Relativistic => {
            let gamma_inf = start + integral;
            if gamma_inf < 1.0 {
                return Err(CoreError::GammaBelowOne { gamma: gamma_inf });
            }
            Ok((gamma_inf * gamma_inf - 1.0).sqrt())
        }
    }
}

/// Outcome of a decay-rate fit that may be vacuous because the residual
/// already vanished identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateCheck {
    Fit(FitResult),
    /// Too few nonzero residuals inside the window to fit a rate.
    Degenerate { nonzero: usize },
}

/// Fit the decay of `|W(t) - w_inf|` against `1 + t` over `window` (a window
/// in `t`). Samples where the residual is exactly zero are dropped; if fewer
/// than the minimum fit count remain, the check is reported degenerate, which
/// means the momentum already converged to within the last bit.
pub fn momentum_rate_check(tr: &Trajectory, w_inf: f64, window: (f64, f64)) -> Result<RateCheck> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &t) in tr.times.iter().enumerate() {
        if t < window.0 || t > window.1 {
            continue;
        }
        let res = (tr.states[i].w - w_inf).abs();
        if res > 0.0 {
            xs.push(1.0 + t);
            ys.push(res);
        }
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Ok(RateCheck::Degenerate { nonzero: xs.len() });
    }
    let fit = fit_exponent(&xs, &ys, (1.0 + window.0, 1.0 + window.1))?;
    Ok(RateCheck::Fit(fit))
}
