//! Characteristic dynamics: right-hand sides, integrators, and the exact
//! field-free flow used as an oracle.
//!
//! The reduced characteristic system for a shell at `(R, W)` with conserved
//! squared angular momentum `ell` under enclosed mass `m`:
//!
//! classical:     dR/dt = W,           dW/dt = ell/R^3 + m/R^2
//! relativistic:  dR/dt = W/gamma,     dW/dt = (ell/R^3)/gamma + m/R^2
//!
//! with `gamma = sqrt(1 + W^2 + ell/R^2)`. Both `ell/R^3` and `m/R^2` point
//! outward: the angular-momentum barrier and the repulsive field cooperate,
//! which is what ultimately disperses every solution considered here.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::{build_field_table_ordered, FieldTable};
use crate::phase::{Ensemble, Model, RadialPoint};

/// Radius used in force evaluations when a shell gets closer to the origin
/// than this. Only reachable by (near) zero angular momentum shells; every
/// clamp is counted and reported so affected runs are visibly flagged.
pub const R_FLOOR: f64 = 1e-8;

/// Time integrator choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorKind {
    /// Classic fourth-order Runge-Kutta on each shell, with the mass table
    /// frozen over the whole step.
    Rk4FrozenField,
    /// Kick-drift-kick splitting: a half-step mass kick, the exact
    /// field-free (kinetic) map, and a second half-step kick with the mass
    /// table rebuilt at the drifted positions. Both substeps are exact flows
    /// of their part of the dynamics, so the composition is second order.
    KdkLeapfrog,
}

/// Whether shells feel the self-consistent field or stream freely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldCoupling {
    SelfConsistent,
    /// Test mode: the enclosed mass is taken to be zero everywhere, which
    /// makes the exact flow available in closed form.
    None,
}

/// Step-loop parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Diagnostics and trajectories are recorded every this many steps.
    pub record_every: usize,
    pub integrator: IntegratorKind,
    pub field: FieldCoupling,
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CoreError::InvalidInput {
                what: "step config",
                why: format!("dt must be positive and finite, got {}", self.dt),
            });
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(CoreError::InvalidInput {
                what: "step config",
                why: format!("t_end must be nonnegative and finite, got {}", self.t_end),
            });
        }
        if self.record_every == 0 {
            return Err(CoreError::InvalidInput {
                what: "step config",
                why: "record_every must be positive".into(),
            });
        }
        Ok(())
    }

    /// Number of whole steps to reach `t_end` (the grid time `k * dt` closest
    /// to it).
    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

#[inline]
fn rhs_raw(model: Model, r: f64, w: f64, ell: f64, m: f64) -> (f64, f64) {
    match model {
        Model::Classical => (w, ell / (r * r * r) + m / (r * r)),
        Model::Relativistic => {
            let gamma = (1.0 + w * w + ell / (r * r)).sqrt();
            (w / gamma, (ell / (r * r * r)) / gamma + m / (r * r))
        }
    }
}

/// Classical right-hand side `(dR/dt, dW/dt)` at a point under enclosed mass
/// `m`. Requires a positive radius.
pub fn rhs_classical(p: &RadialPoint, m: f64) -> Result<(f64, f64)> {
    if p.r <= 0.0 {
        return Err(CoreError::RadiusNotPositive {
            context: "rhs_classical",
            r: p.r,
        });
    }
    Ok(rhs_raw(Model::Classical, p.r, p.w, p.ell, m))
}

/// Relativistic right-hand side `(dR/dt, dW/dt)`. Requires a positive radius.
pub fn rhs_relativistic(p: &RadialPoint, m: f64) -> Result<(f64, f64)> {
    if p.r <= 0.0 {
        return Err(CoreError::RadiusNotPositive {
            context: "rhs_relativistic",
            r: p.r,
        });
    }
    Ok(rhs_raw(Model::Relativistic, p.r, p.w, p.ell, m))
}

#[inline]
fn kinetic_map(model: Model, r: f64, w: f64, ell: f64, t: f64) -> (f64, f64) {
    let s2 = w * w + ell / (r * r);
    let (r2, num) = match model {
        Model::Classical => (r * r + 2.0 * r * w * t + s2 * t * t, r * w + s2 * t),
        Model::Relativistic => {
            let gamma0 = (1.0 + s2).sqrt();
            let wh = w / gamma0;
            let v2 = s2 / (gamma0 * gamma0);
            (r * r + 2.0 * r * wh * t + v2 * t * t, r * w + s2 * t / gamma0)
        }
    };
    let r_new = r2.max(0.0).sqrt();
    (r_new, num / r_new)
}

/// Exact field-free flow of a reduced point over time `t`.
///
/// With no field the Cartesian motion is a straight line, which in reduced
/// coordinates gives
///
/// classical:     R^2 = r^2 + 2 r w t + (w^2 + ell/r^2) t^2,
///                W   = (r w + (w^2 + ell/r^2) t) / R
/// relativistic:  the same with the line traversed at velocity v/gamma0:
///                R^2 = r^2 + 2 r (w/gamma0) t + (|v|^2/gamma0^2) t^2,
///                W   = (r w + (w^2 + ell/r^2) t / gamma0) / R
///
/// `ell` is conserved. Undefined exactly at an origin crossing (only possible
/// for `ell = 0` inbound states), where W has a jump.
pub fn free_stream_exact(p: &RadialPoint, t: f64, model: Model) -> Result<RadialPoint> {
    if p.r <= 0.0 {
        return Err(CoreError::RadiusNotPositive {
            context: "free_stream_exact",
            r: p.r,
        });
    }
    let (r_new, w_new) = kinetic_map(model, p.r, p.w, p.ell, t);
    Ok(RadialPoint {
        r: r_new,
        w: w_new,
        ell: p.ell,
    })
}

/// Limit of the radial momentum under the field-free flow: the momentum
/// magnitude for shells with angular momentum, the (signed) initial radial
/// momentum otherwise. Identical for both models.
pub fn free_stream_terminal_momentum(p: &RadialPoint) -> Result<f64> {
    if p.ell > 0.0 {
        Ok(p.speed_squared()?.sqrt())
    } else {
        if p.r <= 0.0 {
            return Err(CoreError::RadiusNotPositive {
                context: "free_stream_terminal_momentum",
                r: p.r,
            });
        }
        Ok(p.w)
    }
}

/// Outcome of one (or a run of) step calls.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepOutcome {
    /// Force evaluations that had to clamp the radius at `R_FLOOR`.
    pub clamp_events: u64,
}

/// Reusable buffers for the step loop: per-shell search hints into the mass
/// table, the persistent radial ordering, and a table already valid for the
/// current positions (if the previous operation left one behind).
#[derive(Debug, Default)]
pub struct StepScratch {
    hints: Vec<u32>,
    ghost_hints: Vec<u32>,
    order: Vec<u32>,
    pub pending_table: Option<FieldTable>,
}

impl StepScratch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build (or reuse) a mass table for the ensemble's current positions.
    pub fn current_table(&mut self, e: &Ensemble) -> Result<FieldTable> {
        match self.pending_table.take() {
            Some(t) => Ok(t),
            None => build_field_table_ordered(e, &mut self.order),
        }
    }
}

#[inline]
fn clamped(r: f64, clamps: &mut u64) -> f64 {
    if r < R_FLOOR {
        *clamps += 1;
        R_FLOOR
    } else {
        r
    }
}

#[inline]
fn force_eval(
    model: Model,
    table: Option<&FieldTable>,
    r: f64,
    w: f64,
    ell: f64,
    hint: &mut u32,
    clamps: &mut u64,
) -> (f64, f64) {
    let rc = clamped(r, clamps);
    let m = match table {
        Some(t) => t.enclosed_mass_hinted(rc, hint),
        None => 0.0,
    };
    rhs_raw(model, rc, w, ell, m)
}

#[inline]
fn rk4_particle(
    state: &mut RadialPoint,
    model: Model,
    table: Option<&FieldTable>,
    dt: f64,
    hint: &mut u32,
) -> u64 {
    let mut clamps = 0u64;
    let ell = state.ell;
    let (r0, w0) = (state.r, state.w);
    let (kr1, kw1) = force_eval(model, table, r0, w0, ell, hint, &mut clamps);
    let (kr2, kw2) = force_eval(
        model,
        table,
        r0 + 0.5 * dt * kr1,
        w0 + 0.5 * dt * kw1,
        ell,
        hint,
        &mut clamps,
    );
    let (kr3, kw3) = force_eval(
        model,
        table,
        r0 + 0.5 * dt * kr2,
        w0 + 0.5 * dt * kw2,
        ell,
        hint,
        &mut clamps,
    );
    let (kr4, kw4) = force_eval(
        model,
        table,
        r0 + dt * kr3,
        w0 + dt * kw3,
        ell,
        hint,
        &mut clamps,
    );
    state.r = r0 + dt / 6.0 * (kr1 + 2.0 * kr2 + 2.0 * kr3 + kr4);
    state.w = w0 + dt / 6.0 * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4);
    clamps
}

/// Half-step momentum update from the mass term alone; the centrifugal term
/// belongs to the kinetic map handled by the drift.
#[inline]
fn kick_particle(
    state: &mut RadialPoint,
    table: Option<&FieldTable>,
    half_dt: f64,
    hint: &mut u32,
) -> u64 {
    let mut clamps = 0u64;
    if let Some(t) = table {
        let rc = clamped(state.r, &mut clamps);
        let m = t.enclosed_mass_hinted(rc, hint);
        state.w += half_dt * m / (rc * rc);
    }
    clamps
}

/// Full-step exact kinetic flow: straight-line motion of the underlying
/// Cartesian state. Conserves the momentum magnitude (and so the Lorentz
/// factor), which is what makes the kick-drift-kick composition a true
/// second-order splitting in both models.
#[inline]
fn drift_particle(state: &mut RadialPoint, model: Model, dt: f64) -> u64 {
    let (r_new, w_new) = kinetic_map(model, state.r, state.w, state.ell, dt);
    state.r = r_new;
    state.w = w_new;
    0
}

/// Minimum ensemble size before the per-shell push is farmed out to rayon.
/// The push writes each shell's result into its own slot and performs no
/// cross-shell reduction, so results are bitwise identical at any thread
/// count.
const PARALLEL_THRESHOLD: usize = 2048;

fn par_push<F>(states: &mut [RadialPoint], hints: &mut [u32], push: F) -> u64
where
    F: Fn(&mut RadialPoint, &mut u32) -> u64 + Sync,
{
    if states.len() >= PARALLEL_THRESHOLD && rayon::current_num_threads() > 1 {
        use rayon::prelude::*;
        states
            .par_iter_mut()
            .zip(hints.par_iter_mut())
            .map(|(s, h)| push(s, h))
            .sum()
    } else {
        states
            .iter_mut()
            .zip(hints.iter_mut())
            .map(|(s, h)| push(s, h))
            .sum()
    }
}

/// Advance the ensemble (and any ghost probes) by one step.
///
/// Ghosts are weightless companion states integrated under the identical
/// field; they never contribute mass. A shell or ghost whose radius leaves
/// `(0, inf)` aborts the step; aborted ghost indices are reported offset by
/// the ensemble size.
pub fn step_with_scratch(
    e: &mut Ensemble,
    cfg: &StepConfig,
    scratch: &mut StepScratch,
    ghosts: &mut [RadialPoint],
) -> Result<StepOutcome> {
    let n = e.len();
    if n == 0 {
        return Err(CoreError::EmptyEnsemble);
    }
    if scratch.hints.len() != n {
        scratch.hints = vec![0; n];
    }
    if scratch.ghost_hints.len() != ghosts.len() {
        scratch.ghost_hints = vec![0; ghosts.len()];
    }
    let model = e.model;
    let dt = cfg.dt;
    let coupled = cfg.field == FieldCoupling::SelfConsistent;
    let table = if coupled {
        Some(scratch.current_table(e)?)
    } else {
        None
    };

    let mut clamps = 0u64;
    match cfg.integrator {
        IntegratorKind::Rk4FrozenField => {
            let t_ref = table.as_ref();
            let push = |s: &mut RadialPoint, h: &mut u32| rk4_particle(s, model, t_ref, dt, h);
            clamps += par_push_particles(&mut e.particles, &mut scratch.hints, &push);
            clamps += par_push(ghosts, &mut scratch.ghost_hints, push);
            scratch.pending_table = None;
        }
        IntegratorKind::KdkLeapfrog => {
            let half = 0.5 * dt;
            let t_ref = table.as_ref();
            let kick1 = |s: &mut RadialPoint, h: &mut u32| kick_particle(s, t_ref, half, h);
            clamps += par_push_particles(&mut e.particles, &mut scratch.hints, &kick1);
            clamps += par_push(ghosts, &mut scratch.ghost_hints, kick1);

            let drift = |s: &mut RadialPoint, _h: &mut u32| drift_particle(s, model, dt);
            clamps += par_push_particles(&mut e.particles, &mut scratch.hints, &drift);
            clamps += par_push(ghosts, &mut scratch.ghost_hints, drift);

            let mid_table = if coupled {
                Some(build_field_table_ordered(e, &mut scratch.order)?)
            } else {
                None
            };
            let t_mid = mid_table.as_ref();
            let kick2 = |s: &mut RadialPoint, h: &mut u32| kick_particle(s, t_mid, half, h);
            clamps += par_push_particles(&mut e.particles, &mut scratch.hints, &kick2);
            clamps += par_push(ghosts, &mut scratch.ghost_hints, kick2);
            // The second kick leaves radii untouched, so the mid-step table is
            // still valid for the post-step positions.
            scratch.pending_table = mid_table;
        }
    }

    let t_next = e.time + dt;
    for (index, p) in e.particles.iter().enumerate() {
        let r = p.state.r;
        if !(r > 0.0 && r.is_finite() && p.state.w.is_finite()) {
            return Err(CoreError::StepAborted {
                t: t_next,
                index,
                r,
            });
        }
    }
    for (slot, g) in ghosts.iter().enumerate() {
        if !(g.r > 0.0 && g.r.is_finite() && g.w.is_finite()) {
            return Err(CoreError::StepAborted {
                t: t_next,
                index: n + slot,
                r: g.r,
            });
        }
    }
    e.time = t_next;
    Ok(StepOutcome {
        clamp_events: clamps,
    })
}

fn par_push_particles<F>(
    particles: &mut [crate::phase::Particle],
    hints: &mut [u32],
    push: &F,
) -> u64
where
    F: Fn(&mut RadialPoint, &mut u32) -> u64 + Sync,
{
    if particles.len() >= PARALLEL_THRESHOLD && rayon::current_num_threads() > 1 {
        use rayon::prelude::*;
        particles
            .par_iter_mut()
            .zip(hints.par_iter_mut())
            .map(|(p, h)| push(&mut p.state, h))
            .sum()
    } else {
        particles
            .iter_mut()
            .zip(hints.iter_mut())
            .map(|(p, h)| push(&mut p.state, h))
            .sum()
    }
}

/// Advance the ensemble by one step with fresh scratch buffers.
pub fn step(e: &mut Ensemble, cfg: &StepConfig) -> Result<StepOutcome> {
    cfg.validate()?;
    let mut scratch = StepScratch::new();
    step_with_scratch(e, cfg, &mut scratch, &mut [])
}
