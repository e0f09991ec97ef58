//! A-priori bounds on individual characteristics, checked sample by sample
//! against recorded trajectories.
//!
//! Every bound follows from comparison with the field-free flow: the enclosed
//! mass only ever pushes outward, so the true radius dominates the straight
//! line radius. In particular, with initial datum `(r, w, ell)`:
//!
//! * `R(t)^2 >= (ell / r^2) t^2` classically, with the right side divided by
//!   `1 + w^2 + ell/r^2` relativistically;
//! * an inbound shell (`w < 0`, `ell > 0`) turns around no later than
//!   `-w r^3 / ell` (times the initial Lorentz factor relativistically);
//! * the radius never drops below `D r` with `D = sqrt(ell / (ell + r^2 w^2))`
//!   for inbound data, nor below `r` for outbound data;
//! * the radial momentum never decreases;
//! * relativistically, the radius moves slower than light.

use crate::phase::Model;
use crate::runner::Trajectory;

/// Relative slack applied to every bound before a sample counts as a
/// violation, absorbing roundoff in the recorded states.
pub const LOWER_BOUND_SLACK: f64 = 1e-6;

/// Absolute-plus-relative slack for the monotonicity check, which compares
/// successive samples rather than a closed form.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Outcome of one bound over one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    /// Samples the bound applied to (0 when the bound is vacuous for this
    /// trajectory, for instance the turning bound on outbound data).
    pub samples: usize,
    pub violations: usize,
    /// Smallest signed relative margin seen; nonnegative means every sample
    /// cleared the bound even without slack.
    pub worst_margin: f64,
}

impl BoundCheck {
    fn vacuous(name: &'static str) -> Self {
        Self {
            name,
            samples: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn relative_margin(value: f64, bound: f64) -> f64 {
    (value - bound) / bound.abs().max(1e-300)
}

/// Check `R(t)^2 >= (ell / r^2) t^2` (classical) or the same divided by the
/// initial `gamma^2` (relativistic), with `t` measured from the trajectory
/// start.
pub fn radius_lower_bound(tr: &Trajectory, model: Model) -> BoundCheck {
    let name = "radius_lower_bound";
    let p = tr.initial;
    if p.ell <= 0.0 || p.r <= 0.0 {
        return BoundCheck::vacuous(name);
    }
    let mut coeff = p.ell / (p.r * p.r);
    if model == Model::Relativistic {
        coeff /= 1.0 + p.w * p.w + p.ell / (p.r * p.r);
    }
    let mut check = BoundCheck {
        name,
        samples: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for (i, &t) in tr.times.iter().enumerate() {
        let s = t - tr.start_time;
        let bound = coeff * s * s;
        let r2 = tr.states[i].r * tr.states[i].r;
        check.samples += 1;
        if bound > 0.0 {
            if r2 < bound * (1.0 - LOWER_BOUND_SLACK) {
                check.violations += 1;
            }
            check.worst_margin = check.worst_margin.min(relative_margin(r2, bound));
        }
    }
    check
}

/// Check that an inbound shell turns around (first sample with `W >= 0`,
/// located by linear interpolation) no later than `-w r^3 / ell`, times the
/// initial Lorentz factor relativistically. Vacuous for outbound data, for
/// `ell = 0`, and when the trajectory ends before the bound with the shell
/// still inbound.
pub fn turning_time_bound(tr: &Trajectory, model: Model) -> BoundCheck {
    let name = "turning_time_bound";
    let p = tr.initial;
    if p.w >= 0.0 || p.ell <= 0.0 || p.r <= 0.0 || tr.len() < 2 {
        return BoundCheck::vacuous(name);
    }
    let mut bound = -p.w * p.r * p.r * p.r / p.ell;
    if model == Model::Relativistic {
        bound *= (1.0 + p.w * p.w + p.ell / (p.r * p.r)).sqrt();
    }
    let turn = tr.states.windows(2).enumerate().find_map(|(i, pair)| {
        let (w0, w1) = (pair[0].w, pair[1].w);
        if w0 < 0.0 && w1 >= 0.0 {
            let (t0, t1) = (tr.times[i], tr.times[i + 1]);
            Some(t0 + (t1 - t0) * (-w0) / (w1 - w0) - tr.start_time)
        } else {
            None
        }
    });
    let turn = match (turn, tr.states.first()) {
        (Some(t), _) => t,
        (None, Some(s)) if s.w >= 0.0 => 0.0,
        (None, _) => {
            // Never turned inside the recorded window: a violation only if
            // the window extends past the bound.
            return if tr.span() > bound * (1.0 + LOWER_BOUND_SLACK) {
                BoundCheck {
                    name,
                    samples: 1,
                    violations: 1,
                    worst_margin: (bound - tr.span()) / bound.abs().max(1e-300),
                }
            } else {
                BoundCheck::vacuous(name)
            };
        }
    };
    BoundCheck {
        name,
        samples: 1,
        violations: usize::from(turn > bound * (1.0 + LOWER_BOUND_SLACK)),
        // Fraction of the allowed time left unused when the shell turned.
        worst_margin: (bound - turn) / bound.abs().max(1e-300),
    }
}

/// Check `R(t) >= r` for outbound data and `R(t) >= D r` with
/// `D = sqrt(ell / (ell + r^2 w^2))` for inbound data. Identical in both
/// models (the relativistic flow traverses the same comparison line).
pub fn min_radius_bound(tr: &Trajectory) -> BoundCheck {
    let name = "min_radius_bound";
    let p = tr.initial;
    if p.r <= 0.0 || (p.w < 0.0 && p.ell <= 0.0) {
        return BoundCheck::vacuous(name);
    }
    let bound = if p.w >= 0.0 {
        p.r
    } else {
        p.r * (p.ell / (p.ell + p.r * p.r * p.w * p.w)).sqrt()
    };
    let mut check = BoundCheck {
        name,
        samples: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for s in &tr.states {
        check.samples += 1;
        if s.r < bound * (1.0 - LOWER_BOUND_SLACK) {
            check.violations += 1;
        }
        check.worst_margin = check.worst_margin.min(relative_margin(s.r, bound));
    }
    check
}

/// Check that the radial momentum never decreases between successive samples
/// (both force terms are nonnegative in both models).
pub fn w_monotone(tr: &Trajectory) -> BoundCheck {
    let name = "w_monotone";
    let mut check = BoundCheck {
        name,
        samples: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for pair in tr.states.windows(2) {
        let (w0, w1) = (pair[0].w, pair[1].w);
        check.samples += 1;
        let slack = MONOTONE_SLACK * w0.abs().max(1.0);
        if w1 < w0 - slack {
            check.violations += 1;
        }
        check.worst_margin = check.worst_margin.min(w1 - w0);
    }
    check
}

/// Check `|R(t1) - R(t0)| <= t1 - t0` between successive samples of a
/// relativistic trajectory.
pub fn subluminal_increments(tr: &Trajectory) -> BoundCheck {
    let name = "subluminal_increments";
    let mut check = BoundCheck {
        name,
        samples: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for i in 0..tr.len().saturating_sub(1) {
        let dt = tr.times[i + 1] - tr.times[i];
        if dt <= 0.0 {
            continue;
        }
        let dr = (tr.states[i + 1].r - tr.states[i].r).abs();
        check.samples += 1;
        if dr > dt * (1.0 + LOWER_BOUND_SLACK) {
            check.violations += 1;
        }
        check.worst_margin = check.worst_margin.min(relative_margin(dt, dr));
    }
    check
}

/// All applicable bounds for one trajectory.
pub fn check_trajectory(tr: &Trajectory, model: Model) -> Vec<BoundCheck> {
    let mut checks = vec![
        radius_lower_bound(tr, model),
        turning_time_bound(tr, model),
        min_radius_bound(tr),
        w_monotone(tr),
    ];
    if model == Model::Relativistic {
        checks.push(subluminal_increments(tr));
    }
    checks
}

/// Aggregated outcome over a set of trajectories, one entry per bound.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub checks: Vec<BoundCheck>,
}

impl InequalityReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn total_samples(&self) -> usize {
        self.checks.iter().map(|c| c.samples).sum()
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0
    }
}

/// Run every applicable bound over every trajectory and merge the tallies
/// by bound name.
pub fn check_all(trajectories: &[Trajectory], model: Model) -> InequalityReport {
    let mut merged: Vec<BoundCheck> = Vec::new();
    for tr in trajectories {
        for c in check_trajectory(tr, model) {
            match merged.iter_mut().find(|m| m.name == c.name) {
                Some(m) => {
                    m.samples += c.samples;
                    m.violations += c.violations;
                    m.worst_margin = m.worst_margin.min(c.worst_margin);
                }
                None => merged.push(c),
            }
        }
    }
    InequalityReport { checks: merged }
}
