//! The run loop: advances an ensemble to a final time while recording
//! diagnostics, tracked-shell trajectories, ghost probe pairs, and full
//! snapshots on a fixed schedule.

use std::collections::BTreeSet;

use crate::diagnostics::{measure, DiagnosticRecord, DiagnosticSpec};
use crate::dynamics::{step_with_scratch, FieldCoupling, StepConfig, StepScratch};
use crate::error::{CoreError, Result};
use crate::phase::{Ensemble, RadialPoint};

/// Sampled history of one shell (or ghost probe).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Index of the shell in the ensemble this history belongs to. For a
    /// ghost probe, the index of the tracked shell it shadows.
    pub particle_index: usize,
    /// State at `start_time`.
    pub initial: RadialPoint,
    pub start_time: f64,
    pub times: Vec<f64>,
    pub states: Vec<RadialPoint>,
    /// Enclosed mass at the shell's radius at each sample (0 when the field
    /// is switched off).
    pub m_at: Vec<f64>,
}

impl Trajectory {
    pub fn new(particle_index: usize, initial: RadialPoint, start_time: f64) -> Self {
        Self {
            particle_index,
            initial,
            start_time,
            times: Vec::new(),
            states: Vec::new(),
            m_at: Vec::new(),
        }
    }

    pub fn push_sample(&mut self, t: f64, state: RadialPoint, m: f64) {
        self.times.push(t);
        self.states.push(state);
        self.m_at.push(m);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time covered by the samples.
    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Copy that keeps only the samples up to `t_max` (with a relative slack
    /// so a sample exactly at `t_max` survives rounding).
    pub fn truncated(&self, t_max: f64) -> Trajectory {
        let cut = t_max + 1e-9 * t_max.abs().max(1.0);
        let keep = self.times.iter().take_while(|&&t| t <= cut).count();
        Trajectory {
            particle_index: self.particle_index,
            initial: self.initial,
            start_time: self.start_time,
            times: self.times[..keep].to_vec(),
            states: self.states[..keep].to_vec(),
            m_at: self.m_at[..keep].to_vec(),
        }
    }

    /// Copy that keeps only the samples from `t_min` on, re-anchored so the
    /// first kept sample becomes the initial datum. Useful for estimators
    /// that are more accurate when launched from a late, well-resolved state.
    pub fn suffix(&self, t_min: f64) -> Trajectory {
        let cut = t_min - 1e-9 * t_min.abs().max(1.0);
        let skip = self.times.iter().take_while(|&&t| t < cut).count();
        let initial = self.states.get(skip).copied().unwrap_or(self.initial);
        let start_time = self.times.get(skip).copied().unwrap_or(self.start_time);
        Trajectory {
            particle_index: self.particle_index,
            initial,
            start_time,
            times: self.times[skip..].to_vec(),
            states: self.states[skip..].to_vec(),
            m_at: self.m_at[skip..].to_vec(),
        }
    }
}

/// Ghost probes: weightless copies of the tracked shells launched mid-run,
/// one exact copy and one with the radial momentum bumped by `delta_w`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GhostSpec {
    /// Launch time; snapped to the nearest step boundary.
    pub tau: f64,
    /// Radial momentum offset of the bumped member.
    pub delta_w: f64,
}

/// A launched ghost pair and its recorded history.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostPair {
    pub base: Trajectory,
    pub bumped: Trajectory,
    pub delta_w: f64,
}

/// What to collect during a run, beyond the per-record diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// How many shells to track; 0 disables tracking.
    pub tracked: usize,
    /// Ghost probe launch; requires tracked shells.
    pub ghosts: Option<GhostSpec>,
    /// Full-ensemble snapshot times; each is snapped to a step boundary.
    pub snapshot_times: Vec<f64>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Final ensemble state.
    pub ensemble: Ensemble,
    /// Record times, aligned with `records`.
    pub times: Vec<f64>,
    pub records: Vec<DiagnosticRecord>,
    pub trajectories: Vec<Trajectory>,
    pub ghosts: Vec<GhostPair>,
    pub snapshots: Vec<(f64, Ensemble)>,
    /// Total clamped force evaluations over the whole run.
    pub clamp_total: u64,
}

/// Pick a deterministic, well-spread set of shells to track: the coordinate
/// extremes (smallest and largest radius, radial momentum, angular momentum,
/// and momentum magnitude), the shells nearest the support-box corners and
/// center, topped up with an evenly spaced fill. Ties go to the lower index.
pub fn select_tracked(e: &Ensemble, count: usize) -> Vec<usize> {
    let n = e.len();
    if count == 0 || n == 0 {
        return Vec::new();
    }
    if count >= n {
        return (0..n).collect();
    }

    let coord = |i: usize| {
        let s = &e.particles[i].state;
        let s2 = if s.r > 0.0 {
            s.w * s.w + s.ell / (s.r * s.r)
        } else {
            f64::INFINITY
        };
        (s.r, s.w, s.ell, s2)
    };
    let mut lo = coord(0);
    let mut hi = lo;
    let mut arg_lo = [0usize; 4];
    let mut arg_hi = [0usize; 4];
    for i in 1..n {
        let c = coord(i);
        let cs = [c.0, c.1, c.2, c.3];
        let los = [lo.0, lo.1, lo.2, lo.3];
        let his = [hi.0, hi.1, hi.2, hi.3];
        for a in 0..4 {
            if cs[a] < los[a] {
                arg_lo[a] = i;
            }
            if cs[a] > his[a] {
                arg_hi[a] = i;
            }
        }
        lo = (
            lo.0.min(c.0),
            lo.1.min(c.1),
            lo.2.min(c.2),
            lo.3.min(c.3),
        );
        hi = (
            hi.0.max(c.0),
            hi.1.max(c.1),
            hi.2.max(c.2),
            hi.3.max(c.3),
        );
    }

    let spans = [hi.0 - lo.0, hi.1 - lo.1, hi.2 - lo.2];
    let normalized_dist = |i: usize, target: [f64; 3]| {
        let s = &e.particles[i].state;
        let xs = [s.r, s.w, s.ell];
        let mut d = 0.0;
        for a in 0..3 {
            if spans[a] > 0.0 {
                let u = (xs[a] - target[a]) / spans[a];
                d += u * u;
            }
        }
        d
    };
    let nearest = |target: [f64; 3]| {
        let mut best = 0usize;
        let mut best_d = normalized_dist(0, target);
        for i in 1..n {
            let d = normalized_dist(i, target);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    };

    let mut picks: Vec<usize> = Vec::with_capacity(count + 24);
    picks.extend_from_slice(&arg_lo);
    picks.extend_from_slice(&arg_hi);
    for &cr in &[lo.0, hi.0] {
        for &cw in &[lo.1, hi.1] {
            for &cl in &[lo.2, hi.2] {
                picks.push(nearest([cr, cw, cl]));
            }
        }
    }
    picks.push(nearest([
        0.5 * (lo.0 + hi.0),
        0.5 * (lo.1 + hi.1),
        0.5 * (lo.2 + hi.2),
    ]));
    for j in 0..count {
        picks.push(j * (n - 1) / (count - 1).max(1));
    }

    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(count);
    for i in picks {
        if !seen[i] {
            seen[i] = true;
            out.push(i);
            if out.len() == count {
                return out;
            }
        }
    }
    for i in 0..n {
        if !seen[i] {
            seen[i] = true;
            out.push(i);
            if out.len() == count {
                break;
            }
        }
    }
    out
}

/// Snapshot schedule for a run to `t_end`: the start, a 1-2-5 geometric
/// ladder, twelve log-spaced times across the last three quarters, the
/// three-quarter point, and the final two record times. All entries are
/// snapped to step boundaries and deduplicated.
pub fn snapshot_schedule(t_end: f64, dt: f64, record_every: usize) -> Vec<f64> {
    let n = (t_end / dt).round() as u64;
    let snap = |t: f64| ((t / dt).round() as u64).min(n);
    let mut ks: BTreeSet<u64> = BTreeSet::new();
    ks.insert(0);
    let mut decade = 1.0f64;
    while decade <= t_end {
        for mantissa in [1.0, 2.0, 5.0] {
            let t = mantissa * decade;
            if t <= t_end {
                ks.insert(snap(t));
            }
        }
        decade *= 10.0;
    }
    if n > 0 {
        let lo = t_end / 4.0;
        let ratio = (t_end / lo).ln();
        for i in 0..12 {
            let t = lo * (ratio * i as f64 / 11.0).exp();
            ks.insert(snap(t));
        }
        ks.insert(snap(0.75 * t_end));
        let re = record_every as u64;
        ks.insert(n);
        let prev = if n % re == 0 {
            n.saturating_sub(re)
        } else {
            n - n % re
        };
        ks.insert(prev);
    }
    ks.into_iter().map(|k| k as f64 * dt).collect()
}

/// Advance `e0` from time 0 to `cfg.t_end`, recording diagnostics every
/// `cfg.record_every` steps (plus the final step), trajectories for the
/// tracked shells on the same cadence, snapshots at the requested times, and
/// ghost pairs from their launch time onward.
///
/// Record times are recomputed as exact multiples of `dt`, so reruns with the
/// same configuration reproduce every time stamp bit for bit.
pub fn run(
    e0: Ensemble,
    cfg: &StepConfig,
    spec: &DiagnosticSpec,
    opts: &RunOptions,
) -> Result<RunOutput> {
    cfg.validate()?;
    spec.validate()?;
    if e0.is_empty() {
        return Err(CoreError::EmptyEnsemble);
    }
    if let Some(g) = &opts.ghosts {
        if !(g.tau >= 0.0 && g.tau <= cfg.t_end) {
            return Err(CoreError::InvalidInput {
                what: "ghost launch",
                why: format!("tau = {} is outside [0, {}]", g.tau, cfg.t_end),
            });
        }
        if g.delta_w == 0.0 || !g.delta_w.is_finite() {
            return Err(CoreError::InvalidInput {
                what: "ghost launch",
                why: "delta_w must be finite and nonzero".into(),
            });
        }
    }

    let mut e = e0;
    e.time = 0.0;
    let n_steps = cfg.steps();
    let dt = cfg.dt;
    let every = cfg.record_every as u64;
    let coupled = cfg.field == FieldCoupling::SelfConsistent;

    let track_idx = select_tracked(&e, opts.tracked);
    let mut trajectories: Vec<Trajectory> = track_idx
        .iter()
        .map(|&i| Trajectory::new(i, e.particles[i].state, 0.0))
        .collect();

    let snapshot_ks: BTreeSet<u64> = opts
        .snapshot_times
        .iter()
        .map(|&t| ((t / dt).round().max(0.0) as u64).min(n_steps))
        .collect();
    let ghost_k = opts
        .ghosts
        .as_ref()
        .map(|g| ((g.tau / dt).round() as u64).min(n_steps));

    let mut ghost_states: Vec<RadialPoint> = Vec::new();
    let mut ghosts: Vec<GhostPair> = Vec::new();
    let mut scratch = StepScratch::new();
    let mut clamp_total = 0u64;
    let mut times = Vec::new();
    let mut records = Vec::new();
    let mut snapshots = Vec::new();

    for k in 0..=n_steps {
        let t = k as f64 * dt;
        e.time = t;

        if ghost_k == Some(k) && ghosts.is_empty() {
            let delta_w = opts.ghosts.as_ref().map(|g| g.delta_w).unwrap_or(0.0);
            for &i in &track_idx {
                let base = e.particles[i].state;
                let bumped = RadialPoint {
                    w: base.w + delta_w,
                    ..base
                };
                ghost_states.push(base);
                ghost_states.push(bumped);
                ghosts.push(GhostPair {
                    base: Trajectory::new(i, base, t),
                    bumped: Trajectory::new(i, bumped, t),
                    delta_w,
                });
            }
        }

        let is_record = k % every == 0 || k == n_steps;
        let is_snapshot = snapshot_ks.contains(&k);
        if is_record || is_snapshot {
            let table = if coupled {
                Some(scratch.current_table(&e)?)
            } else {
                None
            };
            if is_record {
                times.push(t);
                records.push(measure(&e, table.as_ref(), spec, clamp_total)?);
                let m_of = |s: &RadialPoint| table.as_ref().map_or(0.0, |tb| tb.enclosed_mass(s.r));
                for (slot, &i) in track_idx.iter().enumerate() {
                    let s = e.particles[i].state;
                    trajectories[slot].push_sample(t, s, m_of(&s));
                }
                for (pair, chunk) in ghosts.iter_mut().zip(ghost_states.chunks(2)) {
                    pair.base.push_sample(t, chunk[0], m_of(&chunk[0]));
                    pair.bumped.push_sample(t, chunk[1], m_of(&chunk[1]));
                }
            }
            if is_snapshot {
                snapshots.push((t, e.clone()));
            }
            // Hand the table back so the upcoming step reuses it instead of
            // sorting again.
            scratch.pending_table = table;
        }

        if k < n_steps {
            let out = step_with_scratch(&mut e, cfg, &mut scratch, &mut ghost_states)?;
            clamp_total += out.clamp_events;
        }
    }

    Ok(RunOutput {
        ensemble: e,
        times,
        records,
        trajectories,
        ghosts,
        snapshots,
        clamp_total,
    })
}
