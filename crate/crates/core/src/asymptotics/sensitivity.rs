//! Sensitivity of the flow to its initial data, measured with ghost pairs:
//! two weightless probes launched from the same state except for a small
//! radial momentum offset, integrated under the identical field.
//!
//! For a dispersing solution the separation between the probes stays
//! proportional to the offset (no chaotic amplification), and the terminal
//! momentum responds to the offset with a derivative of order one.

use crate::asymptotics::winf::winf_late;
use crate::error::{CoreError, Result};
use crate::phase::RadialPoint;
use crate::runner::GhostPair;

/// Raw momentum separation beyond which a pair no longer measures a
/// derivative and is excluded from sensitivity fits.
pub const SEPARATION_LIMIT: f64 = 0.1;

/// Normalized separation history of one ghost pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySeries {
    pub times: Vec<f64>,
    /// `|R_bumped - R_base| / delta_w` at each sample.
    pub dr: Vec<f64>,
    /// `|W_bumped - W_base| / delta_w` at each sample.
    pub dw: Vec<f64>,
    /// True when the raw momentum separation ever exceeded
    /// [`SEPARATION_LIMIT`].
    pub separated: bool,
}

impl SensitivitySeries {
    /// Largest normalized separation (radius or momentum) among samples in
    /// `[lo, hi]`.
    pub fn max_in_window(&self, lo: f64, hi: f64) -> Option<f64> {
        self.times
            .iter()
            .zip(self.dr.iter().zip(&self.dw))
            .filter(|(&t, _)| t >= lo && t <= hi)
            .map(|(_, (&a, &b))| a.max(b))
            .fold(None, |acc, v| Some(acc.map_or(v, |m: f64| m.max(v))))
    }
}

/// Separation history of a recorded ghost pair.
pub fn pair_sensitivity(pair: &GhostPair) -> Result<SensitivitySeries> {
    if pair.base.len() != pair.bumped.len() {
        return Err(CoreError::InvalidInput {
            what: "ghost pair",
            why: format!(
                "members recorded {} and {} samples",
                pair.base.len(),
                pair.bumped.len()
            ),
        });
    }
    if pair.delta_w == 0.0 {
        return Err(CoreError::InvalidInput {
            what: "ghost pair",
            why: "delta_w is zero; separations cannot be normalized".into(),
        });
    }
    let scale = pair.delta_w.abs();
    let mut dr = Vec::with_capacity(pair.base.len());
    let mut dw = Vec::with_capacity(pair.base.len());
    let mut separated = false;
    for (a, b) in pair.base.states.iter().zip(&pair.bumped.states) {
        let raw_dw = (b.w - a.w).abs();
        separated |= raw_dw > SEPARATION_LIMIT;
        dr.push((b.r - a.r).abs() / scale);
        dw.push(raw_dw / scale);
    }
    Ok(SensitivitySeries {
        times: pair.base.times.clone(),
        dr,
        dw,
        separated,
    })
}

/// Finite-difference estimate of `d(terminal momentum) / d(initial momentum)`
/// from the late-time extrapolation on both members of a pair.
pub fn pair_dwinf(pair: &GhostPair, min_span: f64) -> Result<f64> {
    if pair.delta_w == 0.0 {
        return Err(CoreError::InvalidInput {
            what: "ghost pair",
            why: "delta_w is zero; no derivative is defined".into(),
        });
    }
    let base = winf_late(&pair.base, min_span)?;
    let bumped = winf_late(&pair.bumped, min_span)?;
    Ok((bumped - base) / pair.delta_w)
}

/// Closed-form radius sensitivity of the classical field-free flow:
/// `dR/dw = (r t + w t^2) / R(t)`.
pub fn free_stream_dr_dw(p: &RadialPoint, t: f64) -> Result<f64> {
    if p.r <= 0.0 {
        return Err(CoreError::RadiusNotPositive {
            context: "free_stream_dr_dw",
            r: p.r,
        });
    }
    let s2 = p.w * p.w + p.ell / (p.r * p.r);
    let r2 = p.r * p.r + 2.0 * p.r * p.w * t + s2 * t * t;
    if r2 <= 0.0 {
        return Err(CoreError::RadiusNotPositive {
            context: "free_stream_dr_dw",
            r: 0.0,
        });
    }
    Ok((p.r * t + p.w * t * t) / r2.sqrt())
}

/// Closed-form terminal momentum sensitivity of the field-free flow:
/// `d w_inf / d w = w / sqrt(w^2 + ell/r^2)` for shells with angular
/// momentum, 1 otherwise. Identical in both models.
pub fn dwinf_dw_free_stream(p: &RadialPoint) -> Result<f64> {
    if p.r <= 0.0 {
        return Err(CoreError::RadiusNotPositive {
            context: "dwinf_dw_free_stream",
            r: p.r,
        });
    }
    if p.ell > 0.0 {
        let s2 = p.w * p.w + p.ell / (p.r * p.r);
        Ok(p.w / s2.sqrt())
    } else {
        Ok(1.0)
    }
}
