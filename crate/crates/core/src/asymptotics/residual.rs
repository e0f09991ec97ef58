//! Deviation of the radius from its asymptotic straight ray.
//!
//! A dispersing shell approaches `R(t) ~ v_inf t` with a correction growing
//! at most logarithmically, driven by the slowly decaying enclosed-mass
//! force. The series below records the signed deviation `R(t) - v_inf t` and
//! fits its growth against `ln(1 + t)`.

use crate::error::{CoreError, Result};
use crate::phase::Model;
use crate::runner::Trajectory;

/// Signed deviation of the radius from the terminal ray, with a linear fit
/// against `ln(1 + t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub times: Vec<f64>,
    /// `R(t) - v_inf t` at each sample.
    pub residuals: Vec<f64>,
    /// Slope of the least-squares line `residual = offset + coeff ln(1+t)`.
    pub log_coefficient: f64,
    pub offset: f64,
}

impl ResidualSeries {
    /// Largest `|residual| / ln(1 + t)` among samples in `[lo, hi]`.
    pub fn max_log_ratio(&self, lo: f64, hi: f64) -> Option<f64> {
        self.times
            .iter()
            .zip(&self.residuals)
            .filter(|(&t, _)| t >= lo && t <= hi && t > 0.0)
            .map(|(&t, &res)| res.abs() / (1.0 + t).ln())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// Build the residual series for a trajectory given its terminal radial
/// momentum. The terminal radial velocity is `w_inf` itself classically and
/// `w_inf / sqrt(1 + w_inf^2)` relativistically.
pub fn spatial_asymptote_residual(
    tr: &Trajectory,
    w_inf: f64,
    model: Model,
) -> Result<ResidualSeries> {
    if tr.len() < 2 {
        return Err(CoreError::TrajectoryTooShort {
            span: tr.span(),
            min: 0.0,
        });
    }
    let v_inf = match model {
        Model::Classical => w_inf,
        Model::Relativistic => w_inf / (1.0 + w_inf * w_inf).sqrt(),
    };
    let times = tr.times.clone();
    let residuals: Vec<f64> = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(&t, s)| s.r - v_inf * t)
        .collect();

    let xs: Vec<f64> = times.iter().map(|&t| (1.0 + t).ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = residuals.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&residuals) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == 0.0 {
        return Err(CoreError::InvalidInput {
            what: "residual series",
            why: "all samples share one time; no growth rate is defined".into(),
        });
    }
    let log_coefficient = sxy / sxx;
    let offset = y_mean - log_coefficient * x_mean;
    Ok(ResidualSeries {
        times,
        residuals,
        log_coefficient,
        offset,
    })
}
