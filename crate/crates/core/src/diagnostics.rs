//! Per-record measurements: conserved quantities, norms, support extremes,
//! and the log-log rate fitter used to confront decay predictions.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{CoreError, Result};
use crate::field::{
    density_lq_norm, density_profile, BinSpec, DensityProfile, Exponent, FieldTable,
};
use crate::phase::{Ensemble, Model};

/// Reduced-coordinate Casimir integrand phi(ell). Any such phi yields a
/// conserved functional because ell is conserved along characteristics and
/// the flow preserves phase-space volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CasimirFn {
    Identity,
    Square,
    Indicator { lo: f64, hi: f64 },
}

impl CasimirFn {
    pub fn eval(&self, ell: f64) -> f64 {
        match self {
            CasimirFn::Identity => ell,
            CasimirFn::Square => ell * ell,
            CasimirFn::Indicator { lo, hi } => {
                if (*lo..=*hi).contains(&ell) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Stable label for report columns.
    pub fn name(&self) -> String {
        match self {
            CasimirFn::Identity => "identity".into(),
            CasimirFn::Square => "square".into(),
            CasimirFn::Indicator { lo, hi } => {
                format!("indicator_{lo}_{hi}").replace('.', "_").replace('-', "m")
            }
        }
    }
}

/// Total mass: the plain weight sum in particle order. Weights absorb the
/// reduced-measure factor, so this is the mass of the underlying density.
pub fn total_mass(e: &Ensemble) -> f64 {
    e.particles.iter().map(|p| p.weight).sum()
}

/// Total energy of the ensemble.
///
/// Kinetic part per unit mass: `(w^2 + ell/r^2) / 2` classically,
/// `sqrt(1 + w^2 + ell/r^2)` relativistically (rest mass included). The field
/// part `1/2 int m^2 / r^2 dr` comes from the table's exact piecewise
/// integral; pass `None` in field-free test mode, where it is absent. With the
/// half-weight enclosed-mass convention this total is an exact invariant of
/// the interacting shell system, so its drift measures integrator error alone.
pub fn total_energy(e: &Ensemble, table: Option<&FieldTable>) -> Result<f64> {
    let mut kinetic = 0.0f64;
    for p in &e.particles {
        let s2 = p.state.speed_squared()?;
        kinetic += match e.model {
            Model::Classical => 0.5 * p.weight * s2,
            Model::Relativistic => p.weight * (1.0 + s2).sqrt(),
        };
    }
    Ok(kinetic + table.map_or(0.0, FieldTable::potential_energy))
}

/// Conserved Casimir functional `sum_i mu_i phi(ell_i) / (4 pi^2)`. The
/// division undoes the measure factor absorbed into the weights, matching the
/// plain reduced-coordinate integral of `phi(ell) f`.
pub fn casimir(e: &Ensemble, phi: &CasimirFn) -> f64 {
    let sum: f64 = e
        .particles
        .iter()
        .map(|p| p.weight * phi.eval(p.state.ell))
        .sum();
    sum / (4.0 * PI * PI)
}

/// Extremes of the current support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportExtremes {
    /// Largest radius.
    pub r_sup: f64,
    /// Largest absolute radial momentum.
    pub w_sup: f64,
    /// Largest momentum magnitude.
    pub speed_sup: f64,
}

pub fn support_functions(e: &Ensemble) -> Result<SupportExtremes> {
    if e.is_empty() {
        return Err(CoreError::EmptyEnsemble);
    }
    let mut out = SupportExtremes {
        r_sup: 0.0,
        w_sup: 0.0,
        speed_sup: 0.0,
    };
    for p in &e.particles {
        out.r_sup = out.r_sup.max(p.state.r);
        out.w_sup = out.w_sup.max(p.state.w.abs());
        out.speed_sup = out.speed_sup.max(p.state.speed_squared()?.sqrt());
    }
    Ok(out)
}

/// What to measure at each record point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSpec {
    /// Field norm orders; each must exceed 3/2.
    pub e_exponents: Vec<Exponent>,
    /// Density norm orders; each must be at least 1.
    pub rho_exponents: Vec<Exponent>,
    pub casimirs: Vec<CasimirFn>,
    /// Radial bin count for density estimates; 0 selects the cube-root rule.
    pub density_bins: usize,
}

impl Default for DiagnosticSpec {
    fn default() -> Self {
        Self {
            e_exponents: vec![
                Exponent::Finite(2.0),
                Exponent::Finite(3.0),
                Exponent::Inf,
            ],
            rho_exponents: vec![
                Exponent::Finite(1.0),
                Exponent::Finite(1.2),
                Exponent::Finite(2.0),
                Exponent::Inf,
            ],
            casimirs: vec![CasimirFn::Identity, CasimirFn::Square],
            density_bins: 0,
        }
    }
}

impl DiagnosticSpec {
    pub fn validate(&self) -> Result<()> {
        for &p in &self.e_exponents {
            if let Exponent::Finite(p) = p {
                if !(p > 1.5) {
                    return Err(CoreError::FieldNormExponent { p });
                }
            }
        }
        for &q in &self.rho_exponents {
            if let Exponent::Finite(q) = q {
                if q < 1.0 {
                    return Err(CoreError::DensityNormExponent { q });
                }
            }
        }
        Ok(())
    }
}

/// One measured row of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    /// One value per configured Casimir, in spec order.
    pub casimirs: Vec<f64>,
    /// One value per configured field norm order, in spec order.
    pub e_norms: Vec<f64>,
    /// One value per configured density norm order, in spec order.
    pub rho_norms: Vec<f64>,
    pub r_sup: f64,
    pub w_sup: f64,
    pub speed_sup: f64,
    /// Cumulative clamp events since the start of the run.
    pub clamp_events: u64,
}

/// Measure everything in the spec against the current ensemble state.
/// `table` must describe the current positions (or be `None` in field-free
/// mode, where field norms and field energy vanish identically).
pub fn measure(
    e: &Ensemble,
    table: Option<&FieldTable>,
    spec: &DiagnosticSpec,
    clamp_events: u64,
) -> Result<DiagnosticRecord> {
    let mass = total_mass(e);
    let energy = total_energy(e, table)?;
    let casimirs = spec.casimirs.iter().map(|c| casimir(e, c)).collect();
    let e_norms = spec
        .e_exponents
        .iter()
        .map(|&p| match table {
            Some(t) => t.field_lp_norm(p),
            None => Ok(0.0),
        })
        .collect::<Result<Vec<_>>>()?;
    let bins = BinSpec::covering(e, spec.density_bins)?;
    let d = density_profile(e, &bins)?;
    let rho_norms = spec
        .rho_exponents
        .iter()
        .map(|&q| density_lq_norm(&d, q))
        .collect::<Result<Vec<_>>>()?;
    let sup = support_functions(e)?;
    Ok(DiagnosticRecord {
        time: e.time,
        mass,
        energy,
        casimirs,
        e_norms,
        rho_norms,
        r_sup: sup.r_sup,
        w_sup: sup.w_sup,
        speed_sup: sup.speed_sup,
        clamp_events,
    })
}

/// Density profile of the current state with automatic support-following bins.
pub fn current_density(e: &Ensemble, bins: usize) -> Result<DensityProfile> {
    density_profile(e, &BinSpec::covering(e, bins)?)
}

/// Fewest usable samples a rate fit will accept.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Result of an ordinary least-squares fit of `ln(value)` against `ln(time)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Fit `value ~ C * time^slope` over the samples inside `[window.0, window.1]`
/// (inclusive) by least squares in log-log coordinates.
///
/// The window must start after t = 0, every value inside it must be positive,
/// and at least [`MIN_FIT_SAMPLES`] samples must land in it.
pub fn fit_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<FitResult> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(CoreError::InvalidInput {
            what: "fit window",
            why: format!("need 0 < lo < hi, got [{lo}, {hi}]"),
        });
    }
    if times.len() != values.len() {
        return Err(CoreError::InvalidInput {
            what: "fit series",
            why: format!(
                "times ({}) and values ({}) differ in length",
                times.len(),
                values.len()
            ),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < lo || t > hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(CoreError::FitValueNotPositive { lo, hi, t });
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < MIN_FIT_SAMPLES {
        return Err(CoreError::FitWindowTooSparse {
            lo,
            hi,
            found: n,
            need: MIN_FIT_SAMPLES,
        });
    }
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = xs[i] - x_mean;
        sxx += dx * dx;
        sxy += dx * (ys[i] - y_mean);
    }
    if sxx == 0.0 {
        return Err(CoreError::InvalidInput {
            what: "fit window",
            why: "all samples share one time; no slope is defined".into(),
        });
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut ss_res = 0.0;
    for i in 0..n {
        let e = ys[i] - (intercept + slope * xs[i]);
        ss_res += e * e;
    }
    let stderr = (ss_res / ((nf - 2.0) * sxx)).sqrt();
    Ok(FitResult {
        slope,
        intercept,
        stderr,
        window,
        samples: n,
    })
}

/// Largest value among samples whose time falls in `[lo, hi]` (inclusive).
pub fn max_in_window(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<f64> {
    times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= lo && t <= hi)
        .map(|(_, &v)| v)
        .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

/// Smallest and largest value among samples in `[lo, hi]` (inclusive).
pub fn minmax_in_window(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= lo && t <= hi)
        .map(|(_, &v)| v)
        .fold(None, |acc, v| {
            Some(match acc {
                None => (v, v),
                Some((lo_v, hi_v)) => (lo_v.min(v), hi_v.max(v)),
            })
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_field_table;
    use crate::phase::{Particle, RadialPoint};
    use approx::assert_relative_eq;

    fn particle(r: f64, w: f64, ell: f64, weight: f64) -> Particle {
        Particle {
            state: RadialPoint { r, w, ell },
            weight,
        }
    }

    #[test]
    fn classical_energy_of_a_unit_shell() {
        // Kinetic 1/2 * w^2 plus the self-interaction 1/2 * weight^2 / r.
        let e = Ensemble::new(Model::Classical, 0.0, vec![particle(1.0, 1.0, 0.0, 1.0)]);
        let t = build_field_table(&e).unwrap();
        let energy = total_energy(&e, Some(&t)).unwrap();
        assert_relative_eq!(energy, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn relativistic_energy_without_field() {
        let e = Ensemble::new(Model::Relativistic, 0.0, vec![particle(1.0, 0.0, 1.0, 1.0)]);
        let energy = total_energy(&e, None).unwrap();
        assert_relative_eq!(energy, 2.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn casimir_reference_values() {
        let e = Ensemble::new(
            Model::Classical,
            0.0,
            vec![particle(1.0, 0.0, 2.0, 4.0 * PI * PI)],
        );
        assert_relative_eq!(casimir(&e, &CasimirFn::Identity), 2.0, max_relative = 1e-14);
        assert_relative_eq!(casimir(&e, &CasimirFn::Square), 4.0, max_relative = 1e-14);
        assert_relative_eq!(
            casimir(&e, &CasimirFn::Indicator { lo: 1.5, hi: 2.5 }),
            1.0,
            max_relative = 1e-14
        );
        assert_eq!(casimir(&e, &CasimirFn::Indicator { lo: 3.0, hi: 4.0 }), 0.0);
    }

    #[test]
    fn support_extremes_reference_values() {
        let e = Ensemble::new(
            Model::Classical,
            0.0,
            vec![particle(1.0, -2.0, 0.0, 1.0), particle(3.0, 1.0, 4.0, 1.0)],
        );
        let s = support_functions(&e).unwrap();
        assert_eq!(s.r_sup, 3.0);
        assert_eq!(s.w_sup, 2.0);
        assert_relative_eq!(s.speed_sup, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn measure_fills_every_column() {
        let e = Ensemble::new(
            Model::Classical,
            0.0,
            vec![particle(1.0, 0.1, 0.5, 0.5), particle(2.0, -0.1, 1.0, 0.5)],
        );
        let t = build_field_table(&e).unwrap();
        let spec = DiagnosticSpec::default();
        spec.validate().unwrap();
        let rec = measure(&e, Some(&t), &spec, 7).unwrap();
        assert_eq!(rec.mass, 1.0);
        assert_eq!(rec.casimirs.len(), 2);
        assert_eq!(rec.e_norms.len(), 3);
        assert_eq!(rec.rho_norms.len(), 4);
        assert_eq!(rec.clamp_events, 7);
        // The q = 1 density norm is the mass itself, bit for bit.
        assert_eq!(rec.rho_norms[0], rec.mass);
    }

    #[test]
    fn spec_rejects_divergent_exponents() {
        let spec = DiagnosticSpec {
            e_exponents: vec![Exponent::Finite(1.5)],
            ..Default::default()
        };
        assert!(spec.validate().is_err());
        let spec = DiagnosticSpec {
            rho_exponents: vec![Exponent::Finite(0.5)],
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    fn sampled(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let times: Vec<f64> = (10..=100).map(|i| i as f64).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        (times, values)
    }

    #[test]
    fn fit_recovers_pure_power_laws() {
        let (t, v) = sampled(|t| t.powi(-2));
        let fit = fit_exponent(&t, &v, (10.0, 100.0)).unwrap();
        assert_relative_eq!(fit.slope, -2.0, epsilon = 1e-12);
        assert!(fit.stderr < 1e-12);

        let (t, v) = sampled(|t| 5.0 * t.powf(-0.5));
        let fit = fit_exponent(&t, &v, (10.0, 100.0)).unwrap();
        assert_relative_eq!(fit.slope, -0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 5.0f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn fit_tolerates_bounded_oscillation() {
        // A bounded multiplicative wobble of amplitude a over a log-time
        // window of width L can tilt the fitted slope by up to about 2a/L;
        // here that allowance is 0.1.
        let (t, v) = sampled(|t| t.powi(-2) * (1.0 + 0.1 * t.ln().sin()));
        let fit = fit_exponent(&t, &v, (10.0, 100.0)).unwrap();
        assert!((fit.slope + 2.0).abs() < 0.1, "slope = {}", fit.slope);
    }

    #[test]
    fn fit_window_restricts_samples() {
        let (t, v) = sampled(|t| t.powi(-1));
        let fit = fit_exponent(&t, &v, (20.0, 50.0)).unwrap();
        assert_eq!(fit.samples, 31);
        assert_eq!(fit.window, (20.0, 50.0));
    }

    #[test]
    fn fit_error_paths() {
        let (t, v) = sampled(|t| t.powi(-2));
        assert!(matches!(
            fit_exponent(&t[..4], &v[..4], (10.0, 100.0)),
            Err(CoreError::FitWindowTooSparse { found: 4, .. })
        ));
        let mut bad = v.clone();
        bad[40] = 0.0;
        assert!(matches!(
            fit_exponent(&t, &bad, (10.0, 100.0)),
            Err(CoreError::FitValueNotPositive { .. })
        ));
        assert!(fit_exponent(&t, &v, (0.0, 100.0)).is_err());
        assert!(fit_exponent(&t, &v[..50], (10.0, 100.0)).is_err());
    }

    #[test]
    fn window_helpers() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let v = [5.0, 2.0, 9.0, 1.0];
        assert_eq!(max_in_window(&t, &v, 1.0, 3.0), Some(9.0));
        assert_eq!(minmax_in_window(&t, &v, 1.0, 3.0), Some((1.0, 9.0)));
        assert_eq!(max_in_window(&t, &v, 10.0, 20.0), None);
    }
}
