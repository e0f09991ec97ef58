//! JSON report schemas (`summary.json`, `asymptotics.json`) and the checks
//! that fill the summary side.
//!
//! Key layout is stable: struct fields serialize in declaration order and
//! maps are sorted, so identical runs produce byte-identical reports. Values
//! that can be infinite (vacuous margins) are stored as options, since JSON
//! has no literal for infinity.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use vlasov_core::diagnostics::{fit_exponent, DiagnosticRecord, DiagnosticSpec, FitResult};
use vlasov_core::field::Exponent;
use vlasov_core::inequalities::InequalityReport;
use vlasov_core::profile::AngularMomentumFloor;
use vlasov_core::Model;

use crate::output::{self, ASYMPTOTICS_FILE, SUMMARY_FILE};

/// Allowed relative energy drift over a run.
pub const ENERGY_DRIFT_BUDGET: f64 = 0.005;
/// Allowed relative variation of `R_sup / t` and of the `W_sup` tail.
pub const SUPPORT_BUDGET: f64 = 0.02;
/// Allowed relative drift of the density 1-norm from the total mass.
pub const DENSITY_MASS_BUDGET: f64 = 1e-12;
/// Largest closed-form deviation accepted from a field-free run.
pub const ORACLE_BUDGET: f64 = 1e-8;

/// A least-squares power-law fit, JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub window: [f64; 2],
    pub samples: usize,
}

impl From<&FitResult> for FitReport {
    fn from(f: &FitResult) -> Self {
        Self {
            slope: f.slope,
            intercept: f.intercept,
            stderr: f.stderr,
            window: [f.window.0, f.window.1],
            samples: f.samples,
        }
    }
}

/// A fit that either succeeded or explains why it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FitOutcome {
    Fit(FitReport),
    Skipped { error: String },
}

impl FitOutcome {
    pub fn slope(&self) -> Option<f64> {
        match self {
            FitOutcome::Fit(f) => Some(f.slope),
            FitOutcome::Skipped { .. } => None,
        }
    }
}

/// Fit a recorded series, folding errors into the outcome.
pub fn fit_outcome(times: &[f64], values: &[f64], window: [f64; 2]) -> FitOutcome {
    match fit_exponent(times, values, (window[0], window[1])) {
        Ok(fit) => FitOutcome::Fit(FitReport::from(&fit)),
        Err(e) => FitOutcome::Skipped { error: e.to_string() },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub initial: f64,
    pub max_abs_delta: f64,
    pub bitwise: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasimirReport {
    pub names: Vec<String>,
    pub initial: Vec<f64>,
    pub max_abs_delta: Vec<f64>,
    pub bitwise: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub initial: f64,
    pub final_value: f64,
    pub max_rel_drift: f64,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMassReport {
    pub initial: f64,
    pub max_rel_delta: f64,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    /// Window over which `R_sup / t` must be nearly constant.
    pub window: [f64; 2],
    pub r_over_t_min: f64,
    pub r_over_t_max: f64,
    /// `(max - min) / max` of `R_sup / t` over the window.
    pub r_over_t_variation: f64,
    /// Largest `W_sup` over the window and over its final tenth.
    pub w_sup_window_max: f64,
    pub w_sup_tail_max: f64,
    /// `(window max - tail max) / tail max`; small means `W_sup` stopped
    /// growing.
    pub w_sup_excess: f64,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldLowerBoundReport {
    /// Records checked against `E_inf >= mass / R_sup^2`.
    pub checked: usize,
    pub violations: usize,
    /// Smallest `E_inf / (mass / R_sup^2)` seen; `>= 1` means the bound held
    /// with no slack anywhere.
    pub worst_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Smallest signed relative margin; absent when the bound was vacuous
    /// everywhere.
    pub worst_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitiesReport {
    pub checks: Vec<CheckReport>,
    pub violations: usize,
    pub samples: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub max_rel_error: f64,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostsInfo {
    pub pairs: usize,
    pub tau: f64,
    pub delta_w: f64,
}

/// The `summary.json` schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub model: Model,
    pub n_particles: usize,
    pub records: usize,
    pub final_time: f64,
    pub clamp_total: u64,
    pub condition_a: AngularMomentumFloor,
    pub mass: MassReport,
    pub casimirs: CasimirReport,
    pub energy: EnergyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_mass: Option<DensityMassReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_lower_bound: Option<FieldLowerBoundReport>,
    pub inequalities: InequalitiesReport,
    /// One log-log decay fit per field / density norm column.
    pub fits: BTreeMap<String, FitOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub free_stream_oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ghosts: Option<GhostsInfo>,
    /// One pass/fail entry per invariant suite; `null` marks suites that are
    /// not applicable to this run or that only the analysis stage can fill.
    pub suites: BTreeMap<String, Option<bool>>,
    /// Conjunction of every applicable simulation-stage suite.
    pub pass: bool,
}

/// Suites evaluated by the analysis stage; present in `suites` as `null`
/// until `analyze` has run.
pub const ANALYSIS_SUITES: [&str; 6] =
    ["winf", "residuals", "omega", "finf", "fconv", "sensitivity"];

pub fn mass_report(records: &[DiagnosticRecord]) -> MassReport {
    let initial = records[0].mass;
    let mut max_abs_delta = 0.0f64;
    let mut bitwise = true;
    for r in records {
        max_abs_delta = max_abs_delta.max((r.mass - initial).abs());
        bitwise &= r.mass.to_bits() == initial.to_bits();
    }
    MassReport { initial, max_abs_delta, bitwise, pass: bitwise }
}

pub fn casimir_report(records: &[DiagnosticRecord], spec: &DiagnosticSpec) -> CasimirReport {
    let names: Vec<String> = spec.casimirs.iter().map(|c| c.name()).collect();
    let initial = records[0].casimirs.clone();
    let mut max_abs_delta = vec![0.0f64; initial.len()];
    let mut bitwise = true;
    for r in records {
        for (k, (&v, &v0)) in r.casimirs.iter().zip(&initial).enumerate() {
            max_abs_delta[k] = max_abs_delta[k].max((v - v0).abs());
            bitwise &= v.to_bits() == v0.to_bits();
        }
    }
    CasimirReport { names, initial, max_abs_delta, bitwise, pass: bitwise }
}

pub fn energy_report(records: &[DiagnosticRecord]) -> EnergyReport {
    let initial = records[0].energy;
    let scale = initial.abs().max(1e-300);
    let mut max_rel_drift = 0.0f64;
    for r in records {
        max_rel_drift = max_rel_drift.max((r.energy - initial).abs() / scale);
    }
    EnergyReport {
        initial,
        final_value: records.last().unwrap().energy,
        max_rel_drift,
        budget: ENERGY_DRIFT_BUDGET,
        pass: max_rel_drift < ENERGY_DRIFT_BUDGET,
    }
}

/// Drift of the density 1-norm, which integrates back to the total mass.
/// `None` when the 1-norm is not among the recorded density exponents.
pub fn density_mass_report(
    records: &[DiagnosticRecord],
    spec: &DiagnosticSpec,
) -> Option<DensityMassReport> {
    let idx = spec
        .rho_exponents
        .iter()
        .position(|&q| q == Exponent::Finite(1.0))?;
    let initial = records[0].rho_norms[idx];
    let scale = initial.abs().max(1e-300);
    let mut max_rel_delta = 0.0f64;
    for r in records {
        max_rel_delta = max_rel_delta.max((r.rho_norms[idx] - initial).abs() / scale);
    }
    Some(DensityMassReport {
        initial,
        max_rel_delta,
        budget: DENSITY_MASS_BUDGET,
        pass: max_rel_delta < DENSITY_MASS_BUDGET,
    })
}

/// Late-time support behavior: `R_sup / t` nearly constant over the second
/// half of the run, `W_sup` no longer growing. `None` when the run is too
/// short to populate the windows.
pub fn support_report(times: &[f64], records: &[DiagnosticRecord]) -> Option<SupportReport> {
    let t_end = *times.last()?;
    if !(t_end > 0.0) {
        return None;
    }
    let window = [0.5 * t_end, t_end];
    let tail_lo = 0.9 * t_end;
    let mut r_over_t_min = f64::INFINITY;
    let mut r_over_t_max = f64::NEG_INFINITY;
    let mut w_sup_window_max = f64::NEG_INFINITY;
    let mut w_sup_tail_max = f64::NEG_INFINITY;
    let mut in_window = 0usize;
    let mut in_tail = 0usize;
    for (&t, rec) in times.iter().zip(records) {
        if t < window[0] || t > window[1] || t <= 0.0 {
            continue;
        }
        in_window += 1;
        let ratio = rec.r_sup / t;
        r_over_t_min = r_over_t_min.min(ratio);
        r_over_t_max = r_over_t_max.max(ratio);
        w_sup_window_max = w_sup_window_max.max(rec.w_sup);
        if t >= tail_lo {
            in_tail += 1;
            w_sup_tail_max = w_sup_tail_max.max(rec.w_sup);
        }
    }
    if in_window < 2 || in_tail == 0 {
        return None;
    }
    let r_over_t_variation = (r_over_t_max - r_over_t_min) / r_over_t_max.abs().max(1e-300);
    let w_sup_excess =
        (w_sup_window_max - w_sup_tail_max) / w_sup_tail_max.abs().max(1e-300);
    Some(SupportReport {
        window,
        r_over_t_min,
        r_over_t_max,
        r_over_t_variation,
        w_sup_window_max,
        w_sup_tail_max,
        w_sup_excess,
        budget: SUPPORT_BUDGET,
        pass: r_over_t_variation < SUPPORT_BUDGET && w_sup_excess < SUPPORT_BUDGET,
    })
}

/// Exact lower bound `E_inf >= mass / R_sup^2`, checked at every record.
/// `None` when the sup norm of the field is not recorded.
pub fn field_lower_bound_report(
    records: &[DiagnosticRecord],
    spec: &DiagnosticSpec,
) -> Option<FieldLowerBoundReport> {
    let idx = spec.e_exponents.iter().position(|&p| p == Exponent::Inf)?;
    let mut violations = 0usize;
    let mut worst_ratio = f64::INFINITY;
    for r in records {
        let bound = r.mass / (r.r_sup * r.r_sup);
        let e_inf = r.e_norms[idx];
        if e_inf < bound {
            violations += 1;
        }
        if bound > 0.0 {
            worst_ratio = worst_ratio.min(e_inf / bound);
        }
    }
    Some(FieldLowerBoundReport {
        checked: records.len(),
        violations,
        worst_ratio,
        pass: violations == 0,
    })
}

pub fn inequalities_report(core: &InequalityReport) -> InequalitiesReport {
    InequalitiesReport {
        checks: core
            .checks
            .iter()
            .map(|c| CheckReport {
                name: c.name.to_string(),
                samples: c.samples,
                violations: c.violations,
                worst_margin: c.worst_margin.is_finite().then_some(c.worst_margin),
            })
            .collect(),
        violations: core.total_violations(),
        samples: core.total_samples(),
        pass: core.passed(),
    }
}

/// Log-log decay fits for every recorded field and density norm column.
pub fn fit_reports(
    times: &[f64],
    records: &[DiagnosticRecord],
    spec: &DiagnosticSpec,
    window: [f64; 2],
) -> BTreeMap<String, FitOutcome> {
    let mut out = BTreeMap::new();
    for (k, &p) in spec.e_exponents.iter().enumerate() {
        let values: Vec<f64> = records.iter().map(|r| r.e_norms[k]).collect();
        out.insert(output::e_column(p), fit_outcome(times, &values, window));
    }
    for (k, &q) in spec.rho_exponents.iter().enumerate() {
        let values: Vec<f64> = records.iter().map(|r| r.rho_norms[k]).collect();
        out.insert(output::rho_column(q), fit_outcome(times, &values, window));
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    write_json(&dir.join(SUMMARY_FILE), summary)
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    read_json(&dir.join(SUMMARY_FILE))
}

/// Record analysis-stage suite outcomes in an existing summary without
/// touching anything else in it.
pub fn update_summary_suites(dir: &Path, outcomes: &[(&str, Option<bool>)]) -> Result<()> {
    let path = dir.join(SUMMARY_FILE);
    let mut value: serde_json::Value = read_json(&path)?;
    let suites = value
        .get_mut("suites")
        .and_then(|s| s.as_object_mut())
        .context("summary.json has no suites object")?;
    for (name, outcome) in outcomes {
        suites.insert(
            name.to_string(),
            match outcome {
                Some(b) => serde_json::Value::Bool(*b),
                None => serde_json::Value::Null,
            },
        );
    }
    write_json(&path, &value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinfShell {
    pub id: usize,
    pub ell: f64,
    /// Late-time extrapolation of the terminal momentum.
    pub late: f64,
    /// Independent integral-identity estimate.
    pub integral: f64,
    pub rel_disagreement: f64,
    /// Per-shell agreement tolerance: 1% or three times the integral's own
    /// tail share, whichever is larger.
    pub tolerance: f64,
    /// Share of the integral estimate contributed by its extrapolated tail.
    pub tail_fraction: f64,
    /// Fitted decay slope of `|W(t) - W_inf|`; absent when the momentum
    /// already converged to the last bit.
    pub rate_slope: Option<f64>,
    pub rate_stderr: Option<f64>,
    pub rate_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinfReport {
    /// The integral estimator restarts from the recorded state at this time.
    pub anchor: f64,
    pub rate_window: [f64; 2],
    pub shells: Vec<WinfShell>,
    pub all_positive: bool,
    pub max_rel_disagreement: f64,
    pub agreement_pass: bool,
    /// Fraction of shells whose decay slope is at most `rate_floor` (shells
    /// with exactly converged momentum count as passing).
    pub rate_pass_fraction: f64,
    pub rate_floor: f64,
    pub required_fraction: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualShell {
    pub id: usize,
    pub log_coefficient: f64,
    pub early_max: Option<f64>,
    pub late_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub early_window: [f64; 2],
    pub late_window: [f64; 2],
    pub shells: Vec<ResidualShell>,
    /// Largest `|residual| / ln(1+t)` over all shells and samples in each
    /// window.
    pub early_max: f64,
    pub late_max: f64,
    pub ratio: f64,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSummary {
    pub t_a: f64,
    pub t_b: f64,
    pub w_range_a: [f64; 2],
    pub w_range_b: [f64; 2],
    pub ell_range_a: [f64; 2],
    pub ell_range_b: [f64; 2],
    pub max_rel_endpoint_diff: f64,
    pub ell_exact: bool,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n_u: usize,
    pub n_ell: usize,
    pub u_range: [f64; 2],
    pub ell_range: [f64; 2],
}

/// Shell-level (unbinned) conservation comparison between the terminal
/// pushforward and the run's first record. Only available when the terminal
/// momenta are known in closed form, i.e. for field-free runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactIdentitiesReport {
    pub mass_rel_error: f64,
    pub casimir_rel_errors: Vec<f64>,
    pub energy_rel_error: f64,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinfReport {
    pub grid: GridInfo,
    /// Times of the two snapshots the terminal momenta were derived from.
    pub source_times: [f64; 2],
    /// Whether the terminal momenta are exact (field-free closed form) or
    /// extrapolated from the final pair of snapshots.
    pub winf_exact: bool,
    pub mass_rel_error: f64,
    pub mass_budget: f64,
    pub casimir_names: Vec<String>,
    pub casimir_rel_errors: Vec<f64>,
    pub casimir_budget: f64,
    pub energy_rel_error: f64,
    pub energy_budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_identities: Option<ExactIdentitiesReport>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FconvReport {
    pub times: Vec<f64>,
    /// Largest cellwise deviation of each profile from the final one.
    pub sup_diffs: Vec<f64>,
    pub fit_window: [f64; 2],
    pub slope: FitOutcome,
    pub slope_ceiling: f64,
    pub eventually_decreasing: bool,
    /// True when every deviation is exactly zero (already converged).
    pub degenerate: bool,
    /// True when the final recorded profile already equals the limit cell
    /// for cell, which settles convergence without a decay fit.
    pub terminal_exact: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub id: usize,
    pub mid_max: Option<f64>,
    pub late_max: Option<f64>,
    /// `late_max / mid_max`; growth means the probes are drifting apart.
    pub growth: Option<f64>,
    pub dwinf_dw: Option<f64>,
    pub separated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub tau: f64,
    pub delta_w: f64,
    pub mid_window: [f64; 2],
    pub late_window: [f64; 2],
    pub pairs: Vec<PairReport>,
    pub max_growth: Option<f64>,
    pub growth_budget: f64,
    pub min_dwinf: Option<f64>,
    pub dwinf_floor: f64,
    pub separated_count: usize,
    pub pass: bool,
}

/// The `asymptotics.json` schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    pub model: Model,
    pub t_end: f64,
    pub winf: WinfReport,
    pub residuals: ResidualReport,
    pub omega: OmegaSummary,
    pub finf: FinfReport,
    pub fconv: FconvReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityReport>,
    pub suites: BTreeMap<String, Option<bool>>,
    pub pass: bool,
}

pub fn write_asymptotics(dir: &Path, a: &Asymptotics) -> Result<()> {
    write_json(&dir.join(ASYMPTOTICS_FILE), a)
}

pub fn read_asymptotics(dir: &Path) -> Result<Asymptotics> {
    read_json(&dir.join(ASYMPTOTICS_FILE))
}
