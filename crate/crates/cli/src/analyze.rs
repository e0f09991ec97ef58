//! The analysis stage: read a completed run directory, execute the late-time
//! estimator suite, and write `asymptotics.json`.
//!
//! Checks performed: cross-validated terminal momenta with decay-rate fits,
//! boundedness of the logarithmic radius residual, anchor-invariance of the
//! terminal momentum range, conservation identities of the limiting momentum
//! profile, convergence of the spatially averaged profile toward it, and
//! ghost-pair sensitivity.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vlasov_core::asymptotics::{
    grid_conserved, limit_profile, momentum_rate_check, omega_invariance, pair_dwinf,
    pair_sensitivity, profile_convergence, pushforward_conserved, spatial_asymptote_residual,
    spatial_average, winf_integral, winf_late, winf_late_all, GridSpec, MomentumGrid, RateCheck,
};
use vlasov_core::dynamics::{free_stream_terminal_momentum, FieldCoupling};
use vlasov_core::runner::{GhostPair, Trajectory};
use vlasov_core::{Ensemble, Model};

use crate::config::parse_config;
use crate::output;
use crate::report::{
    self, fit_outcome, Asymptotics, ExactIdentitiesReport, FconvReport, FinfReport, FitOutcome,
    GridInfo, OmegaSummary, PairReport, ResidualReport, ResidualShell, SensitivityReport,
    WinfReport, WinfShell,
};

/// Steepest decay slope the momentum residuals must reach, and the fraction
/// of shells required to reach it.
pub const RATE_FLOOR: f64 = -0.8;
pub const RATE_FRACTION: f64 = 0.9;
/// Agreement budget between the two terminal-momentum estimators.
pub const WINF_AGREEMENT: f64 = 0.01;
/// Allowed late/early growth of the residual-to-log ratio.
pub const RESIDUAL_GROWTH: f64 = 1.1;
/// Agreement budget for the terminal momentum range endpoints.
pub const OMEGA_BUDGET: f64 = 0.01;
/// Conservation budgets for the limiting profile.
pub const FINF_MASS_BUDGET: f64 = 1e-12;
pub const FINF_CASIMIR_BUDGET: f64 = 0.01;
pub const FINF_ENERGY_BUDGET: f64 = 0.02;
/// Budget for the shell-level identities available when the terminal
/// momenta are known in closed form (field-free runs).
pub const EXACT_IDENTITY_BUDGET: f64 = 1e-6;
/// Ceiling on the profile-convergence decay slope.
pub const FCONV_SLOPE_CEILING: f64 = -0.5;
/// Allowed late/mid growth of the normalized ghost separation.
pub const SENSITIVITY_GROWTH: f64 = 1.1;
/// Smallest admissible response of the terminal momentum to its launch value.
pub const DWINF_FLOOR: f64 = 0.4;

/// Optional analysis controls, read from a TOML file; everything defaults
/// relative to the run's final time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default)]
    pub windows: WindowsSection,
    #[serde(default)]
    pub grid: GridSection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsSection {
    /// Window for the momentum-residual decay fit; default `[t_end/10, t_end]`.
    pub rate: Option<[f64; 2]>,
    /// Earliest snapshot used for profile convergence; default `t_end/4`.
    pub fconv_min: Option<f64>,
    /// Anchor times for the range-invariance comparison; default
    /// `[t_end/4, 3 t_end/4]`.
    pub omega: Option<[f64; 2]>,
    /// Restart time of the integral estimator; default `t_end/4`.
    pub winf_anchor: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Momentum cells; default 16. The default is deliberately coarse: the
    /// sup-cell convergence check bottoms out at the weight of a single
    /// quadrature shell, and cells must stay heavy enough that this floor
    /// sits below the decay being measured on desk-scale ensembles.
    pub n_u: Option<usize>,
    /// Angular momentum cells; default 12.
    pub n_ell: Option<usize>,
    /// Explicit ranges; when absent the grid covers the recorded data.
    pub u_range: Option<[f64; 2]>,
    pub ell_range: Option<[f64; 2]>,
}

pub fn parse_analysis_spec(text: &str) -> Result<AnalysisSpec> {
    toml::from_str(text).context("analysis spec syntax")
}

#[derive(Debug, Clone, Copy)]
struct Resolved {
    rate: (f64, f64),
    fconv_min: f64,
    omega: (f64, f64),
    anchor: f64,
    n_u: usize,
    n_ell: usize,
    u_range: Option<(f64, f64)>,
    ell_range: Option<(f64, f64)>,
}

fn resolve(spec: &AnalysisSpec, t_end: f64) -> Result<Resolved> {
    let w = &spec.windows;
    let rate = w.rate.map_or((t_end / 10.0, t_end), |[a, b]| (a, b));
    if !(0.0 < rate.0 && rate.0 < rate.1 && rate.1 <= t_end) {
        bail!("windows.rate: need 0 < lo < hi <= {t_end}, got [{}, {}]", rate.0, rate.1);
    }
    let omega = w.omega.map_or((t_end / 4.0, 0.75 * t_end), |[a, b]| (a, b));
    if !(0.0 < omega.0 && omega.0 < omega.1 && omega.1 <= t_end) {
        bail!("windows.omega: need 0 < lo < hi <= {t_end}, got [{}, {}]", omega.0, omega.1);
    }
    let fconv_min = w.fconv_min.unwrap_or(t_end / 4.0);
    if !(0.0 <= fconv_min && fconv_min < t_end) {
        bail!("windows.fconv_min: {fconv_min} outside [0, {t_end})");
    }
    let anchor = w.winf_anchor.unwrap_or(t_end / 4.0);
    if !(0.0 <= anchor && anchor < t_end) {
        bail!("windows.winf_anchor: {anchor} outside [0, {t_end})");
    }
    let g = &spec.grid;
    let n_u = g.n_u.unwrap_or(16);
    let n_ell = g.n_ell.unwrap_or(12);
    if n_u == 0 || n_ell == 0 {
        bail!("grid: cell counts must be positive");
    }
    Ok(Resolved {
        rate,
        fconv_min,
        omega,
        anchor,
        n_u,
        n_ell,
        u_range: g.u_range.map(|[a, b]| (a, b)),
        ell_range: g.ell_range.map(|[a, b]| (a, b)),
    })
}

/// Share of the integral estimate contributed by its extrapolated tail.
fn integral_tail_fraction(tr: &Trajectory, model: Model, estimate: f64) -> f64 {
    let (Some(&t_last), Some(s), Some(&m)) = (tr.times.last(), tr.states.last(), tr.m_at.last())
    else {
        return 0.0;
    };
    if s.r <= 0.0 || t_last <= 0.0 {
        return 0.0;
    }
    let s2 = s.w * s.w + s.ell / (s.r * s.r);
    let p = match model {
        Model::Classical => s2.sqrt(),
        Model::Relativistic => (1.0 + s2).sqrt(),
    };
    let ratio = if p > 0.0 { s.w / p } else { 0.0 };
    (m / (s.r * s.r) * ratio * t_last).abs() / estimate.abs().max(1e-300)
}

fn winf_block(
    trajectories: &[Trajectory],
    model: Model,
    r: &Resolved,
    t_end: f64,
) -> Result<WinfReport> {
    let min_span = 0.25 * t_end;
    let mut shells = Vec::with_capacity(trajectories.len());
    for tr in trajectories {
        let id = tr.particle_index;
        let late = winf_late(tr, min_span)
            .with_context(|| format!("shell {id}: late-time extrapolation"))?;
        let anchored = tr.suffix(r.anchor);
        let integral = winf_integral(&anchored, model)
            .with_context(|| format!("shell {id}: integral estimator"))?;
        let tail_fraction = integral_tail_fraction(&anchored, model, integral);
        let tolerance = WINF_AGREEMENT.max(3.0 * tail_fraction);
        let rel_disagreement =
            (late - integral).abs() / late.abs().max(integral.abs()).max(1e-300);
        let (rate_slope, rate_stderr, rate_degenerate) =
            match momentum_rate_check(tr, late, r.rate)
                .with_context(|| format!("shell {id}: momentum decay fit"))?
            {
                RateCheck::Fit(f) => (Some(f.slope), Some(f.stderr), false),
                RateCheck::Degenerate { .. } => (None, None, true),
            };
        shells.push(WinfShell {
            id,
            ell: tr.initial.ell,
            late,
            integral,
            rel_disagreement,
            tolerance,
            tail_fraction,
            rate_slope,
            rate_stderr,
            rate_degenerate,
        });
    }
    let all_positive = shells.iter().all(|s| s.late > 0.0 && s.integral > 0.0);
    let max_rel_disagreement = shells
        .iter()
        .map(|s| s.rel_disagreement)
        .fold(0.0f64, f64::max);
    let agreement_pass = shells.iter().all(|s| s.rel_disagreement <= s.tolerance);
    let rate_ok = shells
        .iter()
        .filter(|s| s.rate_degenerate || s.rate_slope.is_some_and(|sl| sl <= RATE_FLOOR))
        .count();
    let rate_pass_fraction = rate_ok as f64 / shells.len() as f64;
    let pass = all_positive && agreement_pass && rate_pass_fraction >= RATE_FRACTION;
    Ok(WinfReport {
        anchor: r.anchor,
        rate_window: [r.rate.0, r.rate.1],
        shells,
        all_positive,
        max_rel_disagreement,
        agreement_pass,
        rate_pass_fraction,
        rate_floor: RATE_FLOOR,
        required_fraction: RATE_FRACTION,
        pass,
    })
}

fn residual_block(
    trajectories: &[Trajectory],
    winf: &WinfReport,
    model: Model,
    t_end: f64,
) -> Result<ResidualReport> {
    let early_window = [t_end / 10.0, t_end / 2.0];
    let late_window = [t_end / 2.0, t_end];
    let mut shells = Vec::with_capacity(trajectories.len());
    for (tr, w) in trajectories.iter().zip(&winf.shells) {
        let series = spatial_asymptote_residual(tr, w.late, model)
            .with_context(|| format!("shell {}: radius residual", tr.particle_index))?;
        shells.push(ResidualShell {
            id: tr.particle_index,
            log_coefficient: series.log_coefficient,
            early_max: series.max_log_ratio(early_window[0], early_window[1]),
            late_max: series.max_log_ratio(late_window[0], late_window[1]),
        });
    }
    let fold = |pick: fn(&ResidualShell) -> Option<f64>| {
        shells
            .iter()
            .filter_map(pick)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let early_max = fold(|s| s.early_max);
    let late_max = fold(|s| s.late_max);
    if !early_max.is_finite() || !late_max.is_finite() {
        bail!("residual windows hold no samples; the run is too short to analyze");
    }
    let ratio = if late_max == 0.0 {
        0.0
    } else {
        late_max / early_max.max(1e-300)
    };
    Ok(ResidualReport {
        early_window,
        late_window,
        shells,
        early_max,
        late_max,
        ratio,
        budget: RESIDUAL_GROWTH,
        pass: ratio < RESIDUAL_GROWTH,
    })
}

fn omega_block(trajectories: &[Trajectory], model: Model, r: &Resolved) -> Result<OmegaSummary> {
    let om = omega_invariance(trajectories, model, r.omega.0, r.omega.1)
        .context("terminal momentum range comparison")?;
    let ell_exact = om.ell_range_a == om.ell_range_b;
    Ok(OmegaSummary {
        t_a: om.t_a,
        t_b: om.t_b,
        w_range_a: [om.w_range_a.0, om.w_range_a.1],
        w_range_b: [om.w_range_b.0, om.w_range_b.1],
        ell_range_a: [om.ell_range_a.0, om.ell_range_a.1],
        ell_range_b: [om.ell_range_b.0, om.ell_range_b.1],
        max_rel_endpoint_diff: om.max_rel_endpoint_diff,
        ell_exact,
        budget: OMEGA_BUDGET,
        pass: om.max_rel_endpoint_diff <= OMEGA_BUDGET && ell_exact,
    })
}

/// Largest value over the final third of a series against the middle third,
/// with 5% slack; short series pass vacuously.
fn eventually_decreasing(diffs: &[f64]) -> bool {
    let n = diffs.len();
    if n < 3 {
        return true;
    }
    let third = n / 3;
    let max_of = |xs: &[f64]| xs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mid = max_of(&diffs[third..n - third]);
    let last = max_of(&diffs[n - third..]);
    last <= 1.05 * mid
}

#[allow(clippy::too_many_arguments)]
fn finf_and_fconv(
    snapshots: &[(f64, Ensemble)],
    diag: &output::Table,
    casimir_names: &[String],
    casimirs: &[vlasov_core::diagnostics::CasimirFn],
    model: Model,
    coupled: bool,
    r: &Resolved,
    t_end: f64,
) -> Result<(FinfReport, FconvReport)> {
    let n = snapshots.len();
    let (t_prev, prev) = &snapshots[n - 2];
    let (t_last, last) = &snapshots[n - 1];
    // With the field on, extrapolate each shell's terminal momentum from the
    // final pair of snapshots; without it the limit is known in closed form
    // from any single state.
    let winf_all = if coupled {
        winf_late_all(prev, last).context("terminal momenta from the final snapshot pair")?
    } else {
        last.particles
            .iter()
            .enumerate()
            .map(|(i, p)| {
                free_stream_terminal_momentum(&p.state)
                    .with_context(|| format!("closed-form terminal momentum of shell {i}"))
            })
            .collect::<Result<Vec<f64>>>()?
    };
    let ells: Vec<f64> = last.particles.iter().map(|p| p.state.ell).collect();
    let weights: Vec<f64> = last.particles.iter().map(|p| p.weight).collect();

    let slack = 1e-9 * r.fconv_min.abs().max(1.0);
    let used: Vec<&(f64, Ensemble)> = snapshots
        .iter()
        .filter(|(t, _)| *t >= r.fconv_min - slack)
        .collect();
    if used.len() < 2 {
        bail!(
            "need at least two snapshots at or after t = {} for profile convergence, found {}",
            r.fconv_min,
            used.len()
        );
    }

    // A grid that bins both the terminal momenta and every used snapshot.
    let mut us = winf_all.clone();
    for (_, e) in &used {
        us.extend(e.particles.iter().map(|p| p.state.w));
    }
    let cover = GridSpec::covering(&us, &ells, r.n_u, r.n_ell)?;
    let grid_spec = GridSpec::new(
        r.n_u,
        r.n_ell,
        r.u_range.unwrap_or(cover.u_range),
        r.ell_range.unwrap_or(cover.ell_range),
    )?;

    let finf_grid = limit_profile(&winf_all, &ells, &weights, &grid_spec)
        .context("binning the limiting profile (grid spec does not cover the data?)")?;
    let conserved = grid_conserved(&finf_grid, casimirs, model);

    let initial_of = |col: &str| -> Result<f64> {
        let c = diag.column(col)?;
        c.first()
            .copied()
            .with_context(|| format!("diagnostics column {col} is empty"))
    };
    let mass0 = initial_of("mass")?;
    let energy0 = initial_of("energy")?;
    let mass_rel_error = (conserved.mass - mass0).abs() / mass0.abs().max(1e-300);
    let mut casimir_rel_errors = Vec::with_capacity(casimir_names.len());
    for (k, name) in casimir_names.iter().enumerate() {
        let c0 = initial_of(&format!("casimir_{name}"))?;
        casimir_rel_errors.push((conserved.casimirs[k] - c0).abs() / c0.abs().max(1e-300));
    }
    let energy_rel_error = (conserved.energy - energy0).abs() / energy0.abs().max(1e-300);

    // When the terminal momenta are exact, the ungridded pushforward must
    // reproduce the initial conserved set almost to machine precision.
    let exact_identities = (!coupled).then(|| {
        let push = pushforward_conserved(&winf_all, &ells, &weights, casimirs, model);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        let mass_err = rel(push.mass, mass0);
        let cas_errs: Vec<f64> = push
            .casimirs
            .iter()
            .zip(casimir_names)
            .map(|(&c, name)| {
                let c0 = diag
                    .column(&format!("casimir_{name}"))
                    .map(|col| col[0])
                    .unwrap_or(f64::NAN);
                rel(c, c0)
            })
            .collect();
        let energy_err = rel(push.energy, energy0);
        let pass = mass_err < EXACT_IDENTITY_BUDGET
            && cas_errs.iter().all(|&e| e < EXACT_IDENTITY_BUDGET)
            && energy_err < EXACT_IDENTITY_BUDGET;
        ExactIdentitiesReport {
            mass_rel_error: mass_err,
            casimir_rel_errors: cas_errs,
            energy_rel_error: energy_err,
            budget: EXACT_IDENTITY_BUDGET,
            pass,
        }
    });

    let finf_pass = mass_rel_error < FINF_MASS_BUDGET
        && casimir_rel_errors.iter().all(|&e| e < FINF_CASIMIR_BUDGET)
        && energy_rel_error < FINF_ENERGY_BUDGET
        && exact_identities.as_ref().is_none_or(|x| x.pass);
    let finf = FinfReport {
        grid: GridInfo {
            n_u: grid_spec.n_u,
            n_ell: grid_spec.n_ell,
            u_range: [grid_spec.u_range.0, grid_spec.u_range.1],
            ell_range: [grid_spec.ell_range.0, grid_spec.ell_range.1],
        },
        source_times: [*t_prev, *t_last],
        winf_exact: !coupled,
        mass_rel_error,
        mass_budget: FINF_MASS_BUDGET,
        casimir_names: casimir_names.to_vec(),
        casimir_rel_errors,
        casimir_budget: FINF_CASIMIR_BUDGET,
        energy_rel_error,
        energy_budget: FINF_ENERGY_BUDGET,
        exact_identities,
        pass: finf_pass,
    };

    let mut series: Vec<(f64, MomentumGrid)> = Vec::with_capacity(used.len() + 1);
    for (t, e) in &used {
        series.push((
            *t,
            spatial_average(e, &grid_spec)
                .with_context(|| format!("averaging the snapshot at t = {t}"))?,
        ));
    }
    series.push((t_end, finf_grid));
    let conv = profile_convergence(&series)?;
    let degenerate = conv.is_degenerate();
    let slope = if degenerate {
        FitOutcome::Skipped {
            error: "every deviation is exactly zero".into(),
        }
    } else {
        let mut ts = Vec::new();
        let mut ds = Vec::new();
        for (&t, &d) in conv.times.iter().zip(&conv.sup_diffs) {
            if d > 0.0 {
                ts.push(t);
                ds.push(d);
            }
        }
        fit_outcome(&ts, &ds, [r.fconv_min.max(f64::MIN_POSITIVE), t_end])
    };
    let decreasing = degenerate || eventually_decreasing(&conv.sup_diffs);
    let terminal_exact = !degenerate && conv.sup_diffs.last() == Some(&0.0);
    let fconv_pass = degenerate
        || terminal_exact
        || (decreasing && slope.slope().is_some_and(|s| s <= FCONV_SLOPE_CEILING));
    let fconv = FconvReport {
        times: conv.times,
        sup_diffs: conv.sup_diffs,
        fit_window: [r.fconv_min, t_end],
        slope,
        slope_ceiling: FCONV_SLOPE_CEILING,
        eventually_decreasing: decreasing,
        degenerate,
        terminal_exact,
        pass: fconv_pass,
    };
    Ok((finf, fconv))
}

fn sensitivity_block(pairs: &[GhostPair], t_end: f64) -> Result<SensitivityReport> {
    let tau = pairs[0].base.start_time;
    let delta_w = pairs[0].delta_w;
    let mid_window = [tau, 0.9 * t_end];
    let late_window = [0.9 * t_end, t_end];
    let min_span = 0.5 * (t_end - tau);
    // The growth check watches the normalized momentum separation only: the
    // radius separation grows linearly in time even for a perfectly regular
    // flow, while |dW|/delta_w must level off.
    let dw_max = |s: &vlasov_core::asymptotics::SensitivitySeries, lo: f64, hi: f64| {
        s.times
            .iter()
            .zip(&s.dw)
            .filter(|(&t, _)| t >= lo && t <= hi)
            .map(|(_, &v)| v)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.max(v))))
    };
    let mut out = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let id = pair.base.particle_index;
        let series =
            pair_sensitivity(pair).with_context(|| format!("ghost pair for shell {id}"))?;
        let mid_max = dw_max(&series, mid_window[0], mid_window[1]);
        let late_max = dw_max(&series, late_window[0], late_window[1]);
        let growth = mid_max
            .zip(late_max)
            .map(|(m, l)| l / m.max(1e-300));
        let dwinf_dw = if series.separated {
            None
        } else {
            Some(
                pair_dwinf(pair, min_span)
                    .with_context(|| format!("ghost pair for shell {id}: terminal response"))?,
            )
        };
        out.push(PairReport {
            id,
            mid_max,
            late_max,
            growth,
            dwinf_dw,
            separated: series.separated,
        });
    }
    let max_growth = out
        .iter()
        .filter_map(|p| p.growth)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let min_dwinf = out
        .iter()
        .filter_map(|p| p.dwinf_dw)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    let separated_count = out.iter().filter(|p| p.separated).count();
    let pass = separated_count == 0
        && max_growth.is_some_and(|g| g < SENSITIVITY_GROWTH)
        && min_dwinf.is_some_and(|d| d >= DWINF_FLOOR);
    Ok(SensitivityReport {
        tau,
        delta_w,
        mid_window,
        late_window,
        pairs: out,
        max_growth,
        growth_budget: SENSITIVITY_GROWTH,
        min_dwinf,
        dwinf_floor: DWINF_FLOOR,
        separated_count,
        pass,
    })
}

/// Analyze a completed run directory and write `asymptotics.json` (also
/// filling the analysis entries of `summary.json`).
pub fn run_analysis(run_dir: &Path, spec: &AnalysisSpec) -> Result<Asymptotics> {
    let cfg_path = run_dir.join(output::CONFIG_FILE);
    let cfg_text = fs::read_to_string(&cfg_path)
        .with_context(|| format!("reading {}", cfg_path.display()))?;
    let cfg = parse_config(&cfg_text).context("run configuration")?;
    let model = cfg.model;
    let t_end = cfg.step.t_end;
    if !(t_end > 0.0) {
        bail!("analysis needs a run with t_end > 0");
    }
    let r = resolve(spec, t_end)?;
    let diag_spec = cfg.diagnostic_spec()?;
    let casimir_names: Vec<String> = diag_spec.casimirs.iter().map(|c| c.name()).collect();

    let diag = output::read_diagnostics(run_dir)?;
    let trajectories = output::read_trajectories(run_dir)?;
    if trajectories.is_empty() {
        bail!("no tracked trajectories recorded; rerun with diagnostics.tracked > 0");
    }
    let snapshots = output::read_snapshots(run_dir, model)?;
    if snapshots.len() < 2 {
        bail!("need at least two snapshots, found {}", snapshots.len());
    }

    let coupled = cfg.step()?.field == FieldCoupling::SelfConsistent;
    let winf = winf_block(&trajectories, model, &r, t_end)?;
    let residuals = residual_block(&trajectories, &winf, model, t_end)?;
    let omega = omega_block(&trajectories, model, &r)?;
    let (finf, fconv) = finf_and_fconv(
        &snapshots,
        &diag,
        &casimir_names,
        &diag_spec.casimirs,
        model,
        coupled,
        &r,
        t_end,
    )?;
    let sensitivity = match &cfg.sensitivity {
        Some(s) if run_dir.join(output::GHOSTS_FILE).exists() => {
            let pairs = output::read_ghosts(run_dir, s.delta_w)?;
            if pairs.is_empty() {
                None
            } else {
                Some(sensitivity_block(&pairs, t_end)?)
            }
        }
        _ => None,
    };

    let mut suites = std::collections::BTreeMap::new();
    suites.insert("winf".to_string(), Some(winf.pass));
    suites.insert("residuals".to_string(), Some(residuals.pass));
    suites.insert("omega".to_string(), Some(omega.pass));
    suites.insert("finf".to_string(), Some(finf.pass));
    suites.insert("fconv".to_string(), Some(fconv.pass));
    suites.insert("sensitivity".to_string(), sensitivity.as_ref().map(|s| s.pass));
    let pass = suites.values().all(|v| v.unwrap_or(true));

    let analysis = Asymptotics {
        model,
        t_end,
        winf,
        residuals,
        omega,
        finf,
        fconv,
        sensitivity,
        suites,
        pass,
    };
    report::write_asymptotics(run_dir, &analysis)?;
    let outcomes: Vec<(&str, Option<bool>)> = analysis
        .suites
        .iter()
        .map(|(k, v)| (k.as_str(), *v))
        .collect();
    report::update_summary_suites(run_dir, &outcomes)
        .context("recording analysis outcomes in summary.json")?;
    Ok(analysis)
}
