//! End-to-end run orchestration: build the ensemble, integrate, measure,
//! and write every artifact of a run directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use vlasov_core::dynamics::{free_stream_exact, FieldCoupling};
use vlasov_core::inequalities::check_all;
use vlasov_core::profile::{build_ensemble, check_condition_a};
use vlasov_core::runner::{run, snapshot_schedule, RunOptions};
use vlasov_core::{Ensemble, RadialPoint};

use crate::config::{emit_config, RunConfig};
use crate::output;
use crate::report::{
    self, casimir_report, density_mass_report, energy_report, field_lower_bound_report,
    fit_reports, inequalities_report, mass_report, support_report, GhostsInfo, OracleReport,
    Summary, ANALYSIS_SUITES, ORACLE_BUDGET,
};

/// Largest relative deviation of the final ensemble from the closed-form
/// field-free flow started at the run's initial states.
fn free_stream_error(initial: &[RadialPoint], e: &Ensemble) -> Result<f64> {
    let mut worst = 0.0f64;
    for (p0, p) in initial.iter().zip(&e.particles) {
        let exact = free_stream_exact(p0, e.time, e.model)
            .context("free-stream oracle evaluation")?;
        let dr = (p.state.r - exact.r).abs() / exact.r.abs().max(1e-300);
        // The natural momentum scale is the conserved momentum magnitude; it
        // vanishes only for a shell at rest, which stays exact anyway.
        let scale = (exact.w * exact.w + exact.ell / (exact.r * exact.r)).sqrt();
        let dw = (p.state.w - exact.w).abs() / scale.max(1e-300);
        let dl = (p.state.ell - exact.ell).abs() / exact.ell.abs().max(1.0);
        worst = worst.max(dr).max(dw).max(dl);
    }
    Ok(worst)
}

/// Run one configured simulation and write the full artifact set into
/// `out_dir`. Returns the summary that was written.
pub fn run_simulation(cfg: &RunConfig, out_dir: &Path) -> Result<Summary> {
    let model = cfg.model;
    let profile = cfg.profile()?;
    let quad = cfg.quadrature()?;
    let step = cfg.step()?;
    let spec = cfg.diagnostic_spec()?;

    let ensemble =
        build_ensemble(&profile, &quad, model).context("building the initial ensemble")?;
    let n_particles = ensemble.len();
    let condition_a = check_condition_a(&ensemble)?;
    let initial: Vec<RadialPoint> = ensemble.particles.iter().map(|p| p.state).collect();

    let opts = RunOptions {
        tracked: cfg.diagnostics.tracked.min(n_particles),
        ghosts: cfg.ghost_spec(),
        snapshot_times: snapshot_schedule(step.t_end, step.dt, step.record_every),
    };
    let out = run(ensemble, &step, &spec, &opts)?;

    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    fs::write(out_dir.join(output::CONFIG_FILE), emit_config(cfg)?)
        .context("writing the resolved configuration copy")?;
    output::write_diagnostics(out_dir, &spec, &out.records)?;
    for (t, snap) in &out.snapshots {
        output::write_snapshot(out_dir, *t, snap)?;
    }
    output::write_trajectories(out_dir, &out.trajectories)?;
    if !out.ghosts.is_empty() {
        output::write_ghosts(out_dir, &out.ghosts)?;
    }

    let coupled = step.field == FieldCoupling::SelfConsistent;
    let free_stream_oracle = if coupled {
        None
    } else {
        let max_rel_error = free_stream_error(&initial, &out.ensemble)?;
        Some(OracleReport {
            max_rel_error,
            budget: ORACLE_BUDGET,
            pass: max_rel_error < ORACLE_BUDGET,
        })
    };

    let mass = mass_report(&out.records);
    let casimirs = casimir_report(&out.records, &spec);
    let energy = energy_report(&out.records);
    let density_mass = density_mass_report(&out.records, &spec);
    let support = support_report(&out.times, &out.records);
    let field_lower_bound = if coupled {
        field_lower_bound_report(&out.records, &spec)
    } else {
        None
    };
    let core_checks = check_all(&out.trajectories, model);
    let inequalities = inequalities_report(&core_checks);
    let fits = match cfg.fit_window() {
        Some(window) => fit_reports(&out.times, &out.records, &spec, window),
        None => BTreeMap::new(),
    };
    let ghosts = out.ghosts.first().map(|g| GhostsInfo {
        pairs: out.ghosts.len(),
        tau: g.base.start_time,
        delta_w: g.delta_w,
    });

    let mut suites: BTreeMap<String, Option<bool>> = BTreeMap::new();
    suites.insert("mass".into(), Some(mass.pass));
    suites.insert("casimirs".into(), Some(casimirs.pass));
    suites.insert("energy".into(), Some(energy.pass));
    suites.insert("density_mass".into(), density_mass.as_ref().map(|d| d.pass));
    suites.insert("support".into(), support.as_ref().map(|s| s.pass));
    suites.insert(
        "field_lower_bound".into(),
        field_lower_bound.as_ref().map(|f| f.pass),
    );
    suites.insert(
        "inequalities".into(),
        (!out.trajectories.is_empty()).then_some(inequalities.pass),
    );
    suites.insert(
        "free_stream_oracle".into(),
        free_stream_oracle.as_ref().map(|o| o.pass),
    );
    for name in ANALYSIS_SUITES {
        suites.insert(name.into(), None);
    }
    let pass = suites.values().all(|v| v.unwrap_or(true));

    let summary = Summary {
        model,
        n_particles,
        records: out.records.len(),
        final_time: out.ensemble.time,
        clamp_total: out.clamp_total,
        condition_a,
        mass,
        casimirs,
        energy,
        density_mass,
        support,
        field_lower_bound,
        inequalities,
        fits,
        free_stream_oracle,
        ghosts,
        suites,
        pass,
    };
    report::write_summary(out_dir, &summary)?;
    Ok(summary)
}
