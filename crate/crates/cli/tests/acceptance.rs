//! The acceptance gate: eleven criteria evaluated on reference-scale runs
//! of both models. Every tolerance is pinned here as a constant; each test
//! prints exactly one `criterion N: PASS/FAIL — ...` line (visible with
//! `--nocapture`) and fails if any of its checks miss.
//!
//! The reference configuration is a smooth-box profile on
//! [1,2]x[-0.5,0.5]x[0.5,1.5] with 16384 shells (32x16x32 midpoint nodes),
//! dt = 5e-3, run to t = 200 under the split-step integrator.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use once_cell::sync::Lazy;
use tempfile::TempDir;
use vlasov_cli::output;
use vlasov_cli::report::{self, Asymptotics, FitOutcome, Summary};
use vlasov_core::dynamics::free_stream_exact;
use vlasov_core::Model;

// ----------------------------------------------------------- tolerances --

/// Criterion 1: largest relative deviation from the closed-form field-free
/// flow at dt = 1e-3, t = 1; and the admissible per-halving error ratio of
/// the fourth-order integrator.
const ORACLE_TOL: f64 = 1e-8;
const RK4_RATIO_BAND: (f64, f64) = (12.0, 20.0);
/// Criterion 2: relative energy drift ceiling and the minimum factor by
/// which halving dt must shrink it. Mass and Casimirs must hold bitwise.
const ENERGY_DRIFT_LIMIT: f64 = 0.005;
const ENERGY_HALVING_MIN: f64 = 2.0;
/// Criterion 4: field-norm decay slopes over t in [20, 200], center ± band.
const E_INF_SLOPE: (f64, f64) = (-2.0, 0.15);
const E_P2_SLOPE: (f64, f64) = (-0.5, 0.10);
const E_P3_SLOPE: (f64, f64) = (-1.0, 0.12);
/// Criterion 5: density-norm decay slopes and the mass-constancy budget.
const RHO_INF_SLOPE: (f64, f64) = (-3.0, 0.4);
const RHO_65_SLOPE: (f64, f64) = (-0.5, 0.15);
const RHO_MASS_TOL: f64 = 1e-12;
/// Criterion 6: relative variation of R_sup/t and of the W_sup tail.
const SUPPORT_TOL: f64 = 0.02;
/// Criterion 7: terminal-momentum estimator requirements.
const WINF_RATE_FLOOR: f64 = -0.8;
const WINF_RATE_FRACTION: f64 = 0.9;
const WINF_AGREEMENT_TOL: f64 = 0.01;
/// Criterion 8: allowed late/early growth of residual(t)/ln(1+t).
const RESIDUAL_RATIO_LIMIT: f64 = 1.1;
/// Criterion 9: ghost-pair separation growth and response floor.
const SENSITIVITY_GROWTH_LIMIT: f64 = 1.1;
const DWINF_MIN: f64 = 0.4;
/// Criterion 10: conservation budgets of the limiting momentum profile,
/// and the shell-level budget when the limit is known in closed form.
const FINF_MASS_TOL: f64 = 1e-12;
const FINF_CASIMIR_TOL: f64 = 0.01;
const FINF_ENERGY_TOL: f64 = 0.02;
const ANALYTIC_IDENTITY_TOL: f64 = 1e-6;
/// Criterion 11: momentum-range agreement and profile-convergence slope.
const OMEGA_TOL: f64 = 0.01;
const FCONV_CEILING: f64 = -0.5;

// ------------------------------------------------------------- fixtures --

fn reference_cfg(model: &str, dt: f64) -> String {
    format!(
        r#"model = "{model}"

[profile]
kind = "smooth-box"
r = [1.0, 2.0]
w = [-0.5, 0.5]
ell = [0.5, 1.5]
amplitude = 1.0

[quadrature]
n_r = 32
n_w = 16
n_ell = 32

[step]
dt = {dt}
t_end = 200.0
record_every = 100

[diagnostics]
tracked = 64

[sensitivity]
delta_w = 1e-4
"#
    )
}

/// A field-free run long enough for every estimator suite, used for the
/// closed-form side of criterion 10.
fn analytic_cfg() -> String {
    reference_cfg("classical", 0.01)
        .replace("n_r = 32", "n_r = 8")
        .replace("n_w = 16", "n_w = 4")
        .replace("n_ell = 32", "n_ell = 8")
        .replace("t_end = 200.0", "t_end = 100.0")
        .replace("record_every = 100", "record_every = 50")
        .replace("[diagnostics]", "field = \"none\"\n\n[diagnostics]")
}

/// A short field-free run for the integrator oracle of criterion 1.
fn oracle_cfg(model: &str, integrator: &str, dt: f64) -> String {
    format!(
        r#"model = "{model}"

[profile]
kind = "smooth-box"
r = [1.0, 2.0]
w = [-0.5, 0.5]
ell = [0.5, 1.5]
amplitude = 1.0

[quadrature]
n_r = 8
n_w = 4
n_ell = 8

[step]
dt = {dt}
t_end = 1.0
record_every = 100
integrator = "{integrator}"
field = "none"
"#
    )
}

struct RefRun {
    _keep: TempDir,
    dir: PathBuf,
}

impl RefRun {
    fn summary(&self) -> Summary {
        report::read_summary(&self.dir).expect("summary.json")
    }
    fn asymptotics(&self) -> Asymptotics {
        report::read_asymptotics(&self.dir).expect("asymptotics.json")
    }
}

fn binary(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlasov"))
        .args(args)
        .output()
        .expect("spawning the binary")
}

fn run(cfg: &str, analyzed: bool) -> RefRun {
    let keep = tempfile::tempdir().unwrap();
    let cfg_path = keep.path().join("run.toml");
    fs::write(&cfg_path, cfg).unwrap();
    let dir = keep.path().join("out");
    let sim = binary(&[
        "simulate",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        sim.status.success(),
        "simulation failed: {}",
        String::from_utf8_lossy(&sim.stderr)
    );
    if analyzed {
        // The exit status is intentionally not asserted: a failing estimator
        // suite must surface as the owning criterion's verdict, not as a
        // fixture panic.
        let _ = binary(&["analyze", "--run", dir.to_str().unwrap()]);
    }
    RefRun { _keep: keep, dir }
}

static CLASSICAL: Lazy<RefRun> = Lazy::new(|| run(&reference_cfg("classical", 5e-3), true));
static RELATIVISTIC: Lazy<RefRun> = Lazy::new(|| run(&reference_cfg("relativistic", 5e-3), true));
static CLASSICAL_HALF_DT: Lazy<RefRun> =
    Lazy::new(|| run(&reference_cfg("classical", 2.5e-3), false));
static ANALYTIC: Lazy<RefRun> = Lazy::new(|| run(&analytic_cfg(), true));

fn both() -> [(&'static str, &'static Lazy<RefRun>); 2] {
    [("classical", &CLASSICAL), ("relativistic", &RELATIVISTIC)]
}

// ------------------------------------------------------------ reporting --

struct Gate {
    number: usize,
    title: &'static str,
    details: Vec<String>,
    failures: usize,
}

impl Gate {
    fn new(number: usize, title: &'static str) -> Self {
        Self { number, title, details: Vec::new(), failures: 0 }
    }

    fn check(&mut self, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
            self.details.push(format!("FAILED {detail}"));
        } else {
            self.details.push(detail);
        }
    }

    /// `value` must lie within `band.1` of `band.0`.
    fn in_band(&mut self, what: &str, value: f64, band: (f64, f64)) {
        self.check(
            (value - band.0).abs() <= band.1,
            format!("{what} {value:.4} (want {} ± {})", band.0, band.1),
        );
    }

    /// A decay fit must exist, use the `[20, 200]` window, and land in the
    /// band.
    fn fitted_slope(&mut self, what: &str, fit: &FitOutcome, band: (f64, f64)) {
        match fit {
            FitOutcome::Fit(f) => {
                self.check(f.window == [20.0, 200.0], format!("{what} window {:?}", f.window));
                self.in_band(what, f.slope, band);
            }
            FitOutcome::Skipped { error } => self.check(false, format!("{what} skipped: {error}")),
        }
    }

    fn at_most(&mut self, what: &str, value: f64, limit: f64) {
        self.check(value <= limit, format!("{what} {value:.3e} (limit {limit:.1e})"));
    }

    fn finish(self) {
        let verdict = if self.failures == 0 { "PASS" } else { "FAIL" };
        println!(
            "criterion {}: {verdict} — {} [{}]",
            self.number,
            self.title,
            self.details.join("; ")
        );
        assert!(
            self.failures == 0,
            "criterion {} ({}) failed: {}",
            self.number,
            self.title,
            self.details.join("; ")
        );
    }
}

// ------------------------------------------------------------- criteria --

/// Largest relative deviation of the simulated field-free flow from the
/// closed form, over every shell, measured at the final time of the run.
fn closed_form_error(model: Model, integrator: &str, dt: f64) -> f64 {
    let name = match model {
        Model::Classical => "classical",
        Model::Relativistic => "relativistic",
    };
    let fx = run(&oracle_cfg(name, integrator, dt), false);
    let snaps = output::read_snapshots(&fx.dir, model).expect("snapshots");
    let (t0, initial) = snaps.first().expect("initial snapshot");
    let (t1, last) = snaps.last().expect("final snapshot");
    assert_eq!((*t0, *t1), (0.0, 1.0));
    let mut worst = 0.0f64;
    for (p0, p1) in initial.particles.iter().zip(&last.particles) {
        let exact = free_stream_exact(&p0.state, *t1, model).expect("closed-form flow");
        let scale = exact.r.abs().max(exact.w.abs());
        worst = worst
            .max((p1.state.r - exact.r).abs() / scale)
            .max((p1.state.w - exact.w).abs() / scale);
    }
    worst
}

#[test]
fn criterion_01_integrator_reproduces_the_closed_form_flow() {
    let mut gate = Gate::new(1, "field-free integrator oracle");
    for model in [Model::Classical, Model::Relativistic] {
        let err = closed_form_error(model, "kdk-leapfrog", 1e-3);
        gate.at_most(&format!("{model:?} split-step error"), err, ORACLE_TOL);

        let errs: Vec<f64> = [2e-2, 1e-2, 5e-3]
            .iter()
            .map(|&dt| closed_form_error(model, "rk4-frozen-field", dt))
            .collect();
        for (k, pair) in errs.windows(2).enumerate() {
            let ratio = pair[0] / pair[1];
            gate.check(
                ratio >= RK4_RATIO_BAND.0 && ratio <= RK4_RATIO_BAND.1,
                format!(
                    "{model:?} rk4 halving {} ratio {ratio:.2} (want {}..{})",
                    k + 1,
                    RK4_RATIO_BAND.0,
                    RK4_RATIO_BAND.1
                ),
            );
        }
    }
    gate.finish();
}

#[test]
fn criterion_02_conservation_exact_and_convergent() {
    let mut gate = Gate::new(2, "mass/Casimir bitwise, energy drift");
    for (name, fx) in both() {
        let s = fx.summary();
        gate.check(s.mass.bitwise, format!("{name} mass bitwise"));
        gate.check(s.casimirs.bitwise, format!("{name} Casimirs bitwise"));
        gate.at_most(&format!("{name} energy drift"), s.energy.max_rel_drift, ENERGY_DRIFT_LIMIT);
    }
    let half = CLASSICAL_HALF_DT.summary();
    gate.check(half.mass.bitwise && half.casimirs.bitwise, "half-dt bitwise".into());
    let ratio = CLASSICAL.summary().energy.max_rel_drift / half.energy.max_rel_drift;
    gate.check(
        ratio >= ENERGY_HALVING_MIN,
        format!("drift shrinks {ratio:.2}x on dt halving (want >= {ENERGY_HALVING_MIN})"),
    );
    gate.finish();
}

#[test]
fn criterion_03_trajectory_inequalities_hold() {
    let mut gate = Gate::new(3, "per-trajectory inequality suite");
    let expected = ["min_radius_bound", "radius_lower_bound", "turning_time_bound", "w_monotone"];
    for (name, fx) in both() {
        let s = fx.summary();
        let mut names: Vec<&str> = s.inequalities.checks.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        gate.check(names == expected, format!("{name} checks {names:?}"));
        for c in &s.inequalities.checks {
            gate.check(
                c.violations == 0 && c.samples > 0,
                format!("{name} {} 0/{} violations", c.name, c.samples),
            );
        }
    }
    gate.finish();
}

#[test]
fn criterion_04_field_norm_decay_rates() {
    let mut gate = Gate::new(4, "field-norm decay and lower bound");
    for (name, fx) in both() {
        let s = fx.summary();
        for (col, band) in [("E_inf", E_INF_SLOPE), ("E_p2", E_P2_SLOPE), ("E_p3", E_P3_SLOPE)] {
            gate.fitted_slope(&format!("{name} {col} slope"), &s.fits[col], band);
        }
        let bound = s.field_lower_bound.expect("field bound block");
        gate.check(
            bound.violations == 0 && bound.checked == s.records,
            format!("{name} sup-field >= mass/R_sup^2 at {}/{} records", bound.checked, s.records),
        );
    }
    gate.finish();
}

#[test]
fn criterion_05_density_norm_decay_rates() {
    let mut gate = Gate::new(5, "density-norm decay and mass constancy");
    for (name, fx) in both() {
        let s = fx.summary();
        for (col, band) in [("rho_inf", RHO_INF_SLOPE), ("rho_q1_2", RHO_65_SLOPE)] {
            gate.fitted_slope(&format!("{name} {col} slope"), &s.fits[col], band);
        }
        let dm = s.density_mass.expect("density mass block");
        gate.at_most(&format!("{name} density 1-norm drift"), dm.max_rel_delta, RHO_MASS_TOL);
    }
    gate.finish();
}

#[test]
fn criterion_06_support_growth_saturates() {
    let mut gate = Gate::new(6, "linear radius support, bounded momentum support");
    for (name, fx) in both() {
        let s = fx.summary();
        let sup = s.support.expect("support block");
        gate.check(sup.window == [100.0, 200.0], format!("{name} window {:?}", sup.window));
        gate.at_most(&format!("{name} R_sup/t variation"), sup.r_over_t_variation, SUPPORT_TOL);
        gate.at_most(&format!("{name} W_sup excess"), sup.w_sup_excess, SUPPORT_TOL);
    }
    gate.finish();
}

#[test]
fn criterion_07_terminal_momentum_estimators_agree() {
    let mut gate = Gate::new(7, "terminal momenta: rate, cross-validation, positivity");
    for (name, fx) in both() {
        let a = fx.asymptotics();
        gate.check(
            (a.winf.rate_floor, a.winf.required_fraction) == (WINF_RATE_FLOOR, WINF_RATE_FRACTION),
            format!("{name} rate floor {} at fraction {}", a.winf.rate_floor, a.winf.required_fraction),
        );
        gate.check(
            a.winf.rate_window == [20.0, 200.0],
            format!("{name} rate window {:?}", a.winf.rate_window),
        );
        gate.check(
            a.winf.rate_pass_fraction >= WINF_RATE_FRACTION,
            format!("{name} rate-pass fraction {:.3}", a.winf.rate_pass_fraction),
        );
        gate.at_most(
            &format!("{name} estimator disagreement"),
            a.winf.max_rel_disagreement,
            WINF_AGREEMENT_TOL,
        );
        gate.check(a.winf.all_positive, format!("{name} all terminal momenta positive"));
    }
    gate.finish();
}

#[test]
fn criterion_08_radius_residual_stays_logarithmic() {
    let mut gate = Gate::new(8, "radius residual bounded by ln(1+t)");
    for (name, fx) in both() {
        let a = fx.asymptotics();
        gate.check(
            a.residuals.early_window == [20.0, 100.0] && a.residuals.late_window == [100.0, 200.0],
            format!("{name} windows {:?}/{:?}", a.residuals.early_window, a.residuals.late_window),
        );
        gate.at_most(&format!("{name} late/early ratio"), a.residuals.ratio, RESIDUAL_RATIO_LIMIT);
    }
    gate.finish();
}

#[test]
fn criterion_09_characteristic_sensitivity_is_stable() {
    let mut gate = Gate::new(9, "ghost-pair separation bounded, response above floor");
    for (name, fx) in both() {
        let a = fx.asymptotics();
        let sens = a.sensitivity.expect("sensitivity block");
        gate.check(sens.tau == 50.0, format!("{name} tau {}", sens.tau));
        gate.check(sens.separated_count == 0, format!("{name} no separated pairs"));
        gate.at_most(
            &format!("{name} |dW|/dw growth"),
            sens.max_growth.expect("growth ratio"),
            SENSITIVITY_GROWTH_LIMIT,
        );
        let dwinf = sens.min_dwinf.expect("response slope");
        gate.check(dwinf >= DWINF_MIN, format!("{name} min dW_inf/dw {dwinf:.3}"));
    }
    gate.finish();
}

#[test]
fn criterion_10_limit_profile_conserves_mass_casimirs_energy() {
    let mut gate = Gate::new(10, "limiting profile conservation identities");
    for (name, fx) in both() {
        let a = fx.asymptotics();
        gate.at_most(&format!("{name} mass identity"), a.finf.mass_rel_error, FINF_MASS_TOL);
        let mut cnames: Vec<&str> = a.finf.casimir_names.iter().map(String::as_str).collect();
        cnames.sort_unstable();
        gate.check(cnames == ["identity", "square"], format!("{name} Casimirs {cnames:?}"));
        for (cas, err) in a.finf.casimir_names.iter().zip(&a.finf.casimir_rel_errors) {
            gate.at_most(&format!("{name} {cas}-Casimir identity"), *err, FINF_CASIMIR_TOL);
        }
        gate.at_most(&format!("{name} energy identity"), a.finf.energy_rel_error, FINF_ENERGY_TOL);
    }
    let a = ANALYTIC.asymptotics();
    gate.check(a.finf.winf_exact, "analytic run uses closed-form momenta".into());
    let ids = a.finf.exact_identities.expect("shell-level identity block");
    gate.at_most("analytic mass identity", ids.mass_rel_error, ANALYTIC_IDENTITY_TOL);
    for err in &ids.casimir_rel_errors {
        gate.at_most("analytic Casimir identity", *err, ANALYTIC_IDENTITY_TOL);
    }
    gate.at_most("analytic energy identity", ids.energy_rel_error, ANALYTIC_IDENTITY_TOL);
    gate.finish();
}

#[test]
fn criterion_11_momentum_range_invariant_and_profile_converges() {
    let mut gate = Gate::new(11, "momentum-range invariance and profile convergence");
    for (name, fx) in both() {
        let a = fx.asymptotics();
        gate.check(
            (a.omega.t_a, a.omega.t_b) == (50.0, 150.0),
            format!("{name} anchors t = {}/{}", a.omega.t_a, a.omega.t_b),
        );
        gate.at_most(
            &format!("{name} momentum-range endpoint shift"),
            a.omega.max_rel_endpoint_diff,
            OMEGA_TOL,
        );
        gate.check(a.omega.ell_exact, format!("{name} angular-momentum range exact"));

        gate.check(a.fconv.fit_window == [50.0, 200.0], format!("{name} window {:?}", a.fconv.fit_window));
        gate.check(a.fconv.eventually_decreasing, format!("{name} sup-cell deviation decreasing"));
        let slope = a.fconv.slope.slope().expect("convergence slope");
        gate.check(
            slope <= FCONV_CEILING,
            format!("{name} convergence slope {slope:.3} (ceiling {FCONV_CEILING})"),
        );
    }
    gate.finish();
}
