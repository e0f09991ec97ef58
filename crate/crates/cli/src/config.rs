//! Run configuration: TOML parsing, validation, defaulting, and emission.
//!
//! `parse_config` returns a fully resolved configuration — every optional
//! field filled with its default — so emitting it and parsing the emission
//! is idempotent. Unknown keys anywhere are rejected.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vlasov_core::diagnostics::{CasimirFn, DiagnosticSpec};
use vlasov_core::dynamics::{FieldCoupling, IntegratorKind, StepConfig};
use vlasov_core::field::Exponent;
use vlasov_core::profile::{Profile, QuadratureSpec};
use vlasov_core::runner::GhostSpec;
use vlasov_core::Model;

/// Complete, resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub profile: ProfileSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    pub step: StepSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Initial profile parameters; `kind` selects which of the optional blocks
/// must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<[f64; 3]>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub n_r: usize,
    pub n_w: usize,
    pub n_ell: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            n_r: 32,
            n_w: 16,
            n_ell: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_integrator")]
    pub integrator: IntegratorKind,
    #[serde(default = "default_field")]
    pub field: FieldCoupling,
}

fn default_dt() -> f64 {
    5e-3
}
fn default_record_every() -> usize {
    100
}
fn default_integrator() -> IntegratorKind {
    IntegratorKind::KdkLeapfrog
}
fn default_field() -> FieldCoupling {
    FieldCoupling::SelfConsistent
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Field norm orders; `inf` is accepted.
    #[serde(default = "default_field_norms")]
    pub field_norms: Vec<f64>,
    /// Density norm orders; `inf` is accepted.
    #[serde(default = "default_density_norms")]
    pub density_norms: Vec<f64>,
    /// Conserved functionals of the angular momentum: `identity`, `square`,
    /// or `indicator[a,b]`.
    #[serde(default = "default_casimirs")]
    pub casimirs: Vec<String>,
    /// Radial bins for the density profile; 0 selects the cube-root rule.
    #[serde(default)]
    pub density_bins: usize,
    /// Log-log fit window for the norm decay rates; defaults to the final
    /// time decade `[t_end/10, t_end]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    /// Number of shells whose full histories are recorded.
    #[serde(default = "default_tracked")]
    pub tracked: usize,
}

fn default_field_norms() -> Vec<f64> {
    vec![2.0, 3.0, f64::INFINITY]
}
fn default_density_norms() -> Vec<f64> {
    vec![1.0, 1.2, 2.0, f64::INFINITY]
}
fn default_casimirs() -> Vec<String> {
    vec!["identity".into(), "square".into()]
}
fn default_tracked() -> usize {
    64
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            field_norms: default_field_norms(),
            density_norms: default_density_norms(),
            casimirs: default_casimirs(),
            density_bins: 0,
            fit_window: None,
            tracked: default_tracked(),
        }
    }
}

/// Ghost-pair probe of the flow's sensitivity to the launch momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    /// Launch time; defaults to `t_end/4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "default_delta_w")]
    pub delta_w: f64,
}

fn default_delta_w() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Parse a named conserved functional of the angular momentum.
pub fn parse_casimir(name: &str) -> Result<CasimirFn> {
    match name {
        "identity" => Ok(CasimirFn::Identity),
        "square" => Ok(CasimirFn::Square),
        _ => {
            let inner = name
                .strip_prefix("indicator[")
                .and_then(|s| s.strip_suffix(']'))
                .with_context(|| {
                    format!(
                        "unknown casimir {name:?}; expected identity, square, or indicator[a,b]"
                    )
                })?;
            let (a, b) = inner
                .split_once(',')
                .with_context(|| format!("casimir {name:?} needs two comma-separated bounds"))?;
            let lo: f64 = a.trim().parse().with_context(|| format!("casimir {name:?}"))?;
            let hi: f64 = b.trim().parse().with_context(|| format!("casimir {name:?}"))?;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                bail!("casimir {name:?} needs finite bounds with a < b");
            }
            Ok(CasimirFn::Indicator { lo, hi })
        }
    }
}

/// The configuration-file spelling of a conserved functional.
pub fn casimir_config_name(c: &CasimirFn) -> String {
    match c {
        CasimirFn::Identity => "identity".into(),
        CasimirFn::Square => "square".into(),
        CasimirFn::Indicator { lo, hi } => format!("indicator[{lo},{hi}]"),
    }
}

impl RunConfig {
    /// The initial profile in its validated form.
    pub fn profile(&self) -> Result<Profile> {
        let s = &self.profile;
        let profile = match s.kind.as_str() {
            "smooth-box" => {
                if s.center.is_some() || s.sigma.is_some() {
                    bail!("profile: smooth-box takes r/w/ell bounds, not center/sigma");
                }
                Profile::SmoothBox {
                    r: s.r.context("profile.r: required for smooth-box")?,
                    w: s.w.context("profile.w: required for smooth-box")?,
                    ell: s.ell.context("profile.ell: required for smooth-box")?,
                    amplitude: s.amplitude,
                }
            }
            "shell-gaussian" => {
                if s.r.is_some() || s.w.is_some() || s.ell.is_some() {
                    bail!("profile: shell-gaussian takes center/sigma, not r/w/ell bounds");
                }
                Profile::ShellGaussian {
                    center: s.center.context("profile.center: required for shell-gaussian")?,
                    sigma: s.sigma.context("profile.sigma: required for shell-gaussian")?,
                    amplitude: s.amplitude,
                }
            }
            other => bail!("profile.kind: unknown kind {other:?}"),
        };
        profile.validate().context("profile")?;
        Ok(profile)
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        QuadratureSpec::new(
            self.quadrature.n_r,
            self.quadrature.n_w,
            self.quadrature.n_ell,
        )
        .context("quadrature")
    }

    pub fn step(&self) -> Result<StepConfig> {
        let cfg = StepConfig {
            dt: self.step.dt,
            t_end: self.step.t_end,
            record_every: self.step.record_every,
            integrator: self.step.integrator,
            field: self.step.field,
        };
        cfg.validate().context("step")?;
        Ok(cfg)
    }

    /// Diagnostic measurement plan derived from the `[diagnostics]` section.
    pub fn diagnostic_spec(&self) -> Result<DiagnosticSpec> {
        let map = |xs: &[f64], what: &str| -> Result<Vec<Exponent>> {
            xs.iter()
                .map(|&x| Exponent::from_f64(x).with_context(|| format!("diagnostics.{what}")))
                .collect()
        };
        let spec = DiagnosticSpec {
            e_exponents: map(&self.diagnostics.field_norms, "field_norms")?,
            rho_exponents: map(&self.diagnostics.density_norms, "density_norms")?,
            casimirs: self
                .diagnostics
                .casimirs
                .iter()
                .map(|s| parse_casimir(s).context("diagnostics.casimirs"))
                .collect::<Result<_>>()?,
            density_bins: self.diagnostics.density_bins,
        };
        spec.validate().context("diagnostics")?;
        Ok(spec)
    }

    /// Fit window; present after resolution except for zero-length runs,
    /// which have nothing to fit.
    pub fn fit_window(&self) -> Option<[f64; 2]> {
        self.diagnostics.fit_window.or_else(|| {
            (self.step.t_end > 0.0).then(|| [self.step.t_end / 10.0, self.step.t_end])
        })
    }

    /// Ghost probe launch derived from the `[sensitivity]` section.
    pub fn ghost_spec(&self) -> Option<GhostSpec> {
        self.sensitivity.map(|s| GhostSpec {
            tau: s.tau.unwrap_or(self.step.t_end / 4.0),
            delta_w: s.delta_w,
        })
    }

    /// Fill every defaulted field with its concrete value and validate the
    /// whole configuration.
    pub fn resolve(&mut self) -> Result<()> {
        self.profile()?;
        self.quadrature()?;
        self.step()?;
        self.diagnostic_spec()?;

        let t_end = self.step.t_end;
        if let Some(window) = self.fit_window() {
            if !(window[0] < window[1]) {
                bail!(
                    "diagnostics.fit_window: need lower < upper, got [{}, {}]",
                    window[0],
                    window[1]
                );
            }
            if window[0] < 0.0 || window[1] > t_end {
                bail!(
                    "diagnostics.fit_window: [{}, {}] not contained in [0, {t_end}]",
                    window[0],
                    window[1]
                );
            }
            self.diagnostics.fit_window = Some(window);
        }

        if let Some(s) = &mut self.sensitivity {
            let tau = s.tau.unwrap_or(t_end / 4.0);
            if !(0.0..=t_end).contains(&tau) {
                bail!("sensitivity.tau: {tau} outside [0, {t_end}]");
            }
            if !s.delta_w.is_finite() || s.delta_w == 0.0 {
                bail!("sensitivity.delta_w: must be finite and nonzero");
            }
            s.tau = Some(tau);
            if self.diagnostics.tracked == 0 {
                bail!("sensitivity: ghost probes need diagnostics.tracked > 0");
            }
        }
        if self.output.dir.is_empty() {
            bail!("output.dir: must not be empty");
        }
        Ok(())
    }
}

/// Parse, validate, and resolve a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(text).context("configuration syntax")?;
    cfg.resolve()?;
    Ok(cfg)
}

/// Emit the resolved configuration; `parse_config(emit_config(c))` returns
/// `c` unchanged.
pub fn emit_config(cfg: &RunConfig) -> Result<String> {
    Ok(toml::to_string_pretty(cfg)?)
}
