//! Closed-form field-free flow exposed on the command line, for spot checks
//! and external cross-validation.

use anyhow::{bail, Context, Result};
use vlasov_core::dynamics::{free_stream_exact, free_stream_terminal_momentum};
use vlasov_core::{Model, RadialPoint};

pub fn parse_model(s: &str) -> Result<Model> {
    match s {
        "classical" => Ok(Model::Classical),
        "relativistic" => Ok(Model::Relativistic),
        other => bail!("unknown model {other:?}; expected \"classical\" or \"relativistic\""),
    }
}

/// Parse a comma-separated `r,w,ell` triple into a validated phase point.
pub fn parse_state(s: &str) -> Result<RadialPoint> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("state must be three comma-separated numbers r,w,ell; got {s:?}");
    }
    let mut vals = [0.0f64; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .parse()
            .with_context(|| format!("state component {p:?} is not a number"))?;
    }
    RadialPoint::new(vals[0], vals[1], vals[2]).context("state")
}

/// Evaluate the exact flow and format the answer line printed by the CLI.
pub fn free_stream_line(p: &RadialPoint, t: f64, model: Model) -> Result<String> {
    if !t.is_finite() || t < 0.0 {
        bail!("time must be finite and nonnegative, got {t}");
    }
    let s = free_stream_exact(p, t, model)?;
    let winf = free_stream_terminal_momentum(p)?;
    Ok(format!(
        "R={:.15}, W={:.15}, W_inf={:.15}",
        s.r, s.w, winf
    ))
}
