//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong while building ensembles, evaluating fields,
/// stepping characteristics, or running the asymptotic estimators.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// A phase-space operation needed a strictly positive radius.
    #[error("{context}: radius {r} is not positive")]
    RadiusNotPositive { context: &'static str, r: f64 },

    /// Reduction of Cartesian coordinates is undefined at the spatial origin.
    #[error("cannot reduce Cartesian state at the spatial origin (|x| = 0)")]
    OriginState,

    /// A constructor or configuration value failed validation.
    #[error("invalid {what}: {why}")]
    InvalidInput { what: &'static str, why: String },

    /// Field norm exponents at or below 3/2 make the radial integral diverge
    /// at infinity for compactly supported mass.
    #[error("p must exceed 3/2 for the field norm integral to converge (got p = {p})")]
    FieldNormExponent { p: f64 },

    /// Density norms are defined for q >= 1 only.
    #[error("density norm requires q >= 1 (got q = {q})")]
    DensityNormExponent { q: f64 },

    /// No particles with positive weight survived ensemble construction.
    #[error("ensemble is empty: no nodes with positive weight")]
    EmptyEnsemble,

    /// A particle fell outside the radial bin range it was to be counted in.
    #[error("particle {index} at r = {r} lies outside the bin range [{lo}, {hi}]")]
    ParticleOutsideBins {
        index: usize,
        r: f64,
        lo: f64,
        hi: f64,
    },

    /// A particle fell outside the momentum grid it was to be counted in.
    #[error("particle {index} at (w, ell) = ({w}, {ell}) lies outside the momentum grid")]
    ParticleOutsideGrid { index: usize, w: f64, ell: f64 },

    /// A characteristic reached the origin; the reduced equations break down.
    #[error("step aborted at t = {t}: particle {index} reached r = {r} (must stay positive)")]
    StepAborted { t: f64, index: usize, r: f64 },

    /// A log-log fit had too few usable samples in its window.
    #[error("fit window [{lo}, {hi}] holds {found} usable samples, need at least {need}")]
    FitWindowTooSparse {
        lo: f64,
        hi: f64,
        found: usize,
        need: usize,
    },

    /// A log-log fit met a nonpositive value inside its window.
    #[error("fit window [{lo}, {hi}] contains a nonpositive value at t = {t}")]
    FitValueNotPositive { lo: f64, hi: f64, t: f64 },

    /// A trajectory was too short for the requested tail estimate.
    #[error("trajectory spans {span} time units, below the required minimum {min}")]
    TrajectoryTooShort { span: f64, min: f64 },

    /// The outgoing-limit estimators need a positive terminal radial momentum.
    #[error("terminal radial momentum W = {w} is not positive; outgoing-limit estimators do not apply")]
    TerminalMomentumNotPositive { w: f64 },

    /// The relativistic limit estimate produced an energy factor below one.
    #[error("relativistic limit estimate gave gamma = {gamma} < 1")]
    GammaBelowOne { gamma: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
