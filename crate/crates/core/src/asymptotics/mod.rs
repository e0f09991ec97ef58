//! Late-time structure: terminal momentum estimators, logarithmic radius
//! residuals, invariance of the terminal momentum range, limiting momentum
//! profiles on grids, and sensitivity of the flow to its initial data.

mod grid;
mod omega;
mod residual;
mod sensitivity;
mod winf;

pub use grid::{
    grid_conserved, limit_profile, profile_convergence, pushforward_conserved, spatial_average,
    ConservedSet, GridSpec, MomentumGrid, ProfileConvergence,
};
pub use omega::{omega_invariance, OmegaReport};
pub use residual::{spatial_asymptote_residual, ResidualSeries};
pub use sensitivity::{
    dwinf_dw_free_stream, free_stream_dr_dw, pair_dwinf, pair_sensitivity, SensitivitySeries,
};
pub use winf::{momentum_rate_check, winf_integral, winf_late, winf_late_all, RateCheck};
