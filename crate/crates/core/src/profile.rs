//! Initial-data profiles and their deterministic quadrature.
//!
//! Profiles are compactly supported phase-space densities `f0(r, w, ell)` on a
//! box in reduced coordinates. Ensembles are built with a midpoint rule on a
//! tensor grid: one shell per node, weighted by `4 pi^2 f0 * dr * dw * dell`,
//! so the weights sum to the total mass of the profile. No randomness anywhere.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::phase::{Ensemble, Model, Particle, RadialPoint};

/// Quintic smoothstep: 0 at 0, 1 at 1, with vanishing first and second
/// derivatives at both ends.
fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    ((6.0 * u - 15.0) * u + 10.0) * u * u * u
}

/// One-dimensional bump on [0, 1]: rises from 0 to 1 at the midpoint and back,
/// continuously differentiable everywhere (the smoothstep derivative vanishes
/// at the matching points).
fn bump(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    smoothstep((2.0 * u).min(2.0 - 2.0 * u))
}

/// C^1 taper used on truncated Gaussians: identically 1 in the middle of
/// [0, 1], easing to 0 over the outer `edge` fraction at each end.
fn taper(u: f64, edge: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    if u < edge {
        smoothstep(u / edge)
    } else if u > 1.0 - edge {
        smoothstep((1.0 - u) / edge)
    } else {
        1.0
    }
}

/// Fraction of each support interval a truncated Gaussian eases over.
const GAUSSIAN_TAPER_EDGE: f64 = 0.1;

/// How many standard deviations the Gaussian support box extends from center.
const GAUSSIAN_SUPPORT_SIGMAS: f64 = 3.0;

/// Axis-aligned support box in `(r, w, ell)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub r: [f64; 2],
    pub w: [f64; 2],
    pub ell: [f64; 2],
}

/// Compactly supported initial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    /// Product of one-dimensional quintic bumps on a box; value `amplitude`
    /// at the box center, zero on the boundary, C^1 throughout.
    SmoothBox {
        r: [f64; 2],
        w: [f64; 2],
        ell: [f64; 2],
        amplitude: f64,
    },
    /// Gaussian centered at `center = (r0, w0, ell0)` with per-axis widths
    /// `sigma`, truncated at three standard deviations and multiplied by a
    /// C^1 taper over the outer tenth of each support interval.
    ShellGaussian {
        center: [f64; 3],
        sigma: [f64; 3],
        amplitude: f64,
    },
}

impl Profile {
    /// The support box. For Gaussians this is the truncation box.
    pub fn support(&self) -> SupportBox {
        match self {
            Profile::SmoothBox { r, w, ell, .. } => SupportBox {
                r: *r,
                w: *w,
                ell: *ell,
            },
            Profile::ShellGaussian { center, sigma, .. } => {
                let half = |c: f64, s: f64| {
                    [
                        c - GAUSSIAN_SUPPORT_SIGMAS * s,
                        c + GAUSSIAN_SUPPORT_SIGMAS * s,
                    ]
                };
                SupportBox {
                    r: half(center[0], sigma[0]),
                    w: half(center[1], sigma[1]),
                    ell: half(center[2], sigma[2]),
                }
            }
        }
    }

    /// Check the support box is admissible: positive radii, nonnegative
    /// squared angular momentum, positive extents and amplitude.
    pub fn validate(&self) -> Result<()> {
        let amplitude = match self {
            Profile::SmoothBox { amplitude, .. } => *amplitude,
            Profile::ShellGaussian {
                amplitude, sigma, ..
            } => {
                if sigma.iter().any(|s| !(*s > 0.0)) {
                    return Err(CoreError::InvalidInput {
                        what: "profile",
                        why: format!("Gaussian widths must be positive, got {sigma:?}"),
                    });
                }
                *amplitude
            }
        };
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(CoreError::InvalidInput {
                what: "profile",
                why: format!("amplitude must be positive and finite, got {amplitude}"),
            });
        }
        let b = self.support();
        for (name, [lo, hi]) in [("r", b.r), ("w", b.w), ("ell", b.ell)] {
            if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
                return Err(CoreError::InvalidInput {
                    what: "profile",
                    why: format!("{name} interval [{lo}, {hi}] must be finite with hi > lo"),
                });
            }
        }
        if !(b.r[0] > 0.0) {
            return Err(CoreError::InvalidInput {
                what: "profile",
                why: format!("radial support must start above zero, got r_lo = {}", b.r[0]),
            });
        }
        if b.ell[0] < 0.0 {
            return Err(CoreError::InvalidInput {
                what: "profile",
                why: format!(
                    "squared angular momentum support must be nonnegative, got ell_lo = {}",
                    b.ell[0]
                ),
            });
        }
        Ok(())
    }

    /// Evaluate `f0` at a reduced point. Zero outside the support box.
    pub fn eval(&self, p: &RadialPoint) -> f64 {
        match self {
            Profile::SmoothBox {
                r,
                w,
                ell,
                amplitude,
            } => {
                let frac = |x: f64, [lo, hi]: [f64; 2]| (x - lo) / (hi - lo);
                amplitude
                    * bump(frac(p.r, *r))
                    * bump(frac(p.w, *w))
                    * bump(frac(p.ell, *ell))
            }
            Profile::ShellGaussian {
                center,
                sigma,
                amplitude,
            } => {
                let xs = [p.r, p.w, p.ell];
                let mut value = *amplitude;
                for i in 0..3 {
                    let z = (xs[i] - center[i]) / sigma[i];
                    let u = (z + GAUSSIAN_SUPPORT_SIGMAS) / (2.0 * GAUSSIAN_SUPPORT_SIGMAS);
                    value *= (-z * z).exp() * taper(u, GAUSSIAN_TAPER_EDGE);
                }
                value
            }
        }
    }
}

/// Node counts of the tensor midpoint rule, one per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n_r: usize,
    pub n_w: usize,
    pub n_ell: usize,
}

impl QuadratureSpec {
    pub fn new(n_r: usize, n_w: usize, n_ell: usize) -> Result<Self> {
        if n_r == 0 || n_w == 0 || n_ell == 0 {
            return Err(CoreError::InvalidInput {
                what: "quadrature",
                why: format!("node counts must be positive, got ({n_r}, {n_w}, {n_ell})"),
            });
        }
        Ok(Self { n_r, n_w, n_ell })
    }

    pub fn nodes(&self) -> usize {
        self.n_r * self.n_w * self.n_ell
    }
}

/// Discretize a profile into a shell ensemble with the midpoint rule.
///
/// Nodes run r-major, then w, then ell, which fixes the particle order for
/// every downstream deterministic reduction. Nodes where the profile vanishes
/// are dropped; an ensemble that loses every node is an error.
pub fn build_ensemble(profile: &Profile, quad: &QuadratureSpec, model: Model) -> Result<Ensemble> {
    profile.validate()?;
    let b = profile.support();
    let dr = (b.r[1] - b.r[0]) / quad.n_r as f64;
    let dw = (b.w[1] - b.w[0]) / quad.n_w as f64;
    let dell = (b.ell[1] - b.ell[0]) / quad.n_ell as f64;
    let cell = 4.0 * std::f64::consts::PI * std::f64::consts::PI * dr * dw * dell;

    let mut particles = Vec::with_capacity(quad.nodes());
    for i in 0..quad.n_r {
        let r = b.r[0] + (i as f64 + 0.5) * dr;
        for j in 0..quad.n_w {
            let w = b.w[0] + (j as f64 + 0.5) * dw;
            for k in 0..quad.n_ell {
                let ell = b.ell[0] + (k as f64 + 0.5) * dell;
                let state = RadialPoint { r, w, ell };
                let weight = cell * profile.eval(&state);
                if weight > 0.0 {
                    particles.push(Particle { state, weight });
                }
            }
        }
    }
    if particles.is_empty() {
        return Err(CoreError::EmptyEnsemble);
    }
    Ok(Ensemble::new(model, 0.0, particles))
}

/// Whether the discretized support stays away from zero angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularMomentumFloor {
    pub satisfied: bool,
    pub ell_min: f64,
}

/// Report the smallest squared angular momentum in the ensemble. The
/// asymptotic estimators rely on this floor being positive.
pub fn check_condition_a(e: &Ensemble) -> Result<AngularMomentumFloor> {
    if e.is_empty() {
        return Err(CoreError::EmptyEnsemble);
    }
    let ell_min = e
        .particles
        .iter()
        .map(|p| p.state.ell)
        .fold(f64::INFINITY, f64::min);
    Ok(AngularMomentumFloor {
        satisfied: ell_min > 0.0,
        ell_min,
    })
}
