//! Reduced phase-space coordinates for spherically symmetric kinetic systems.
//!
//! A spherically symmetric distribution is carried by three scalars per
//! particle: the radius `r = |x|`, the radial momentum `w = (x.v)/r`, and the
//! squared angular momentum `ell = |x cross v|^2`. The full momentum magnitude
//! is recovered through `|v|^2 = w^2 + ell / r^2`, and `ell` is conserved along
//! characteristics of both the classical and the relativistic system.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Which characteristic system the ensemble follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Classical,
    Relativistic,
}

/// A point in reduced coordinates `(r, w, ell)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialPoint {
    /// Radius, nonnegative.
    pub r: f64,
    /// Radial momentum. Negative values move inward.
    pub w: f64,
    /// Squared angular momentum, nonnegative.
    pub ell: f64,
}

impl RadialPoint {
    /// Validating constructor. Rejects negative radii, negative squared
    /// angular momentum, and non-finite components.
    pub fn new(r: f64, w: f64, ell: f64) -> Result<Self> {
        if !(r.is_finite() && w.is_finite() && ell.is_finite()) {
            return Err(CoreError::InvalidInput {
                what: "phase-space point",
                why: format!("non-finite components (r = {r}, w = {w}, ell = {ell})"),
            });
        }
        if r < 0.0 {
            return Err(CoreError::InvalidInput {
                what: "phase-space point",
                why: format!("negative radius {r}"),
            });
        }
        if ell < 0.0 {
            return Err(CoreError::InvalidInput {
                what: "phase-space point",
                why: format!("negative squared angular momentum {ell}"),
            });
        }
        Ok(Self { r, w, ell })
    }

    /// `|v|^2 = w^2 + ell / r^2`. Requires `r > 0`.
    pub fn speed_squared(&self) -> Result<f64> {
        if self.r <= 0.0 {
            return Err(CoreError::RadiusNotPositive {
                context: "speed_squared",
                r: self.r,
            });
        }
        Ok(self.w * self.w + self.ell / (self.r * self.r))
    }

    /// Lorentz factor `sqrt(1 + |v|^2)` of the relativistic model, where the
    /// momentum magnitude comes from the reduction identity. Requires `r > 0`.
    pub fn gamma(&self) -> Result<f64> {
        Ok((1.0 + self.speed_squared()?).sqrt())
    }
}

/// Reduce a full Cartesian state `(x, v)` to `(r, w, ell)`.
///
/// Fails at the spatial origin, where the radial direction is undefined.
pub fn cartesian_to_radial(x: [f64; 3], v: [f64; 3]) -> Result<RadialPoint> {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    if r2 == 0.0 {
        return Err(CoreError::OriginState);
    }
    let r = r2.sqrt();
    let w = (x[0] * v[0] + x[1] * v[1] + x[2] * v[2]) / r;
    let cx = x[1] * v[2] - x[2] * v[1];
    let cy = x[2] * v[0] - x[0] * v[2];
    let cz = x[0] * v[1] - x[1] * v[0];
    let ell = cx * cx + cy * cy + cz * cz;
    RadialPoint::new(r, w, ell)
}

/// One quadrature shell: a reduced point plus the mass it carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub state: RadialPoint,
    /// Shell mass. The geometric factor 4*pi^2 of the reduced measure is
    /// absorbed here, so weights sum to the total mass.
    pub weight: f64,
}

/// A weighted shell ensemble at a single time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub model: Model,
    pub time: f64,
    pub particles: Vec<Particle>,
}

impl Ensemble {
    pub fn new(model: Model, time: f64, particles: Vec<Particle>) -> Self {
        Self {
            model,
            time,
            particles,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}
