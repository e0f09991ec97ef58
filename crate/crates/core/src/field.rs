//! Radial field table, exact field norms, and binned density profiles.
//!
//! In spherical symmetry the field at radius r is determined by the enclosed
//! mass alone: |E(r)| = m(r) / r^2. For a shell ensemble m is a step function,
//! constant between shell radii, which makes every L^p norm of the field an
//! exact piecewise integral rather than a quadrature.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{CoreError, Result};
use crate::phase::Ensemble;

/// Norm order: a finite exponent or the sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Inf,
}

impl Exponent {
    /// Interpret a raw float; infinity maps to the sup norm.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_nan() {
            return Err(CoreError::InvalidInput {
                what: "norm exponent",
                why: "NaN exponent".into(),
            });
        }
        if x.is_infinite() {
            if x < 0.0 {
                return Err(CoreError::InvalidInput {
                    what: "norm exponent",
                    why: "negative infinity exponent".into(),
                });
            }
            Ok(Exponent::Inf)
        } else {
            Ok(Exponent::Finite(x))
        }
    }

    /// Short label for report columns: "2", "1_2" (for 1.2), "inf".
    pub fn column_tag(&self) -> String {
        match self {
            Exponent::Inf => "inf".to_string(),
            Exponent::Finite(p) => format!("{p}").replace('.', "_"),
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Inf => write!(f, "inf"),
            Exponent::Finite(p) => write!(f, "{p}"),
        }
    }
}

/// Sorted cumulative-mass table over the shell radii of one ensemble.
///
/// `radii` is strictly increasing; shells at bitwise-equal radii are merged.
/// `mass_below[i]` is the weight strictly inside `radii[i]`, `mass_at[i]` the
/// weight sitting exactly on it. A shell feels half of the mass at its own
/// radius, the standard symmetric-limit convention for a step field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTable {
    pub radii: Vec<f64>,
    pub mass_below: Vec<f64>,
    pub mass_at: Vec<f64>,
    /// Total mass as accumulated over the sorted table.
    pub total_mass: f64,
}

/// Build the table with a fresh radial ordering.
pub fn build_field_table(e: &Ensemble) -> Result<FieldTable> {
    let mut order = Vec::new();
    build_field_table_ordered(e, &mut order)
}

/// Build the table reusing a previous radial ordering.
///
/// Shell order changes little between adjacent steps, so seeding the sort with
/// the previous permutation keeps it near its best case. The sort key breaks
/// radius ties by particle index, which makes the result independent of the
/// seed permutation and therefore deterministic.
pub fn build_field_table_ordered(e: &Ensemble, order: &mut Vec<u32>) -> Result<FieldTable> {
    let n = e.len();
    if n == 0 {
        return Err(CoreError::EmptyEnsemble);
    }
    if order.len() != n {
        order.clear();
        order.extend(0..n as u32);
    }
    let particles = &e.particles;
    let mut keyed: Vec<(f64, u32)> = order
        .iter()
        .map(|&i| (particles[i as usize].state.r, i))
        .collect();
    keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (slot, &(_, i)) in order.iter_mut().zip(keyed.iter()) {
        *slot = i;
    }

    let mut radii = Vec::with_capacity(n);
    let mut mass_below = Vec::with_capacity(n);
    let mut mass_at = Vec::with_capacity(n);
    let mut below = 0.0f64;
    let mut idx = 0;
    while idx < n {
        let r = keyed[idx].0;
        let mut at = 0.0f64;
        while idx < n && keyed[idx].0 == r {
            at += particles[keyed[idx].1 as usize].weight;
            idx += 1;
        }
        radii.push(r);
        mass_below.push(below);
        mass_at.push(at);
        below += at;
    }
    Ok(FieldTable {
        radii,
        mass_below,
        mass_at,
        total_mass: below,
    })
}

impl FieldTable {
    fn shells(&self) -> usize {
        self.radii.len()
    }

    /// Mass including shell `i` and everything inside it.
    #[inline]
    fn mass_through(&self, i: usize) -> f64 {
        self.mass_below[i] + self.mass_at[i]
    }

    /// First table index whose radius is >= `r`, galloping outward from a
    /// starting guess. Equivalent to `radii.partition_point(|x| x < r)` but
    /// close to O(1) when the guess is near the answer.
    #[inline]
    pub(crate) fn first_at_or_above_from(&self, r: f64, start: usize) -> usize {
        let radii = &self.radii;
        let n = radii.len();
        if n == 0 {
            return 0;
        }
        let s = start.min(n - 1);
        let (mut a, mut b);
        if radii[s] < r {
            // Answer is right of s: bracket with doubling probes.
            a = s + 1;
            b = n;
            let mut step = 1usize;
            while a + step <= n {
                let probe = a + step - 1;
                if radii[probe] < r {
                    a = probe + 1;
                    step <<= 1;
                } else {
                    b = probe;
                    break;
                }
            }
        } else {
            // Answer is at or left of s.
            a = 0;
            b = s;
            let mut step = 1usize;
            while b >= step {
                let probe = b - step;
                if radii[probe] >= r {
                    b = probe;
                    step <<= 1;
                } else {
                    a = probe + 1;
                    break;
                }
            }
        }
        a + self.radii[a..b].partition_point(|&x| x < r)
    }

    /// Enclosed mass `m(r)`: everything strictly inside `r` plus half of any
    /// mass sitting exactly at `r`.
    pub fn enclosed_mass(&self, r: f64) -> f64 {
        let mut hint = 0u32;
        self.enclosed_mass_hinted(r, &mut hint)
    }

    /// `enclosed_mass` with a persistent search hint for tight loops.
    #[inline]
    pub fn enclosed_mass_hinted(&self, r: f64, hint: &mut u32) -> f64 {
        let i = self.first_at_or_above_from(r, *hint as usize);
        *hint = i as u32;
        let below = if i == 0 { 0.0 } else { self.mass_through(i - 1) };
        if i < self.shells() && self.radii[i] == r {
            below + 0.5 * self.mass_at[i]
        } else {
            below
        }
    }

    /// Field magnitude `m(r) / r^2`. Requires `r > 0`.
    pub fn field_magnitude(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(CoreError::RadiusNotPositive {
                context: "field_magnitude",
                r,
            });
        }
        Ok(self.enclosed_mass(r) / (r * r))
    }

    /// Exact L^p norm of the field over all of space.
    ///
    /// Between consecutive shell radii the enclosed mass is constant, so
    /// `int |E|^p dx = 4 pi sum_i m_i^p (r_i^(3-2p) - r_(i+1)^(3-2p)) / (2p-3)`
    /// with the last segment running to infinity. The integral converges at
    /// infinity only for `p > 3/2`; smaller exponents are rejected. The sup
    /// norm is attained at the inner edge of some segment.
    pub fn field_lp_norm(&self, p: Exponent) -> Result<f64> {
        match p {
            Exponent::Inf => {
                let mut sup = 0.0f64;
                for i in 0..self.shells() {
                    let m = self.mass_through(i);
                    let candidate = m / (self.radii[i] * self.radii[i]);
                    if candidate > sup {
                        sup = candidate;
                    }
                }
                Ok(sup)
            }
            Exponent::Finite(p) => {
                if !(p > 1.5) {
                    return Err(CoreError::FieldNormExponent { p });
                }
                let a = 3.0 - 2.0 * p;
                let mut sum = 0.0f64;
                for i in 0..self.shells() {
                    let m = self.mass_through(i);
                    if m == 0.0 {
                        continue;
                    }
                    let lo = self.radii[i].powf(a);
                    let hi = if i + 1 < self.shells() {
                        self.radii[i + 1].powf(a)
                    } else {
                        0.0
                    };
                    sum += m.powf(p) * (lo - hi);
                }
                Ok((4.0 * PI * sum / (2.0 * p - 3.0)).powf(1.0 / p))
            }
        }
    }

    /// Exact interaction energy `1/2 int m(r)^2 / r^2 dr`, piecewise like the
    /// field norms.
    ///
    /// The coefficient is fixed by the force convention: differentiating this
    /// sum with respect to a shell radius gives back exactly the half-weight
    /// force `-(mass_below + mass_at/2)/r^2` per unit weight, so kinetic plus
    /// potential energy is an invariant of the self-consistent flow.
    pub fn potential_energy(&self) -> f64 {
        let mut sum = 0.0f64;
        for i in 0..self.shells() {
            let m = self.mass_through(i);
            if m == 0.0 {
                continue;
            }
            let lo = 1.0 / self.radii[i];
            let hi = if i + 1 < self.shells() {
                1.0 / self.radii[i + 1]
            } else {
                0.0
            };
            sum += m * m * (lo - hi);
        }
        0.5 * sum
    }
}

/// Uniform radial bin layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl BinSpec {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) || lo < 0.0 {
            return Err(CoreError::InvalidInput {
                what: "bin spec",
                why: format!("need finite 0 <= lo < hi, got [{lo}, {hi}]"),
            });
        }
        if count == 0 {
            return Err(CoreError::InvalidInput {
                what: "bin spec",
                why: "bin count must be positive".into(),
            });
        }
        Ok(Self { lo, hi, count })
    }

    /// Bin layout covering the ensemble's current radial support. `count = 0`
    /// selects the cube-root rule `ceil(N^(1/3))`, which keeps per-bin shell
    /// counts roughly constant as the quadrature refines.
    pub fn covering(e: &Ensemble, count: usize) -> Result<Self> {
        if e.is_empty() {
            return Err(CoreError::EmptyEnsemble);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &e.particles {
            lo = lo.min(p.state.r);
            hi = hi.max(p.state.r);
        }
        if hi == lo {
            // A single occupied radius still needs a window of positive width.
            lo = (lo - 0.5).max(0.0);
            hi += 0.5;
        }
        let count = if count == 0 {
            (e.len() as f64).cbrt().ceil() as usize
        } else {
            count
        };
        Self::new(lo, hi, count.max(1))
    }
}

/// Piecewise-constant radial mass density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    /// `count + 1` bin edges.
    pub edges: Vec<f64>,
    /// Mass per bin.
    pub bin_mass: Vec<f64>,
    /// Mass per bin divided by the shell volume between its edges.
    pub density: Vec<f64>,
    /// Sum of binned weights in particle order.
    pub total_mass: f64,
}

/// Bin the ensemble into radial shells and estimate the density in each.
/// Every particle must land inside the bin range.
pub fn density_profile(e: &Ensemble, bins: &BinSpec) -> Result<DensityProfile> {
    let width = (bins.hi - bins.lo) / bins.count as f64;
    let mut bin_mass = vec![0.0f64; bins.count];
    let mut total_mass = 0.0f64;
    for (index, p) in e.particles.iter().enumerate() {
        let r = p.state.r;
        if r < bins.lo || r > bins.hi {
            return Err(CoreError::ParticleOutsideBins {
                index,
                r,
                lo: bins.lo,
                hi: bins.hi,
            });
        }
        let i = (((r - bins.lo) / width) as usize).min(bins.count - 1);
        bin_mass[i] += p.weight;
        total_mass += p.weight;
    }
    let edges: Vec<f64> = (0..=bins.count)
        .map(|i| bins.lo + i as f64 * width)
        .collect();
    let density = bin_mass
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let volume = 4.0 * PI / 3.0 * (edges[i + 1].powi(3) - edges[i].powi(3));
            m / volume
        })
        .collect();
    Ok(DensityProfile {
        edges,
        bin_mass,
        density,
        total_mass,
    })
}

/// L^q norm of the binned density over space.
///
/// `q = 1` returns the binned mass itself, with no floating-point detour
/// through volumes, so it reproduces the ensemble mass exactly.
pub fn density_lq_norm(d: &DensityProfile, q: Exponent) -> Result<f64> {
    match q {
        Exponent::Inf => Ok(d.density.iter().fold(0.0f64, |a, &x| a.max(x))),
        Exponent::Finite(q) => {
            if q < 1.0 {
                return Err(CoreError::DensityNormExponent { q });
            }
            if q == 1.0 {
                return Ok(d.total_mass);
            }
            let mut sum = 0.0f64;
            for i in 0..d.density.len() {
                let rho = d.density[i];
                if rho == 0.0 {
                    continue;
                }
                let volume = 4.0 * PI / 3.0 * (d.edges[i + 1].powi(3) - d.edges[i].powi(3));
                sum += rho.powf(q) * volume;
            }
            Ok(sum.powf(1.0 / q))
        }
    }
}
