//! Momentum-space profiles on fixed grids.
//!
//! As a solution disperses, the spatially averaged distribution of (radial
//! momentum, angular momentum) settles onto a limiting profile, which is the
//! pushforward of the initial data under the map to terminal momenta. Both
//! objects are represented here as mass histograms on a common grid, which
//! makes "the profile converges" and "the limit conserves mass, Casimirs,
//! and energy" checkable statements.

use std::f64::consts::PI;

use crate::diagnostics::CasimirFn;
use crate::error::{CoreError, Result};
use crate::phase::{Ensemble, Model};

/// A rectangular grid over (momentum `u`, angular momentum `ell`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_u: usize,
    pub n_ell: usize,
    pub u_range: (f64, f64),
    pub ell_range: (f64, f64),
}

impl GridSpec {
    pub fn new(
        n_u: usize,
        n_ell: usize,
        u_range: (f64, f64),
        ell_range: (f64, f64),
    ) -> Result<Self> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && hi > lo;
        if n_u == 0 || n_ell == 0 || !ok(u_range) || !ok(ell_range) {
            return Err(CoreError::InvalidInput {
                what: "momentum grid",
                why: format!(
                    "need positive cell counts and increasing finite ranges, got \
                     {n_u} x {n_ell} over {u_range:?} x {ell_range:?}"
                ),
            });
        }
        Ok(Self {
            n_u,
            n_ell,
            u_range,
            ell_range,
        })
    }

    /// Grid that covers every listed value, with a small relative pad so
    /// boundary values bin cleanly. Degenerate ranges are widened.
    pub fn covering(us: &[f64], ells: &[f64], n_u: usize, n_ell: usize) -> Result<Self> {
        fn padded(values: &[f64]) -> Result<(f64, f64)> {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in values {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !lo.is_finite() || !hi.is_finite() {
                return Err(CoreError::InvalidInput {
                    what: "momentum grid",
                    why: "cannot cover an empty or non-finite value list".into(),
                });
            }
            let span = hi - lo;
            let pad = if span > 0.0 {
                1e-9 * span
            } else {
                0.5 * lo.abs().max(1.0)
            };
            Ok((lo - pad, hi + pad))
        }
        Self::new(n_u, n_ell, padded(us)?, padded(ells)?)
    }

    pub fn cell_sizes(&self) -> (f64, f64) {
        (
            (self.u_range.1 - self.u_range.0) / self.n_u as f64,
            (self.ell_range.1 - self.ell_range.0) / self.n_ell as f64,
        )
    }

    pub fn u_center(&self, i: usize) -> f64 {
        let (du, _) = self.cell_sizes();
        self.u_range.0 + (i as f64 + 0.5) * du
    }

    pub fn ell_center(&self, j: usize) -> f64 {
        let (_, dl) = self.cell_sizes();
        self.ell_range.0 + (j as f64 + 0.5) * dl
    }

    fn locate(&self, u: f64, ell: f64) -> Option<usize> {
        if u < self.u_range.0 || u > self.u_range.1 || ell < self.ell_range.0
            || ell > self.ell_range.1
        {
            return None;
        }
        let (du, dl) = self.cell_sizes();
        let i = (((u - self.u_range.0) / du) as usize).min(self.n_u - 1);
        let j = (((ell - self.ell_range.0) / dl) as usize).min(self.n_ell - 1);
        Some(i * self.n_ell + j)
    }
}

/// Mass histogram over a [`GridSpec`], in `u`-major cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub spec: GridSpec,
    pub cell_mass: Vec<f64>,
    /// Sum of the binned weights in their original order; bitwise equal to
    /// the ensemble mass, unlike a sum over cells.
    pub total_mass: f64,
}

impl MomentumGrid {
    /// Average profile value over cell `(i, j)`: the cell mass divided by
    /// the reduced-measure cell volume `4 pi^2 du dl`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let (du, dl) = self.cell_sizes();
        self.cell_mass[i * self.spec.n_ell + j] / (4.0 * PI * PI * du * dl)
    }

    fn cell_sizes(&self) -> (f64, f64) {
        self.spec.cell_sizes()
    }

    /// Largest cellwise difference of the profile values.
    pub fn sup_diff(&self, other: &MomentumGrid) -> Result<f64> {
        if self.spec != other.spec {
            return Err(CoreError::InvalidInput {
                what: "profile comparison",
                why: "grids use different specs".into(),
            });
        }
        let (du, dl) = self.cell_sizes();
        let scale = 4.0 * PI * PI * du * dl;
        let mut sup = 0.0f64;
        for (a, b) in self.cell_mass.iter().zip(&other.cell_mass) {
            sup = sup.max((a - b).abs() / scale);
        }
        Ok(sup)
    }
}

fn bin(
    spec: &GridSpec,
    samples: impl Iterator<Item = (f64, f64, f64)>,
) -> Result<MomentumGrid> {
    let mut cell_mass = vec![0.0; spec.n_u * spec.n_ell];
    let mut total_mass = 0.0;
    for (index, (u, ell, weight)) in samples.enumerate() {
        match spec.locate(u, ell) {
            Some(c) => {
                cell_mass[c] += weight;
                total_mass += weight;
            }
            None => {
                return Err(CoreError::ParticleOutsideGrid { index, w: u, ell });
            }
        }
    }
    Ok(MomentumGrid {
        spec: *spec,
        cell_mass,
        total_mass,
    })
}

/// Histogram of the ensemble's current (radial momentum, angular momentum)
/// mass distribution. Radial position is averaged out, which is exactly the
/// object that stabilizes as the solution disperses.
pub fn spatial_average(e: &Ensemble, spec: &GridSpec) -> Result<MomentumGrid> {
    bin(
        spec,
        e.particles.iter().map(|p| (p.state.w, p.state.ell, p.weight)),
    )
}

/// Histogram of the limiting profile: each shell's mass placed at its
/// terminal momentum and (conserved) angular momentum.
pub fn limit_profile(
    winf: &[f64],
    ells: &[f64],
    weights: &[f64],
    spec: &GridSpec,
) -> Result<MomentumGrid> {
    if winf.len() != ells.len() || winf.len() != weights.len() {
        return Err(CoreError::InvalidInput {
            what: "limit profile",
            why: format!(
                "column lengths differ: {} momenta, {} angular momenta, {} weights",
                winf.len(),
                ells.len(),
                weights.len()
            ),
        });
    }
    bin(
        spec,
        winf.iter()
            .zip(ells)
            .zip(weights)
            .map(|((&u, &l), &m)| (u, l, m)),
    )
}

/// Mass, Casimirs, and energy of a profile or ensemble, for conservation
/// comparisons across the infinite-time limit.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConservedSet {
    pub mass: f64,
    pub casimirs: Vec<f64>,
    pub energy: f64,
}

/// Conserved quantities of a gridded profile, evaluated at cell centers. The
/// energy is purely kinetic: in the limit the field energy and the
/// centrifugal contribution have both escaped to infinity.
pub fn grid_conserved(grid: &MomentumGrid, casimirs: &[CasimirFn], model: Model) -> ConservedSet {
    let spec = &grid.spec;
    let mut cas = vec![0.0; casimirs.len()];
    let mut energy = 0.0;
    for i in 0..spec.n_u {
        let u = spec.u_center(i);
        for j in 0..spec.n_ell {
            let m = grid.cell_mass[i * spec.n_ell + j];
            if m == 0.0 {
                continue;
            }
            let ell = spec.ell_center(j);
            for (k, c) in casimirs.iter().enumerate() {
                cas[k] += m * c.eval(ell);
            }
            energy += match model {
                Model::Classical => 0.5 * m * u * u,
                Model::Relativistic => m * (1.0 + u * u).sqrt(),
            };
        }
    }
    for c in &mut cas {
        *c /= 4.0 * PI * PI;
    }
    ConservedSet {
        mass: grid.total_mass,
        casimirs: cas,
        energy,
    }
}

/// Conserved quantities of the exact pushforward (no gridding): plain sums
/// over shells at their terminal momenta.
pub fn pushforward_conserved(
    winf: &[f64],
    ells: &[f64],
    weights: &[f64],
    casimirs: &[CasimirFn],
    model: Model,
) -> ConservedSet {
    let mut mass = 0.0;
    let mut cas = vec![0.0; casimirs.len()];
    let mut energy = 0.0;
    for ((&u, &l), &m) in winf.iter().zip(ells).zip(weights) {
        mass += m;
        for (k, c) in casimirs.iter().enumerate() {
            cas[k] += m * c.eval(l);
        }
        energy += match model {
            Model::Classical => 0.5 * m * u * u,
            Model::Relativistic => m * (1.0 + u * u).sqrt(),
        };
    }
    for c in &mut cas {
        *c /= 4.0 * PI * PI;
    }
    ConservedSet {
        mass,
        casimirs: cas,
        energy,
    }
}

/// Distance of each earlier profile from the final one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileConvergence {
    /// Times of the earlier profiles.
    pub times: Vec<f64>,
    /// Largest cellwise deviation from the final profile at each time.
    pub sup_diffs: Vec<f64>,
}

impl ProfileConvergence {
    /// True when every deviation is exactly zero (the profile stopped
    /// moving, cell for cell).
    pub fn is_degenerate(&self) -> bool {
        self.sup_diffs.iter().all(|&d| d == 0.0)
    }
}

/// Compare every profile against the last one (the reference). Needs at
/// least two snapshots on the identical grid.
pub fn profile_convergence(snapshots: &[(f64, MomentumGrid)]) -> Result<ProfileConvergence> {
    if snapshots.len() < 2 {
        return Err(CoreError::InvalidInput {
            what: "profile convergence",
            why: format!("need at least two snapshots, got {}", snapshots.len()),
        });
    }
    let (_, reference) = snapshots.last().unwrap();
    let mut times = Vec::new();
    let mut sup_diffs = Vec::new();
    for (t, grid) in &snapshots[..snapshots.len() - 1] {
        times.push(*t);
        sup_diffs.push(grid.sup_diff(reference)?);
    }
    Ok(ProfileConvergence { times, sup_diffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::fit_exponent;
    use crate::phase::{Particle, RadialPoint};
    use approx::assert_relative_eq;

    fn spec_unit() -> GridSpec {
        GridSpec::new(2, 2, (0.0, 1.0), (0.0, 1.0)).unwrap()
    }

    #[test]
    fn binning_reference_cells() {
        let spec = spec_unit();
        assert_eq!(spec.locate(0.25, 0.25), Some(0));
        assert_eq!(spec.locate(0.25, 0.75), Some(1));
        assert_eq!(spec.locate(0.75, 0.25), Some(2));
        // Values on the upper boundary fall into the last cell.
        assert_eq!(spec.locate(1.0, 1.0), Some(3));
        assert_eq!(spec.locate(1.5, 0.5), None);
        assert_relative_eq!(spec.u_center(0), 0.25);
        assert_relative_eq!(spec.ell_center(1), 0.75);
    }

    #[test]
    fn out_of_range_shells_are_an_error_with_their_index() {
        let spec = spec_unit();
        let err = limit_profile(&[0.5, 2.0], &[0.5, 0.5], &[1.0, 1.0], &spec).unwrap_err();
        match err {
            CoreError::ParticleOutsideGrid { index, w, .. } => {
                assert_eq!(index, 1);
                assert_eq!(w, 2.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn value_is_mass_per_reduced_cell_volume() {
        let spec = spec_unit();
        let (du, dl) = spec.cell_sizes();
        let w = 4.0 * PI * PI * du * dl;
        let grid = limit_profile(&[0.25], &[0.25], &[w], &spec).unwrap();
        assert_relative_eq!(grid.value(0, 0), 1.0, max_relative = 1e-14);
        assert_eq!(grid.value(1, 1), 0.0);
    }

    #[test]
    fn total_mass_is_the_plain_weight_sum() {
        let spec = spec_unit();
        let weights = [0.1, 0.2, 0.3];
        let grid =
            limit_profile(&[0.1, 0.5, 0.9], &[0.1, 0.5, 0.9], &weights, &spec).unwrap();
        let direct: f64 = weights.iter().sum();
        assert_eq!(grid.total_mass.to_bits(), direct.to_bits());
    }

    #[test]
    fn aligned_grid_reproduces_pushforward_conservation_exactly() {
        // Shells placed exactly at cell centers: gridding loses nothing.
        let spec = GridSpec::new(4, 4, (0.0, 2.0), (0.0, 2.0)).unwrap();
        let winf: Vec<f64> = (0..4).map(|i| spec.u_center(i)).collect();
        let ells: Vec<f64> = (0..4).map(|j| spec.ell_center(j)).collect();
        let weights = [0.4, 0.3, 0.2, 0.1];
        let grid = limit_profile(&winf, &ells, &weights, &spec).unwrap();
        let cas = [CasimirFn::Identity, CasimirFn::Square];
        for model in [Model::Classical, Model::Relativistic] {
            let a = grid_conserved(&grid, &cas, model);
            let b = pushforward_conserved(&winf, &ells, &weights, &cas, model);
            assert_eq!(a.mass.to_bits(), b.mass.to_bits());
            for (x, y) in a.casimirs.iter().zip(&b.casimirs) {
                assert_relative_eq!(x, y, max_relative = 1e-13);
            }
            assert_relative_eq!(a.energy, b.energy, max_relative = 1e-13);
        }
    }

    #[test]
    fn spatial_average_bins_by_current_momenta() {
        let e = Ensemble::new(
            Model::Classical,
            0.0,
            vec![
                Particle {
                    state: RadialPoint { r: 5.0, w: 0.25, ell: 0.25 },
                    weight: 1.0,
                },
                Particle {
                    state: RadialPoint { r: 9.0, w: 0.75, ell: 0.75 },
                    weight: 2.0,
                },
            ],
        );
        let grid = spatial_average(&e, &spec_unit()).unwrap();
        assert_eq!(grid.cell_mass, vec![1.0, 0.0, 0.0, 2.0]);
        assert_eq!(grid.total_mass, 3.0);
    }

    #[test]
    fn covering_pads_and_widens_degenerate_ranges() {
        let spec = GridSpec::covering(&[1.0, 3.0], &[2.0, 2.0], 4, 4).unwrap();
        assert!(spec.u_range.0 < 1.0 && spec.u_range.1 > 3.0);
        assert!(spec.ell_range.0 < 2.0 && spec.ell_range.1 > 2.0);
        assert!(spec.locate(1.0, 2.0).is_some());
        assert!(spec.locate(3.0, 2.0).is_some());
    }

    #[test]
    fn convergence_series_recovers_a_known_rate()  {
        // One moving cell whose value exceeds the reference by exactly 1/t.
        let spec = spec_unit();
        let (du, dl) = spec.cell_sizes();
        let scale = 4.0 * PI * PI * du * dl;
        let make = |extra: f64| MomentumGrid {
            spec,
            cell_mass: vec![scale * (1.0 + extra), 0.0, 0.0, 0.0],
            total_mass: scale * (1.0 + extra),
        };
        let mut snaps: Vec<(f64, MomentumGrid)> = (1..=20)
            .map(|k| {
                let t = k as f64;
                (t, make(1.0 / t))
            })
            .collect();
        snaps.push((1e9, make(0.0)));
        let conv = profile_convergence(&snaps).unwrap();
        assert!(!conv.is_degenerate());
        for (t, d) in conv.times.iter().zip(&conv.sup_diffs) {
            assert_relative_eq!(*d, 1.0 / t, max_relative = 1e-12);
        }
        let fit = fit_exponent(&conv.times, &conv.sup_diffs, (1.0, 20.0)).unwrap();
        assert_relative_eq!(fit.slope, -1.0, epsilon = 1e-10);

        let still = vec![(1.0, make(0.0)), (2.0, make(0.0)), (3.0, make(0.0))];
        assert!(profile_convergence(&still).unwrap().is_degenerate());
    }
}
