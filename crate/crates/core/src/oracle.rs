//! Brute-force verification harness.
//!
//! Two independent checks back the certificate pipeline: a deterministic
//! equiangular grid measure of the certifying set in dimensions 2 and 3, and
//! direct evaluation of every polynomial along a witness ray. Both go
//! through plain polynomial evaluation rather than the classification code
//! they are checking.

use rayon::prelude::*;

use crate::asymptotics::{ProblemDecompositions, Tolerance};
use crate::error::{Error, Result};
use crate::parser::Problem;

/// Deterministic grid on the unit sphere, dimensions 2 and 3 only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dimension: usize,
    /// Angular steps (per angle in dimension 3).
    pub resolution: u64,
}

impl GridSpec {
    pub fn new(dimension: usize, resolution: u64) -> Result<Self> {
        if !(dimension == 2 || dimension == 3) {
            return Err(Error::InvalidInput(
                "grid measurement supports dimensions 2 and 3 only".into(),
            ));
        }
        if resolution < 8 {
            return Err(Error::InvalidInput("grid resolution must be at least 8".into()));
        }
        Ok(GridSpec {
            dimension,
            resolution,
        })
    }

    /// Default resolution: 100000 angles for n=2, 1000 per angle for n=3.
    pub fn for_dimension(dimension: usize) -> Result<Self> {
        match dimension {
            2 => Self::new(2, 100_000),
            3 => Self::new(3, 1_000),
            _ => Err(Error::InvalidInput(
                "grid measurement supports dimensions 2 and 3 only".into(),
            )),
        }
    }
}

/// Measures the certifying fraction of the sphere on a deterministic grid.
///
/// For n=2 the grid is midpoint-uniform in angle. For n=3 it is uniform in
/// the z coordinate (bands of equal surface measure) times uniform azimuth,
/// so every cell carries the same weight.
pub fn grid_alpha(problem: &Problem, spec: &GridSpec, tol: &Tolerance) -> Result<f64> {
    if problem.dimension != spec.dimension {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension,
            actual: problem.dimension,
        });
    }
    let decs = ProblemDecompositions::new(problem);
    let r = spec.resolution;
    match spec.dimension {
        2 => {
            let hits = (0..r)
                .into_par_iter()
                .map(|j| {
                    let theta = std::f64::consts::TAU * (j as f64 + 0.5) / r as f64;
                    let d = [theta.cos(), theta.sin()];
                    let mut scratch = Vec::new();
                    let mut flags = Vec::new();
                    match decs.certifies_with_flags(&d, tol, &mut scratch, &mut flags) {
                        Ok(true) => 1u64,
                        _ => 0u64,
                    }
                })
                .sum::<u64>();
            Ok(hits as f64 / r as f64)
        }
        3 => {
            let hits = (0..r)
                .into_par_iter()
                .map(|band| {
                    let z = -1.0 + 2.0 * (band as f64 + 0.5) / r as f64;
                    let radius = (1.0 - z * z).max(0.0).sqrt();
                    let mut scratch = Vec::new();
                    let mut flags = Vec::new();
                    let mut band_hits = 0u64;
                    for j in 0..r {
                        let theta = std::f64::consts::TAU * (j as f64 + 0.5) / r as f64;
                        let d = [radius * theta.cos(), radius * theta.sin(), z];
                        if let Ok(true) =
                            decs.certifies_with_flags(&d, tol, &mut scratch, &mut flags)
                        {
                            band_hits += 1;
                        }
                        flags.clear();
                    }
                    band_hits
                })
                .sum::<u64>();
            Ok(hits as f64 / (r as f64 * r as f64))
        }
        _ => unreachable!("validated by GridSpec"),
    }
}

/// Why a witness ray failed verification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayViolation {
    /// Polynomial `poly_index` (0 = objective) was not strictly negative at
    /// `t * d`.
    NonNegative {
        poly_index: usize,
        t: f64,
        value: f64,
    },
    /// The objective failed to decrease between consecutive checkpoints.
    NotDecreasing {
        t_previous: f64,
        t: f64,
        previous: f64,
        value: f64,
    },
}

/// Checkpoint multiples of the witness threshold used by [`verify_ray`].
pub const RAY_CHECKPOINTS: [f64; 5] = [1.0, 2.0, 10.0, 100.0, 1000.0];

/// Confirms a witness ray by direct evaluation: every polynomial must be
/// strictly negative at `t * d` for `t` in `witness_t * RAY_CHECKPOINTS`,
/// and the objective must strictly decrease over the last three checkpoints.
pub fn verify_ray(
    problem: &Problem,
    direction: &[f64],
    witness_t: f64,
) -> std::result::Result<(), RayViolation> {
    debug_assert!(witness_t > 0.0);
    let mut objective_values = Vec::with_capacity(RAY_CHECKPOINTS.len());
    let mut point = vec![0.0; direction.len()];
    for &multiple in &RAY_CHECKPOINTS {
        let t = witness_t * multiple;
        for (p, &d) in point.iter_mut().zip(direction) {
            *p = t * d;
        }
        for (poly_index, poly) in problem.polynomials().enumerate() {
            let value = poly.evaluate(&point).unwrap_or(f64::NAN);
            if !(value < 0.0) {
                return Err(RayViolation::NonNegative {
                    poly_index,
                    t,
                    value,
                });
            }
            if poly_index == 0 {
                objective_values.push((t, value));
            }
        }
    }
    for pair in objective_values[RAY_CHECKPOINTS.len() - 3..].windows(2) {
        let (t_previous, previous) = pair[0];
        let (t, value) = pair[1];
        if !(value < previous) {
            return Err(RayViolation::NotDecreasing {
                t_previous,
                t,
                previous,
                value,
            });
        }
    }
    Ok(())
}
