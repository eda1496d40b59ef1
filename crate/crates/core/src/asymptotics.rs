//! Asymptotic sign classification of polynomials along unit directions.
//!
//! For a polynomial `h = sum_k phi_k` with homogeneous parts `phi_k`, the
//! growth of `h(t*d)` as `t -> infinity` is decided by the largest degree
//! whose part does not vanish at `d`. Writing `mu` for that degree:
//!
//! * `mu >= 2` and `phi_mu(d) < 0`: the restriction diverges to `-infinity`;
//! * `mu >= 2` and `phi_mu(d) > 0`: it diverges to `+infinity`;
//! * `mu = 1`: the normalized growth is the finite slope `phi_1(d)`;
//! * `mu <= 0` (constants only, or everything vanishes): flat at infinity.
//!
//! Floating point cannot test `phi_k(d) != 0` exactly, so a value counts as
//! zero when it is below `abs + rel * l1(phi_k)`; on the unit sphere the l1
//! coefficient norm bounds the attainable magnitude, making it a sound scale.
//! A declared zero whose magnitude is within 10x of the threshold is flagged
//! so reports can surface near-misses.

use crate::error::{Error, Result};
use crate::parser::Problem;
use crate::polynomial::HomogeneousDecomposition;

/// Absolute and relative zero-test tolerances for ray coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        // Tight enough that tolerance widening of measure-zero certificate
        // strata stays far below any practical sampling resolution, with
        // two orders of magnitude of headroom over accumulated roundoff.
        Tolerance {
            abs: 1e-13,
            rel: 1e-13,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Result<Self> {
        if !(abs >= 0.0) || !(rel >= 0.0) {
            return Err(Error::InvalidInput(
                "tolerances must be non-negative".into(),
            ));
        }
        Ok(Tolerance { abs, rel })
    }

    /// Magnitudes at or below this threshold are declared zero for a part
    /// with the given coefficient l1 norm.
    pub fn zero_threshold(&self, coefficient_l1: f64) -> f64 {
        self.abs + self.rel * coefficient_l1
    }
}

/// Limiting normalized growth of a polynomial along a direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticSign {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl AsymptoticSign {
    /// Whether this sign certifies descent: `-infinity`, or a finite slope
    /// strictly below `-tol.abs`. A value declared zero never certifies.
    pub fn certifies(&self, tol: &Tolerance) -> bool {
        match *self {
            AsymptoticSign::NegInfinity => true,
            AsymptoticSign::Finite(v) => v < -tol.abs,
            AsymptoticSign::PosInfinity => false,
        }
    }
}

/// A zero declaration whose magnitude came within 10x of the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearZeroFlag {
    pub degree: u32,
    pub magnitude: f64,
    pub threshold: f64,
}

/// Per-direction classification of one polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalProfile {
    /// Largest degree whose ray coefficient is not declared zero; `None`
    /// when every coefficient vanishes (e.g. the zero polynomial).
    pub mu: Option<u32>,
    /// Ray coefficient at `mu` (0 when `mu` is `None`).
    pub leading_value: f64,
    /// `c_k = phi_k(d)` for `k = 0..=max_degree`.
    pub ray_coefficients: Vec<f64>,
    pub sign: AsymptoticSign,
    /// Near-threshold zero declarations made while determining `mu`.
    pub near_zero_flags: Vec<NearZeroFlag>,
}

impl DirectionalProfile {
    /// Evaluates the ray restriction `sum c_k t^k` at `t`.
    pub fn restriction_at(&self, t: f64) -> f64 {
        let mut sum = 0.0;
        for (k, &c) in self.ray_coefficients.iter().enumerate() {
            if c != 0.0 {
                sum += c * t.powi(k as i32);
            }
        }
        sum
    }
}

const UNIT_NORM_TOLERANCE: f64 = 1e-12;

fn check_unit(direction: &[f64]) -> Result<()> {
    let norm: f64 = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "direction must lie on the unit sphere (norm {norm})"
        )));
    }
    Ok(())
}

/// Classifies the asymptotic sign of a decomposed polynomial along the unit
/// direction `d`.
pub fn classify(
    dec: &HomogeneousDecomposition,
    direction: &[f64],
    tol: &Tolerance,
) -> Result<DirectionalProfile> {
    check_unit(direction)?;
    let ray_coefficients = dec.restrict_to_ray(direction)?;
    Ok(classify_coefficients(dec, ray_coefficients, tol))
}

pub(crate) fn classify_coefficients(
    dec: &HomogeneousDecomposition,
    ray_coefficients: Vec<f64>,
    tol: &Tolerance,
) -> DirectionalProfile {
    let mut mu = None;
    let mut near_zero_flags = Vec::new();
    for k in (0..ray_coefficients.len()).rev() {
        let magnitude = ray_coefficients[k].abs();
        let threshold = tol.zero_threshold(dec.coefficient_l1_norm(k as u32));
        if magnitude > threshold {
            mu = Some(k as u32);
            break;
        }
        if magnitude * 10.0 > threshold {
            near_zero_flags.push(NearZeroFlag {
                degree: k as u32,
                magnitude,
                threshold,
            });
        }
    }
    let leading_value = mu.map(|k| ray_coefficients[k as usize]).unwrap_or(0.0);
    let sign = match mu {
        Some(k) if k >= 2 => {
            if leading_value < 0.0 {
                AsymptoticSign::NegInfinity
            } else {
                AsymptoticSign::PosInfinity
            }
        }
        Some(1) => AsymptoticSign::Finite(leading_value),
        _ => AsymptoticSign::Finite(0.0),
    };
    DirectionalProfile {
        mu,
        leading_value,
        ray_coefficients,
        sign,
        near_zero_flags,
    }
}

/// The certificate condition: every polynomial (objective and constraints)
/// has certifying asymptotic sign at the shared direction.
pub fn certificate_check(profiles: &[DirectionalProfile], tol: &Tolerance) -> bool {
    !profiles.is_empty() && profiles.iter().all(|p| p.sign.certifies(tol))
}

/// An explicit threshold `T >= 1` such that the ray restriction is strictly
/// negative for all `t >= T`, via the Cauchy root bound
/// `T = 1 + max_{k < mu} |c_k / c_mu|`.
pub fn witness_threshold(profile: &DirectionalProfile) -> Result<f64> {
    let certifying = matches!(profile.sign, AsymptoticSign::NegInfinity)
        || matches!(profile.sign, AsymptoticSign::Finite(v) if v < 0.0);
    if !certifying {
        return Err(Error::ContractViolation(
            "witness_threshold requires a profile with negative asymptotic sign".into(),
        ));
    }
    let mu = profile.mu.ok_or_else(|| {
        Error::ContractViolation("witness_threshold requires a leading coefficient".into())
    })? as usize;
    let leading = profile.ray_coefficients[mu].abs();
    let mut max_ratio: f64 = 0.0;
    for &c in &profile.ray_coefficients[..mu] {
        max_ratio = max_ratio.max(c.abs() / leading);
    }
    Ok(1.0 + max_ratio)
}

/// Shared decompositions for one problem: the objective at index 0 followed
/// by the constraints. Built once per run and safe to share across threads.
#[derive(Debug, Clone)]
pub struct ProblemDecompositions {
    dimension: usize,
    decompositions: Vec<HomogeneousDecomposition>,
}

impl ProblemDecompositions {
    pub fn new(problem: &Problem) -> Self {
        ProblemDecompositions {
            dimension: problem.dimension,
            decompositions: problem.polynomials().map(|p| p.decompose()).collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of polynomials (`m + 1`).
    pub fn len(&self) -> usize {
        self.decompositions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decompositions.is_empty()
    }

    pub fn decompositions(&self) -> &[HomogeneousDecomposition] {
        &self.decompositions
    }

    /// Classifies every polynomial at `d` (objective first).
    pub fn classify_all(&self, direction: &[f64], tol: &Tolerance) -> Result<Vec<DirectionalProfile>> {
        check_unit(direction)?;
        let mut scratch = Vec::new();
        let mut profiles = Vec::with_capacity(self.decompositions.len());
        for dec in &self.decompositions {
            dec.restrict_to_ray_into(direction, &mut scratch)?;
            profiles.push(classify_coefficients(dec, scratch.clone(), tol));
        }
        Ok(profiles)
    }

    /// Fast path for scans: true iff the certificate condition holds at `d`.
    /// Near-threshold zero declarations encountered on the way are appended
    /// to `flags` as `(poly_index, flag)`.
    pub(crate) fn certifies_with_flags(
        &self,
        direction: &[f64],
        tol: &Tolerance,
        scratch: &mut Vec<f64>,
        flags: &mut Vec<(usize, NearZeroFlag)>,
    ) -> Result<bool> {
        check_unit(direction)?;
        let mut all = true;
        for (i, dec) in self.decompositions.iter().enumerate() {
            dec.restrict_to_ray_into(direction, scratch)?;
            let mut mu = None;
            for k in (0..scratch.len()).rev() {
                let magnitude = scratch[k].abs();
                let threshold = tol.zero_threshold(dec.coefficient_l1_norm(k as u32));
                if magnitude > threshold {
                    mu = Some((k as u32, scratch[k]));
                    break;
                }
                if magnitude * 10.0 > threshold {
                    flags.push((
                        i,
                        NearZeroFlag {
                            degree: k as u32,
                            magnitude,
                            threshold,
                        },
                    ));
                }
            }
            let certifies = match mu {
                Some((k, v)) if k >= 2 => v < 0.0,
                Some((1, v)) => v < -tol.abs,
                _ => false,
            };
            if !certifies {
                all = false;
                break;
            }
        }
        Ok(all)
    }
}
