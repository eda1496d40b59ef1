//! The certificate driver: test user directions, then sampled directions,
//! then probe candidates, and assemble the outcome.
//!
//! A run decomposes every polynomial once, then checks directions in a fixed
//! precedence order (user-supplied, sampled by ascending index, probe
//! candidates by canonical rank). The first certifying direction wins and
//! the winner is deterministic for a fixed configuration regardless of how
//! many worker threads evaluate the samples.

use std::collections::BTreeMap;

use crate::asymptotics::{
    certificate_check, witness_threshold, DirectionalProfile, NearZeroFlag,
    ProblemDecompositions, Tolerance,
};
use crate::error::{Error, Result};
use crate::parser::Problem;
use crate::probe::{find_candidates, ProbeConfig};
use crate::sampling::{residual_probability, scan_samples, SampleConfig, ScanMode};

/// Where a certifying direction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionSource {
    /// Index into the user-supplied direction list.
    User(usize),
    /// Sample index in the seeded stream.
    Sample(u64),
    /// Rank in the probe's canonical candidate list.
    Probe(usize),
}

/// Whether the certificate survives perturbation of the direction.
///
/// Robust means every polynomial's full-degree form is strictly negative at
/// the direction; a whole neighborhood on the sphere then certifies too, so
/// the certifying set has positive measure. Degenerate lists the indices
/// (0 = objective) whose full-degree form vanishes or is non-negative: such
/// certificates can sit inside a measure-zero stratum that uniform sampling
/// cannot hit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RobustnessClass {
    Robust,
    Degenerate { vanishing_indices: Vec<usize> },
}

/// A near-threshold zero declaration observed during classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceFlag {
    /// Polynomial index, 0 for the objective.
    pub poly_index: usize,
    pub degree: u32,
    pub magnitude: f64,
    pub threshold: f64,
}

/// Successful certificate: a unit direction along which the objective and
/// every constraint diverge to minus infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct UnboundedCertificate {
    pub direction: Vec<f64>,
    pub source: DirectionSource,
    /// Per-polynomial profiles at the direction, objective first.
    pub profiles: Vec<DirectionalProfile>,
    /// Every polynomial is strictly negative along `t * direction` for all
    /// `t >= witness_t`.
    pub witness_t: f64,
    pub robustness: RobustnessClass,
    /// All certifying sample indices (exhaustive mode only), ascending.
    pub certifying_samples: Option<Vec<u64>>,
    /// Samples consumed before the certificate was produced.
    pub samples_used: u64,
}

/// No certifying direction found within the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct InconclusiveOutcome {
    pub samples_used: u64,
    /// `(alpha_floor, (1 - alpha_floor)^N)` rows, descending alpha.
    pub residual_table: Vec<(f64, f64)>,
    /// Worst near-threshold zero declarations seen per (poly, degree).
    pub tolerance_flags: Vec<ToleranceFlag>,
    /// Present when the probe ran and failed to rescue the run.
    pub probe_note: Option<String>,
}

/// Result of a certificate run.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificateOutcome {
    Unbounded(UnboundedCertificate),
    Inconclusive(InconclusiveOutcome),
}

impl CertificateOutcome {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, CertificateOutcome::Unbounded(_))
    }
}

/// Alpha floors reported in the inconclusive residual table.
pub const RESIDUAL_TABLE_GRID: [f64; 4] = [0.1, 0.05, 0.01, 0.001];

fn normalize_direction(v: &[f64], dimension: usize, which: usize) -> Result<Vec<f64>> {
    if v.len() != dimension {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            actual: v.len(),
        });
    }
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::InvalidInput(format!(
            "direction #{which} must be a nonzero finite vector"
        )));
    }
    let scaled: Vec<f64> = v.iter().map(|x| x / max).collect();
    let norm: f64 = scaled.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(scaled.into_iter().map(|x| x / norm).collect())
}

/// Runs the full certificate pipeline on a problem.
pub fn run_certificate(
    problem: &Problem,
    config: &SampleConfig,
    tol: &Tolerance,
    extra_directions: &[Vec<f64>],
    probe: Option<&ProbeConfig>,
) -> Result<CertificateOutcome> {
    let decs = ProblemDecompositions::new(problem);
    run_with_decompositions(&decs, config, tol, extra_directions, probe)
}

/// [`run_certificate`] on pre-built decompositions.
pub fn run_with_decompositions(
    decs: &ProblemDecompositions,
    config: &SampleConfig,
    tol: &Tolerance,
    extra_directions: &[Vec<f64>],
    probe: Option<&ProbeConfig>,
) -> Result<CertificateOutcome> {
    config.validate()?;
    if let Some(p) = probe {
        p.validate()?;
    }

    // User-supplied directions first: cheap, certain checks.
    let mut user_hit: Option<(usize, Vec<f64>, Vec<DirectionalProfile>)> = None;
    for (i, raw) in extra_directions.iter().enumerate() {
        let unit = normalize_direction(raw, decs.dimension(), i)?;
        let profiles = decs.classify_all(&unit, tol)?;
        if certificate_check(&profiles, tol) {
            user_hit = Some((i, unit, profiles));
            break;
        }
    }

    let need_full_scan = config.exhaustive;
    let scan = if user_hit.is_some() && !need_full_scan {
        None
    } else {
        let mode = if config.exhaustive {
            ScanMode::Full
        } else {
            ScanMode::EarlyExit
        };
        Some(scan_samples(decs, config.count, config.seed, tol, mode)?)
    };
    let certifying_samples = if config.exhaustive {
        scan.as_ref().map(|s| s.certifying.clone())
    } else {
        None
    };

    if let Some((index, direction, profiles)) = user_hit {
        return Ok(CertificateOutcome::Unbounded(build_certificate(
            decs,
            direction,
            DirectionSource::User(index),
            profiles,
            tol,
            certifying_samples,
            0,
        )?));
    }

    let scan = scan.expect("scan ran because no user direction certified");
    if let Some(&winner) = scan.certifying.first() {
        let direction =
            crate::sampling::sample_direction(config.seed, winner, decs.dimension())?;
        let profiles = decs.classify_all(&direction, tol)?;
        return Ok(CertificateOutcome::Unbounded(build_certificate(
            decs,
            direction,
            DirectionSource::Sample(winner),
            profiles,
            tol,
            certifying_samples,
            winner + 1,
        )?));
    }

    // Probe stage: opt-in, and screened by the same certificate check.
    let mut probe_note = None;
    if let Some(probe_config) = probe {
        let candidates = find_candidates(decs, probe_config, config.seed);
        let tested = candidates.len();
        for (rank, candidate) in candidates.into_iter().enumerate() {
            let profiles = decs.classify_all(&candidate, tol)?;
            if certificate_check(&profiles, tol) {
                return Ok(CertificateOutcome::Unbounded(build_certificate(
                    decs,
                    candidate,
                    DirectionSource::Probe(rank),
                    profiles,
                    tol,
                    certifying_samples,
                    config.count,
                )?));
            }
        }
        probe_note = Some(format!(
            "probe tested {tested} candidate direction(s); none passed the certificate check"
        ));
    }

    let mut floors: Vec<f64> = RESIDUAL_TABLE_GRID.to_vec();
    if let Some(a) = config.alpha_floor {
        if !floors.contains(&a) {
            floors.push(a);
        }
    }
    floors.sort_by(|a, b| b.total_cmp(a));
    let residual_table = floors
        .into_iter()
        .map(|a| Ok((a, residual_probability(a, config.count)?)))
        .collect::<Result<Vec<_>>>()?;

    Ok(CertificateOutcome::Inconclusive(InconclusiveOutcome {
        samples_used: config.count,
        residual_table,
        tolerance_flags: flags_to_vec(&scan.flags),
        probe_note,
    }))
}

fn flags_to_vec(map: &BTreeMap<(usize, u32), NearZeroFlag>) -> Vec<ToleranceFlag> {
    map.iter()
        .map(|(&(poly_index, _), flag)| ToleranceFlag {
            poly_index,
            degree: flag.degree,
            magnitude: flag.magnitude,
            threshold: flag.threshold,
        })
        .collect()
}

fn build_certificate(
    decs: &ProblemDecompositions,
    direction: Vec<f64>,
    source: DirectionSource,
    profiles: Vec<DirectionalProfile>,
    tol: &Tolerance,
    certifying_samples: Option<Vec<u64>>,
    samples_used: u64,
) -> Result<UnboundedCertificate> {
    let mut witness_t = 1.0f64;
    for profile in &profiles {
        witness_t = witness_t.max(witness_threshold(profile)?);
    }
    let robustness = classify_robustness(decs, &direction, tol);
    Ok(UnboundedCertificate {
        direction,
        source,
        profiles,
        witness_t,
        robustness,
        certifying_samples,
        samples_used,
    })
}

/// Evaluates every polynomial's full-degree form at a certified direction.
/// Strictly negative across the board means the certificate is robust; any
/// vanishing (or positive) full-degree form marks the index degenerate.
pub fn classify_robustness(
    decs: &ProblemDecompositions,
    direction: &[f64],
    tol: &Tolerance,
) -> RobustnessClass {
    let mut vanishing_indices = Vec::new();
    for (i, dec) in decs.decompositions().iter().enumerate() {
        match dec.top_form() {
            None => vanishing_indices.push(i),
            Some((degree, form)) => {
                let value = form.eval_unchecked(direction);
                let threshold = tol.zero_threshold(dec.coefficient_l1_norm(degree));
                if !(value < -threshold) {
                    vanishing_indices.push(i);
                }
            }
        }
    }
    if vanishing_indices.is_empty() {
        RobustnessClass::Robust
    } else {
        RobustnessClass::Degenerate { vanishing_indices }
    }
}
