//! Report assembly and serialization for certificate runs.
//!
//! The machine format is a single JSON document whose field set is versioned
//! by [`REPORT_SCHEMA_VERSION`]; see the repository README for the schema.
//! Reports are deterministic for a fixed invocation except for the `timing`
//! block, which callers should exclude when comparing runs.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::asymptotics::{AsymptoticSign, DirectionalProfile, Tolerance};
use crate::certify::{
    CertificateOutcome, DirectionSource, RobustnessClass, ToleranceFlag, UnboundedCertificate,
};
use crate::error::Result;
use crate::parser::Problem;
use crate::sampling::{required_samples, AlphaEstimate, SampleConfig};
use crate::certify::RESIDUAL_TABLE_GRID;

/// Version of the machine report field set.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    /// "unbounded" or "inconclusive".
    pub verdict: String,
    pub problem: ProblemInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction_source: Option<SourceInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<ProfileInfo>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessInfo>,
    pub sampling: SamplingInfo,
    pub statistics: StatisticsInfo,
    pub tolerance_flags: Vec<FlagInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_note: Option<String>,
    pub provenance: Provenance,
    /// Wall-clock measurements; excluded from reproducibility comparisons.
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInfo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    /// "user", "sample", or "probe".
    pub kind: String,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileInfo {
    /// "objective" or "g<i>".
    pub polynomial: String,
    /// Largest non-vanishing degree; `null` when everything vanishes.
    pub mu: Option<u32>,
    pub leading_value: f64,
    pub sign: SignInfo,
    pub ray_coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignInfo {
    /// "neg_infinity", "finite", or "pos_infinity".
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessInfo {
    /// "robust" or "degenerate".
    pub class: String,
    pub vanishing_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingInfo {
    pub count: u64,
    pub seed: u64,
    pub used: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certifying_indices: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticsInfo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_table: Option<Vec<ResidualRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_samples: Option<Vec<RequiredSamplesRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_estimate: Option<AlphaInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub alpha_floor: f64,
    pub inconclusive_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequiredSamplesRow {
    pub alpha_floor: f64,
    pub delta: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaInfo {
    pub hits: u64,
    pub samples: u64,
    pub alpha_hat: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagInfo {
    pub polynomial: usize,
    pub degree: u32,
    pub magnitude: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem_name: Option<String>,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub probe: bool,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub decomposition_ms: f64,
    pub per_1k_samples_ms: f64,
    pub total_ms: f64,
}

fn sign_info(sign: &AsymptoticSign) -> SignInfo {
    match sign {
        AsymptoticSign::NegInfinity => SignInfo {
            kind: "neg_infinity".into(),
            value: None,
        },
        AsymptoticSign::Finite(v) => SignInfo {
            kind: "finite".into(),
            value: Some(*v),
        },
        AsymptoticSign::PosInfinity => SignInfo {
            kind: "pos_infinity".into(),
            value: None,
        },
    }
}

fn profile_infos(profiles: &[DirectionalProfile]) -> Vec<ProfileInfo> {
    profiles
        .iter()
        .enumerate()
        .map(|(i, p)| ProfileInfo {
            polynomial: if i == 0 {
                "objective".into()
            } else {
                format!("g{i}")
            },
            mu: p.mu,
            leading_value: p.leading_value,
            sign: sign_info(&p.sign),
            ray_coefficients: p.ray_coefficients.clone(),
        })
        .collect()
}

fn certificate_flags(cert: &UnboundedCertificate) -> Vec<FlagInfo> {
    let mut flags = Vec::new();
    for (i, profile) in cert.profiles.iter().enumerate() {
        for f in &profile.near_zero_flags {
            flags.push(FlagInfo {
                polynomial: i,
                degree: f.degree,
                magnitude: f.magnitude,
                threshold: f.threshold,
            });
        }
    }
    flags
}

/// Inputs that shape a report beyond the outcome itself.
#[derive(Debug, Clone)]
pub struct ReportContext {
    pub tolerance: Tolerance,
    pub probe_enabled: bool,
    pub threads: usize,
    pub timing: Timing,
}

/// Assembles the full report for one run.
pub fn build_report(
    problem: &Problem,
    config: &SampleConfig,
    outcome: &CertificateOutcome,
    alpha: Option<&AlphaEstimate>,
    context: &ReportContext,
) -> Result<Report> {
    let required = match config.delta {
        None => None,
        Some(delta) => {
            let mut floors: Vec<f64> = RESIDUAL_TABLE_GRID.to_vec();
            if let Some(a) = config.alpha_floor {
                if !floors.contains(&a) {
                    floors.push(a);
                }
            }
            floors.sort_by(|a, b| b.total_cmp(a));
            let rows = floors
                .into_iter()
                .map(|alpha_floor| {
                    Ok(RequiredSamplesRow {
                        alpha_floor,
                        delta,
                        samples: required_samples(alpha_floor, delta)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(rows)
        }
    };
    let alpha_estimate = alpha.map(|a| AlphaInfo {
        hits: a.hits,
        samples: a.samples,
        alpha_hat: a.alpha_hat,
        ci95_low: a.interval.0,
        ci95_high: a.interval.1,
    });

    let report = match outcome {
        CertificateOutcome::Unbounded(cert) => {
            let (kind, index) = match cert.source {
                DirectionSource::User(i) => ("user", i as u64),
                DirectionSource::Sample(i) => ("sample", i),
                DirectionSource::Probe(i) => ("probe", i as u64),
            };
            let robustness = match &cert.robustness {
                RobustnessClass::Robust => RobustnessInfo {
                    class: "robust".into(),
                    vanishing_indices: Vec::new(),
                },
                RobustnessClass::Degenerate { vanishing_indices } => RobustnessInfo {
                    class: "degenerate".into(),
                    vanishing_indices: vanishing_indices.clone(),
                },
            };
            Report {
                schema_version: REPORT_SCHEMA_VERSION,
                verdict: "unbounded".into(),
                problem: ProblemInfo {
                    name: problem.name.clone(),
                    dimension: problem.dimension,
                    constraints: problem.num_constraints(),
                },
                direction: Some(cert.direction.clone()),
                direction_source: Some(SourceInfo {
                    kind: kind.into(),
                    index,
                }),
                witness_t: Some(cert.witness_t),
                profiles: Some(profile_infos(&cert.profiles)),
                robustness: Some(robustness),
                sampling: SamplingInfo {
                    count: config.count,
                    seed: config.seed,
                    used: cert.samples_used,
                    certifying_indices: cert.certifying_samples.clone(),
                },
                statistics: StatisticsInfo {
                    residual_table: None,
                    required_samples: required,
                    alpha_estimate,
                },
                tolerance_flags: certificate_flags(cert),
                probe_note: None,
                provenance: provenance(problem, context),
                timing: context.timing.clone(),
            }
        }
        CertificateOutcome::Inconclusive(inc) => Report {
            schema_version: REPORT_SCHEMA_VERSION,
            verdict: "inconclusive".into(),
            problem: ProblemInfo {
                name: problem.name.clone(),
                dimension: problem.dimension,
                constraints: problem.num_constraints(),
            },
            direction: None,
            direction_source: None,
            witness_t: None,
            profiles: None,
            robustness: None,
            sampling: SamplingInfo {
                count: config.count,
                seed: config.seed,
                used: inc.samples_used,
                certifying_indices: if config.exhaustive {
                    Some(Vec::new())
                } else {
                    None
                },
            },
            statistics: StatisticsInfo {
                residual_table: Some(
                    inc.residual_table
                        .iter()
                        .map(|&(alpha_floor, p)| ResidualRow {
                            alpha_floor,
                            inconclusive_probability: p,
                        })
                        .collect(),
                ),
                required_samples: required,
                alpha_estimate,
            },
            tolerance_flags: inc
                .tolerance_flags
                .iter()
                .map(|f: &ToleranceFlag| FlagInfo {
                    polynomial: f.poly_index,
                    degree: f.degree,
                    magnitude: f.magnitude,
                    threshold: f.threshold,
                })
                .collect(),
            probe_note: inc.probe_note.clone(),
            provenance: provenance(problem, context),
            timing: context.timing.clone(),
        },
    };
    Ok(report)
}

fn provenance(problem: &Problem, context: &ReportContext) -> Provenance {
    Provenance {
        tool: "certify".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        problem_name: problem.name.clone(),
        tol_abs: context.tolerance.abs,
        tol_rel: context.tolerance.rel,
        probe: context.probe_enabled,
        threads: context.threads,
    }
}

impl Report {
    /// Machine format: pretty-printed JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Human format: a plain-text table.
    pub fn render_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verdict: {}", self.verdict.to_uppercase());
        let name = self.problem.name.as_deref().unwrap_or("(unnamed)");
        let _ = writeln!(
            out,
            "problem: {} (n={}, m={})",
            name, self.problem.dimension, self.problem.constraints
        );
        if let Some(direction) = &self.direction {
            let coords: Vec<String> = direction.iter().map(|x| format!("{x:.12}")).collect();
            let _ = writeln!(out, "direction: [{}]", coords.join(", "));
        }
        if let Some(source) = &self.direction_source {
            let _ = writeln!(out, "source: {} #{}", source.kind, source.index);
        }
        if let Some(t) = self.witness_t {
            let _ = writeln!(out, "witness T: {t}");
        }
        if let Some(profiles) = &self.profiles {
            let _ = writeln!(out, "profiles:");
            let _ = writeln!(
                out,
                "  {:<12} {:>4} {:>16}  {}",
                "polynomial", "mu", "leading", "asymptotic sign"
            );
            for p in profiles {
                let mu = p
                    .mu
                    .map(|k| k.to_string())
                    .unwrap_or_else(|| "-inf".into());
                let sign = match p.sign.kind.as_str() {
                    "neg_infinity" => "-inf".to_string(),
                    "pos_infinity" => "+inf".to_string(),
                    _ => format!("finite({})", p.sign.value.unwrap_or(0.0)),
                };
                let _ = writeln!(
                    out,
                    "  {:<12} {:>4} {:>16.9}  {}",
                    p.polynomial, mu, p.leading_value, sign
                );
            }
        }
        if let Some(r) = &self.robustness {
            if r.class == "robust" {
                let _ = writeln!(out, "robustness: robust");
            } else {
                let indices: Vec<String> =
                    r.vanishing_indices.iter().map(|i| i.to_string()).collect();
                let _ = writeln!(
                    out,
                    "robustness: degenerate (vanishing top forms at indices: {})",
                    indices.join(", ")
                );
            }
        }
        let _ = writeln!(
            out,
            "sampling: N={} seed={} used={}",
            self.sampling.count, self.sampling.seed, self.sampling.used
        );
        if let Some(indices) = &self.sampling.certifying_indices {
            let _ = writeln!(out, "certifying sample indices: {}", indices.len());
        }
        if let Some(table) = &self.statistics.residual_table {
            let _ = writeln!(out, "residual probabilities (if true alpha >= floor):");
            for row in table {
                let _ = writeln!(
                    out,
                    "  alpha >= {:<6} -> P(inconclusive) <= {:.6e}",
                    row.alpha_floor, row.inconclusive_probability
                );
            }
        }
        if let Some(rows) = &self.statistics.required_samples {
            let _ = writeln!(out, "samples needed for confidence {}:", rows[0].delta);
            for row in rows {
                let _ = writeln!(out, "  alpha >= {:<6} -> N >= {}", row.alpha_floor, row.samples);
            }
        }
        if let Some(alpha) = &self.statistics.alpha_estimate {
            let _ = writeln!(
                out,
                "alpha estimate: {}/{} = {:.6} (95% CI [{:.6}, {:.6}])",
                alpha.hits, alpha.samples, alpha.alpha_hat, alpha.ci95_low, alpha.ci95_high
            );
        }
        if !self.tolerance_flags.is_empty() {
            let _ = writeln!(out, "near-threshold zero declarations:");
            for f in &self.tolerance_flags {
                let _ = writeln!(
                    out,
                    "  polynomial {} degree {}: |value| {:.3e} vs threshold {:.3e}",
                    f.polynomial, f.degree, f.magnitude, f.threshold
                );
            }
        }
        if let Some(note) = &self.probe_note {
            let _ = writeln!(out, "probe: {note}");
        }
        let _ = writeln!(
            out,
            "tolerances: abs={:e} rel={:e}",
            self.provenance.tol_abs, self.provenance.tol_rel
        );
        let _ = writeln!(
            out,
            "timing: decomposition {:.3} ms, per 1k samples {:.3} ms, total {:.3} ms",
            self.timing.decomposition_ms, self.timing.per_1k_samples_ms, self.timing.total_ms
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::run_certificate;
    use crate::parser::parse_problem;

    fn context() -> ReportContext {
        ReportContext {
            tolerance: Tolerance::default(),
            probe_enabled: false,
            threads: 0,
            timing: Timing {
                decomposition_ms: 0.0,
                per_1k_samples_ms: 0.0,
                total_ms: 0.0,
            },
        }
    }

    #[test]
    fn report_round_trips_through_json() {
        let problem = parse_problem(
            "dim 2\nname: example\nobjective: (x1^2 - x2^2)^2 - x2^3\nconstraint: (x1^2 - x2^2)^2 - x1^2*x2^2\nconstraint: 1 - x1^2 - x2^2\n",
        )
        .unwrap();
        let mut config = SampleConfig::new(100, 0);
        config.delta = Some(0.01);
        let tol = Tolerance::default();
        for directions in [vec![vec![1.0, 1.0]], vec![]] {
            let outcome =
                run_certificate(&problem, &config, &tol, &directions, None).unwrap();
            let report = build_report(&problem, &config, &outcome, None, &context()).unwrap();
            let json = report.to_json();
            let parsed: Report = serde_json::from_str(&json).unwrap();
            assert_eq!(parsed, report);
            assert!(!report.render_human().is_empty());
        }
    }

    #[test]
    fn verdict_matches_direction_presence() {
        let problem = parse_problem("dim 2\nobjective: x1^2 + x2^2\n").unwrap();
        let config = SampleConfig::new(50, 1);
        let outcome =
            run_certificate(&problem, &config, &Tolerance::default(), &[], None).unwrap();
        let report = build_report(&problem, &config, &outcome, None, &context()).unwrap();
        assert_eq!(report.verdict, "inconclusive");
        assert!(report.direction.is_none());
        assert!(report.statistics.residual_table.is_some());
    }
}
