//! Unboundedness certificates for polynomial optimization problems.
//!
//! Given `inf f(x)` subject to `g_i(x) <= 0`, a global solver wants to know
//! up front whether the infimum is even finite. This crate searches the unit
//! sphere for a direction `d` along which `f` and every `g_i` diverge to
//! minus infinity: the ray `t*d` is then eventually feasible with `f`
//! unbounded below along it, which settles the question outright.
//!
//! The pipeline: decompose each polynomial into homogeneous parts
//! ([`polynomial`]), classify its growth along candidate directions
//! ([`asymptotics`]), draw directions uniformly from seeded counter-based
//! streams ([`sampling`]), and drive the whole search with deterministic
//! precedence over user-supplied, sampled, and probe directions
//! ([`certify`]). When sampling comes up empty, the run reports how unlikely
//! that is for any assumed measure of certifying directions; the optional
//! [`probe`] hunts for degenerate certificates that uniform sampling cannot
//! hit. [`oracle`] holds the brute-force checks used to validate all of it.

pub mod asymptotics;
pub mod certify;
pub mod error;
pub mod oracle;
pub mod parser;
pub mod polynomial;
pub mod probe;
pub mod report;
pub mod sampling;

pub use asymptotics::{
    certificate_check, classify, witness_threshold, AsymptoticSign, DirectionalProfile,
    ProblemDecompositions, Tolerance,
};
pub use certify::{
    classify_robustness, run_certificate, CertificateOutcome, DirectionSource,
    InconclusiveOutcome, RobustnessClass, UnboundedCertificate,
};
pub use error::{Error, Result};
pub use oracle::{grid_alpha, verify_ray, GridSpec, RayViolation};
pub use parser::{parse_expression, parse_problem, Problem};
pub use polynomial::{HomogeneousDecomposition, Monomial, Polynomial};
pub use probe::{find_candidates, penalty, ProbeConfig};
pub use report::{build_report, Report, ReportContext, Timing, REPORT_SCHEMA_VERSION};
pub use sampling::{
    clopper_pearson, estimate_alpha, required_samples, residual_probability, sample_direction,
    AlphaEstimate, SampleConfig,
};
