//! Uniform direction sampling on the unit sphere and the sample-size /
//! residual-probability calculus.
//!
//! Directions come from counter-based substreams: sample `index` under seed
//! `s` is produced by a generator keyed on `(s, index)` alone, so a run is
//! reproducible under any parallel schedule. Each direction is an n-vector
//! of standard normals, normalized — exactly uniform on the sphere in any
//! dimension.

use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};
use std::collections::BTreeMap;

use crate::asymptotics::{NearZeroFlag, ProblemDecompositions, Tolerance};
use crate::error::{Error, Result};
use crate::parser::Problem;

/// Sampling budget and statistics knobs for a certificate run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    /// Number of directions to sample.
    pub count: u64,
    /// Base seed for the direction substreams.
    pub seed: u64,
    /// Confidence level for sample-size reporting, in (0, 1).
    pub delta: Option<f64>,
    /// Assumed lower bound on the certifying measure, in (0, 1].
    pub alpha_floor: Option<f64>,
    /// Evaluate every sample even after a certificate is found, recording
    /// all certifying indices.
    pub exhaustive: bool,
}

impl SampleConfig {
    pub fn new(count: u64, seed: u64) -> Self {
        SampleConfig {
            count,
            seed,
            delta: None,
            alpha_floor: None,
            exhaustive: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidInput("sample count must be at least 1".into()));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::InvalidInput("delta must lie in (0, 1)".into()));
            }
        }
        if let Some(a) = self.alpha_floor {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidInput("alpha floor must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// splitmix64 stream whose initial state is derived from `(seed, index)`.
struct Substream {
    state: u64,
}

impl Substream {
    fn new(seed: u64, index: u64) -> Self {
        let keyed = mix64(seed ^ 0x243F_6A88_85A3_08D3);
        Substream {
            state: mix64(keyed ^ index.wrapping_mul(GOLDEN_GAMMA)),
        }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in (0, 1]; never returns 0, so logarithms stay finite.
    fn next_unit(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }

    /// Standard normal pair via the Box-Muller transform.
    fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_unit();
        let u2 = self.next_unit();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        (radius * angle.cos(), radius * angle.sin())
    }
}

/// Draws the `index`-th direction of seed `seed`'s stream, uniform on the
/// unit sphere in `n` dimensions. Depends only on `(seed, index, n)`.
pub fn sample_direction(seed: u64, index: u64, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    sample_direction_into(seed, index, n, &mut out)?;
    Ok(out)
}

/// Buffer-reusing variant of [`sample_direction`].
pub fn sample_direction_into(seed: u64, index: u64, n: usize, out: &mut Vec<f64>) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "direction dimension must be at least 1".into(),
        ));
    }
    let mut stream = Substream::new(seed, index);
    out.clear();
    out.resize(n, 0.0);
    loop {
        let mut i = 0;
        while i < n {
            let (a, b) = stream.next_normal_pair();
            out[i] = a;
            if i + 1 < n {
                out[i + 1] = b;
            }
            i += 2;
        }
        let norm_sq: f64 = out.iter().map(|x| x * x).sum();
        if norm_sq > 1e-24 {
            let inv = 1.0 / norm_sq.sqrt();
            for x in out.iter_mut() {
                *x *= inv;
            }
            return Ok(());
        }
        // Astronomically unlikely near-zero draw; continue the same stream.
    }
}

/// Smallest `N` with `(1 - alpha)^N <= delta`, i.e.
/// `ceil(ln(delta) / ln(1 - alpha))`, at least 1.
pub fn required_samples(alpha: f64, delta: f64) -> Result<u64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput("alpha must lie in (0, 1)".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput("delta must lie in (0, 1)".into()));
    }
    let ratio = delta.ln() / (1.0 - alpha).ln();
    Ok((ratio.ceil() as u64).max(1))
}

/// Probability that `n` uniform samples all miss a certifying set of measure
/// at least `alpha_floor`: `(1 - alpha_floor)^n`.
pub fn residual_probability(alpha_floor: f64, n: u64) -> Result<f64> {
    if !(alpha_floor > 0.0 && alpha_floor <= 1.0) {
        return Err(Error::InvalidInput("alpha floor must lie in (0, 1]".into()));
    }
    if n == 0 {
        return Ok(1.0);
    }
    if alpha_floor == 1.0 {
        return Ok(0.0);
    }
    Ok((n as f64 * (1.0 - alpha_floor).ln()).exp())
}

/// Exact (Clopper-Pearson) two-sided binomial confidence interval.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::InvalidInput(
            "interval requires 0 <= successes <= trials with trials >= 1".into(),
        ));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidInput("confidence must lie in (0, 1)".into()));
    }
    let tail = (1.0 - confidence) / 2.0;
    let (h, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 {
        0.0
    } else {
        Beta::new(h, n - h + 1.0)
            .map_err(|e| Error::Internal(format!("beta distribution: {e}")))?
            .inverse_cdf(tail)
    };
    let upper = if successes == trials {
        1.0
    } else {
        Beta::new(h + 1.0, n - h)
            .map_err(|e| Error::Internal(format!("beta distribution: {e}")))?
            .inverse_cdf(1.0 - tail)
    };
    Ok((lower, upper))
}

/// Monte Carlo estimate of the certifying measure.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEstimate {
    pub hits: u64,
    pub samples: u64,
    pub alpha_hat: f64,
    /// 95% Clopper-Pearson interval.
    pub interval: (f64, f64),
    /// Certifying sample indices, ascending.
    pub hit_indices: Vec<u64>,
}

/// Estimates the measure of the certifying set by sampling `config.count`
/// directions and counting certificate passes.
pub fn estimate_alpha(
    problem: &Problem,
    config: &SampleConfig,
    tol: &Tolerance,
) -> Result<AlphaEstimate> {
    config.validate()?;
    let decs = ProblemDecompositions::new(problem);
    let scan = scan_samples(&decs, config.count, config.seed, tol, ScanMode::Full)?;
    let hits = scan.certifying.len() as u64;
    let alpha_hat = hits as f64 / config.count as f64;
    let interval = clopper_pearson(hits, config.count, 0.95)?;
    Ok(AlphaEstimate {
        hits,
        samples: config.count,
        alpha_hat,
        interval,
        hit_indices: scan.certifying,
    })
}

/// How much of the sample stream a scan should evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ScanMode {
    /// Stop after the first block that contains a certifying direction.
    EarlyExit,
    /// Evaluate every sample.
    Full,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct ScanOutcome {
    /// Certifying sample indices, ascending.
    pub certifying: Vec<u64>,
    /// Worst near-threshold zero declaration per (poly, degree).
    pub flags: BTreeMap<(usize, u32), NearZeroFlag>,
}

const SCAN_BLOCK: u64 = 4096;

/// Evaluates the certificate over sampled directions. Results are identical
/// for a fixed `(seed, count)` regardless of the rayon pool width: blocks are
/// fixed index ranges, per-index work is pure, and the reductions below are
/// order-independent.
pub(crate) fn scan_samples(
    decs: &ProblemDecompositions,
    count: u64,
    seed: u64,
    tol: &Tolerance,
    mode: ScanMode,
) -> Result<ScanOutcome> {
    let n = decs.dimension();
    let mut outcome = ScanOutcome::default();
    let mut start = 0u64;
    while start < count {
        let end = (start + SCAN_BLOCK).min(count);
        let (mut hits, flags, error) = (start..end)
            .into_par_iter()
            .fold(
                || (Vec::new(), BTreeMap::new(), None::<Error>),
                |(mut hits, mut flags, mut error), index| {
                    if error.is_some() {
                        return (hits, flags, error);
                    }
                    let mut direction = Vec::new();
                    let mut scratch = Vec::new();
                    let mut local_flags = Vec::new();
                    match sample_direction_into(seed, index, n, &mut direction).and_then(|()| {
                        decs.certifies_with_flags(&direction, tol, &mut scratch, &mut local_flags)
                    }) {
                        Ok(true) => hits.push(index),
                        Ok(false) => {}
                        Err(e) => error = Some(e),
                    }
                    for (poly, flag) in local_flags {
                        merge_flag(&mut flags, poly, flag);
                    }
                    (hits, flags, error)
                },
            )
            .reduce(
                || (Vec::new(), BTreeMap::new(), None),
                |(mut ha, mut fa, ea), (hb, fb, eb)| {
                    ha.extend(hb);
                    for ((poly, degree), flag) in fb {
                        merge_flag_keyed(&mut fa, poly, degree, flag);
                    }
                    (ha, fa, ea.or(eb))
                },
            );
        if let Some(e) = error {
            return Err(e);
        }
        hits.sort_unstable();
        let found = !hits.is_empty();
        outcome.certifying.extend(hits);
        for ((poly, degree), flag) in flags {
            merge_flag_keyed(&mut outcome.flags, poly, degree, flag);
        }
        if found && mode == ScanMode::EarlyExit {
            break;
        }
        start = end;
    }
    Ok(outcome)
}

fn merge_flag(map: &mut BTreeMap<(usize, u32), NearZeroFlag>, poly: usize, flag: NearZeroFlag) {
    merge_flag_keyed(map, poly, flag.degree, flag);
}

fn merge_flag_keyed(
    map: &mut BTreeMap<(usize, u32), NearZeroFlag>,
    poly: usize,
    degree: u32,
    flag: NearZeroFlag,
) {
    map.entry((poly, degree))
        .and_modify(|existing| {
            if flag.magnitude > existing.magnitude {
                *existing = flag;
            }
        })
        .or_insert(flag);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_problem;

    #[test]
    fn directions_are_unit_and_reproducible() {
        for n in [1, 2, 3, 7] {
            for index in [0u64, 1, 999] {
                let d = sample_direction(42, index, n).unwrap();
                let norm: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12, "norm {norm} for n={n}");
                assert_eq!(d, sample_direction(42, index, n).unwrap());
            }
        }
        assert_ne!(
            sample_direction(42, 0, 3).unwrap(),
            sample_direction(42, 1, 3).unwrap()
        );
        assert_ne!(
            sample_direction(42, 0, 3).unwrap(),
            sample_direction(43, 0, 3).unwrap()
        );
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(sample_direction(1, 0, 0).is_err());
    }

    #[test]
    fn required_samples_closed_form() {
        assert_eq!(required_samples(0.1, 0.01).unwrap(), 44);
        assert_eq!(required_samples(0.5, 0.5).unwrap(), 1);
        assert_eq!(required_samples(0.01, 0.001).unwrap(), 688);
        assert!(required_samples(0.0, 0.5).is_err());
        assert!(required_samples(0.5, 1.0).is_err());
    }

    #[test]
    fn residual_probability_closed_form() {
        let p = residual_probability(0.25, 16).unwrap();
        let expected = 0.75f64.powi(16);
        assert!(((p - expected) / expected).abs() <= 1e-12);
        assert_eq!(residual_probability(0.3, 0).unwrap(), 1.0);
        assert_eq!(residual_probability(1.0, 1).unwrap(), 0.0);
        assert!(residual_probability(0.0, 4).is_err());
        assert!(residual_probability(1.5, 4).is_err());
    }

    #[test]
    fn residual_probability_is_monotone() {
        let mut previous = 1.0;
        for n in 1..200u64 {
            let p = residual_probability(0.05, n).unwrap();
            assert!(p < previous);
            previous = p;
        }
        let mut previous = 1.0;
        for step in 1..100 {
            let alpha = step as f64 / 100.0;
            let p = residual_probability(alpha, 7).unwrap();
            assert!(p < previous, "alpha={alpha}");
            previous = p;
        }
    }

    #[test]
    fn required_samples_achieves_delta() {
        for &alpha in &[0.01, 0.05, 0.1, 0.2, 0.3, 0.5] {
            for &delta in &[0.001, 0.005, 0.01, 0.05, 0.1] {
                let n = required_samples(alpha, delta).unwrap();
                let residual = residual_probability(alpha, n).unwrap();
                assert!(
                    residual <= delta * (1.0 + 1e-12),
                    "alpha={alpha} delta={delta} n={n} residual={residual}"
                );
            }
        }
    }

    #[test]
    fn clopper_pearson_basics() {
        let (lo, hi) = clopper_pearson(0, 100, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.06);
        let (lo, hi) = clopper_pearson(100, 100, 0.95).unwrap();
        assert!(lo > 0.94 && lo < 1.0);
        assert_eq!(hi, 1.0);
        let (lo, hi) = clopper_pearson(50, 100, 0.95).unwrap();
        assert!(lo < 0.5 && 0.5 < hi);
        // Known reference value: 95% CP interval for 50/100 is about
        // (0.3983, 0.6017).
        assert!((lo - 0.3983).abs() < 2e-3, "lo={lo}");
        assert!((hi - 0.6017).abs() < 2e-3, "hi={hi}");
    }

    #[test]
    fn estimate_alpha_on_definite_objectives() {
        let bounded = parse_problem("dim 2\nobjective: x1^2 + x2^2\n").unwrap();
        let config = SampleConfig::new(500, 7);
        let est = estimate_alpha(&bounded, &config, &Tolerance::default()).unwrap();
        assert_eq!(est.hits, 0);
        assert_eq!(est.alpha_hat, 0.0);
        assert_eq!(est.interval.0, 0.0);

        let negative = parse_problem("dim 2\nobjective: -(x1^4) - x2^4\n").unwrap();
        let est = estimate_alpha(&negative, &config, &Tolerance::default()).unwrap();
        assert_eq!(est.hits, 500);
        assert_eq!(est.alpha_hat, 1.0);
    }
}
