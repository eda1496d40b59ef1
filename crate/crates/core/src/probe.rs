//! Heuristic search of degenerate certificate strata.
//!
//! Uniform sampling cannot find certifying directions that lie inside the
//! zero set of some leading form: those strata have measure zero on the
//! sphere. This module hunts them directly. For each candidate subset `S` of
//! polynomial indices it minimizes
//!
//! ```text
//! penalty(d) = sum_{i in S} top_i(d)^2 + sum_{i not in S} max(0, top_i(d) + margin)^2
//! ```
//!
//! over unit `d` by projected gradient descent, where `top_i` is the
//! full-degree homogeneous form of polynomial `i`. A zero penalty means the
//! forms in `S` vanish at `d` while all others sit at least `margin` below
//! zero. Terminal points with penalty below `convergence_tol` become
//! candidate directions; the certificate driver screens every candidate with
//! the same check applied to sampled directions, so the probe can never
//! introduce a spurious UNBOUNDED verdict.

use rayon::prelude::*;

use crate::asymptotics::ProblemDecompositions;
use crate::error::{Error, Result};
use crate::polynomial::Polynomial;
use crate::sampling::sample_direction;

/// Knobs for the stratum search.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// Random restarts per subset.
    pub restarts: u32,
    /// Iteration budget per restart.
    pub max_iterations: u32,
    /// Initial gradient step; adapted up and down during the descent.
    pub initial_step: f64,
    /// Penalty level below which a terminal point becomes a candidate.
    pub convergence_tol: f64,
    /// Full subset enumeration is attempted only when `m + 1` is at most
    /// this; beyond it only the empty set, singletons, and the full set.
    pub subset_cap: u32,
    /// Slack forced on the forms outside the subset.
    pub margin: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            restarts: 32,
            max_iterations: 500,
            initial_step: 0.1,
            convergence_tol: 1e-14,
            subset_cap: 10,
            margin: 1e-6,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 || self.subset_cap == 0 {
            return Err(Error::InvalidInput(
                "probe restarts, iterations, and subset cap must be positive".into(),
            ));
        }
        if !(self.initial_step > 0.0) || !(self.convergence_tol > 0.0) || !(self.margin > 0.0) {
            return Err(Error::InvalidInput(
                "probe step, tolerance, and margin must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Full-degree forms of the problem's polynomials, shared by the descents.
struct TopForms<'a> {
    forms: Vec<&'a Polynomial>,
}

impl<'a> TopForms<'a> {
    /// `None` if any polynomial is zero: no direction can certify then, so
    /// the probe has nothing to search for.
    fn new(decs: &'a ProblemDecompositions) -> Option<Self> {
        let forms = decs
            .decompositions()
            .iter()
            .map(|dec| dec.top_form().map(|(_, part)| part))
            .collect::<Option<Vec<_>>>()?;
        Some(TopForms { forms })
    }

    fn len(&self) -> usize {
        self.forms.len()
    }

    fn penalty(&self, subset: u32, d: &[f64], margin: f64) -> f64 {
        let mut total = 0.0;
        for (i, form) in self.forms.iter().enumerate() {
            let v = form.eval_unchecked(d);
            let r = if subset & (1 << i) != 0 {
                v
            } else {
                (v + margin).max(0.0)
            };
            total += r * r;
        }
        total
    }

    fn penalty_and_gradient(&self, subset: u32, d: &[f64], margin: f64) -> (f64, Vec<f64>) {
        let mut total = 0.0;
        let mut grad = vec![0.0; d.len()];
        for (i, form) in self.forms.iter().enumerate() {
            let v = form.eval_unchecked(d);
            let r = if subset & (1 << i) != 0 {
                v
            } else {
                (v + margin).max(0.0)
            };
            total += r * r;
            if r != 0.0 {
                let form_grad = form.gradient(d).expect("dimension fixed by construction");
                for (g, fg) in grad.iter_mut().zip(form_grad) {
                    *g += 2.0 * r * fg;
                }
            }
        }
        (total, grad)
    }
}

/// Stratum penalty for an index subset at a unit direction. Zero exactly
/// when every subset form vanishes and every other form is at or below
/// `-margin`.
pub fn penalty(
    decs: &ProblemDecompositions,
    subset: &[usize],
    direction: &[f64],
    margin: f64,
) -> f64 {
    let Some(tops) = TopForms::new(decs) else {
        return f64::INFINITY;
    };
    let mut mask = 0u32;
    for &i in subset {
        mask |= 1 << i;
    }
    tops.penalty(mask, direction, margin)
}

fn normalize_in_place(v: &mut [f64]) -> bool {
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    if !(norm_sq > 0.0) || !norm_sq.is_finite() {
        return false;
    }
    let inv = 1.0 / norm_sq.sqrt();
    for x in v.iter_mut() {
        *x *= inv;
    }
    true
}

const STEP_GROWTH: f64 = 4.0;
const STEP_MAX: f64 = 1e12;
const STEP_MIN: f64 = 1e-20;

/// One projected-gradient descent on the sphere from `start`.
///
/// Each iteration takes the Euclidean gradient, projects it onto the tangent
/// plane at `d`, and retracts `d - eta * g_tan` back to the sphere. The step
/// starts at a multiple of the previous accepted step and halves until the
/// penalty decreases; degenerate strata flatten the penalty to high order,
/// so the step must be allowed to grow without bound between iterations.
/// The descent runs to stall or the iteration budget rather than stopping at
/// the acceptance tolerance: the deeper it converges, the more robustly the
/// candidate survives certificate screening.
fn descend(tops: &TopForms, subset: u32, start: Vec<f64>, config: &ProbeConfig) -> (Vec<f64>, f64) {
    let mut d = start;
    let (mut value, mut grad) = tops.penalty_and_gradient(subset, &d, config.margin);
    let mut step = config.initial_step;
    for _ in 0..config.max_iterations {
        if value == 0.0 {
            break;
        }
        let radial: f64 = grad.iter().zip(&d).map(|(g, x)| g * x).sum();
        let tangent: Vec<f64> = grad
            .iter()
            .zip(&d)
            .map(|(g, x)| g - radial * x)
            .collect();
        if tangent.iter().map(|t| t * t).sum::<f64>() == 0.0 {
            break;
        }
        step = (step * STEP_GROWTH).min(STEP_MAX);
        let mut accepted = false;
        while step >= STEP_MIN {
            let mut candidate: Vec<f64> = d
                .iter()
                .zip(&tangent)
                .map(|(x, t)| x - step * t)
                .collect();
            if normalize_in_place(&mut candidate) {
                let candidate_value = tops.penalty(subset, &candidate, config.margin);
                if candidate_value < value {
                    d = candidate;
                    let refreshed = tops.penalty_and_gradient(subset, &d, config.margin);
                    value = refreshed.0;
                    grad = refreshed.1;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (d, value)
}

fn subsets_to_try(num_polys: usize, cap: u32) -> Vec<u32> {
    if num_polys as u32 <= cap {
        (0..(1u32 << num_polys)).collect()
    } else {
        let mut masks = vec![0u32];
        masks.extend((0..num_polys).map(|i| 1u32 << i));
        masks.push(((1u64 << num_polys) - 1) as u32);
        masks
    }
}

const ANGULAR_DEDUP: f64 = 1e-6;
/// Probe restarts draw from a sample index range far above any realistic
/// sampling budget, so probe starts never collide with scan directions.
const PROBE_INDEX_BASE: u64 = 1 << 48;

/// Searches every configured stratum and returns candidate unit directions
/// with terminal penalty at or below `convergence_tol`, deduplicated by
/// angular distance and sorted canonically. Candidates are unscreened; the
/// caller must run them through the certificate check.
pub fn find_candidates(
    decs: &ProblemDecompositions,
    config: &ProbeConfig,
    seed: u64,
) -> Vec<Vec<f64>> {
    if config.validate().is_err() {
        return Vec::new();
    }
    let Some(tops) = TopForms::new(decs) else {
        return Vec::new();
    };
    if tops.len() > 32 {
        return Vec::new();
    }
    let n = decs.dimension();
    let masks = subsets_to_try(tops.len(), config.subset_cap);

    let mut runs: Vec<(u64, u32)> = Vec::with_capacity(masks.len() * config.restarts as usize);
    for (rank, &mask) in masks.iter().enumerate() {
        for restart in 0..config.restarts as u64 {
            runs.push((rank as u64 * config.restarts as u64 + restart, mask));
        }
    }

    let mut terminals: Vec<(u64, Vec<f64>)> = runs
        .into_par_iter()
        .filter_map(|(rank, mask)| {
            let start = sample_direction(seed, PROBE_INDEX_BASE + rank, n).ok()?;
            let (d, value) = descend(&tops, mask, start, config);
            (value <= config.convergence_tol).then_some((rank, d))
        })
        .collect();
    terminals.sort_by_key(|&(rank, _)| rank);

    let mut kept: Vec<Vec<f64>> = Vec::new();
    'outer: for (_, d) in terminals {
        for existing in &kept {
            let dot: f64 = existing.iter().zip(&d).map(|(a, b)| a * b).sum();
            if dot.clamp(-1.0, 1.0).acos() <= ANGULAR_DEDUP {
                continue 'outer;
            }
        }
        kept.push(d);
    }
    kept.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{certificate_check, Tolerance};
    use crate::parser::parse_problem;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn example_decs() -> ProblemDecompositions {
        let problem = parse_problem(
            "dim 2\nobjective: (x1^2 - x2^2)^2 - x2^3\nconstraint: (x1^2 - x2^2)^2 - x1^2*x2^2\nconstraint: 1 - x1^2 - x2^2\n",
        )
        .unwrap();
        ProblemDecompositions::new(&problem)
    }

    #[test]
    fn penalty_vanishes_on_the_degenerate_stratum() {
        let decs = example_decs();
        let diag = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        let p = penalty(&decs, &[0], &diag, 1e-6);
        assert!(p < 1e-25, "penalty {p}");
    }

    #[test]
    fn penalty_is_positive_off_stratum() {
        let decs = example_decs();
        let axis = [1.0, 0.0];
        // Direct evaluation: objective top form is (1-0)^2 = 1 (squared: 1)
        // and g1's top form is 1, violating the margin by (1 + margin).
        let margin = 1e-6;
        let p = penalty(&decs, &[0], &axis, margin);
        let expected = 1.0 + (1.0 + margin) * (1.0 + margin);
        assert!((p - expected).abs() < 1e-12, "penalty {p}");
    }

    #[test]
    fn empty_subset_penalty_zero_when_all_tops_negative() {
        let problem = parse_problem("dim 2\nobjective: -(x1^4) - x2^4\n").unwrap();
        let decs = ProblemDecompositions::new(&problem);
        assert_eq!(penalty(&decs, &[], &[1.0, 0.0], 1e-6), 0.0);
    }

    #[test]
    fn tangential_gradient_matches_great_circle_derivative() {
        let decs = example_decs();
        let tops = TopForms::new(&decs).unwrap();
        let mask = 0b001u32;
        let margin = 1e-6;
        for trial in 0..25u64 {
            let d = sample_direction(99, trial, 2).unwrap();
            // Unit tangent at d in 2D.
            let u = [-d[1], d[0]];
            let (_, grad) = tops.penalty_and_gradient(mask, &d, margin);
            let radial: f64 = grad.iter().zip(&d).map(|(g, x)| g * x).sum();
            let tangential: f64 = grad
                .iter()
                .zip(&d)
                .zip(&u)
                .map(|((g, x), uu)| (g - radial * x) * uu)
                .sum();
            let h = 1e-6;
            let at = |s: f64| {
                let p = [
                    s.cos() * d[0] + s.sin() * u[0],
                    s.cos() * d[1] + s.sin() * u[1],
                ];
                tops.penalty(mask, &p, margin)
            };
            let numeric = (at(h) - at(-h)) / (2.0 * h);
            let scale = 1.0 + numeric.abs().max(tangential.abs());
            assert!(
                (numeric - tangential).abs() <= 1e-5 * scale,
                "trial {trial}: numeric {numeric} vs analytic {tangential}"
            );
        }
    }

    #[test]
    fn finds_the_example_stratum() {
        let decs = example_decs();
        let candidates = find_candidates(&decs, &ProbeConfig::default(), 1);
        assert!(!candidates.is_empty());
        let diag_a = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        let diag_b = [-FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        let tol = Tolerance::default();
        let hit = candidates.iter().any(|c| {
            let to = |t: &[f64; 2]| {
                let dot: f64 = c.iter().zip(t).map(|(a, b)| a * b).sum();
                dot.clamp(-1.0, 1.0).acos()
            };
            let close = to(&diag_a).min(to(&diag_b)) <= 1e-3;
            let profiles = decs.classify_all(c, &tol).unwrap();
            close && certificate_check(&profiles, &tol)
        });
        assert!(hit, "no screened candidate near the certifying diagonals");
    }

    #[test]
    fn determinism_and_canonical_order() {
        let decs = example_decs();
        let a = find_candidates(&decs, &ProbeConfig::default(), 7);
        let b = find_candidates(&decs, &ProbeConfig::default(), 7);
        assert_eq!(a, b);
        for pair in a.windows(2) {
            let ordering = pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal);
            assert_ne!(ordering, std::cmp::Ordering::Greater);
        }
    }

    #[test]
    fn positive_definite_objective_yields_no_certifying_candidates() {
        let problem = parse_problem("dim 2\nobjective: x1^2 + x2^2\n").unwrap();
        let decs = ProblemDecompositions::new(&problem);
        let tol = Tolerance::default();
        let candidates = find_candidates(&decs, &ProbeConfig::default(), 3);
        for c in candidates {
            let profiles = decs.classify_all(&c, &tol).unwrap();
            assert!(!certificate_check(&profiles, &tol));
        }
    }

    #[test]
    fn indefinite_quartic_candidates_certify() {
        let problem = parse_problem("dim 2\nobjective: x1^4 - x2^4\n").unwrap();
        let decs = ProblemDecompositions::new(&problem);
        let tol = Tolerance::default();
        let candidates = find_candidates(&decs, &ProbeConfig::default(), 11);
        let any_certifying = candidates.iter().any(|c| {
            let profiles = decs.classify_all(c, &tol).unwrap();
            certificate_check(&profiles, &tol) && c[1].abs() > c[0].abs()
        });
        assert!(any_certifying);
    }
}
