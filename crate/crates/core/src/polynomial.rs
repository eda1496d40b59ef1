//! Sparse multivariate polynomials over `f64` with homogeneous decomposition.
//!
//! A [`Polynomial`] is a canonical term list: exponent vectors are unique,
//! stored coefficients are never exactly zero, and terms are kept in
//! descending graded-lexicographic order so equality, printing, and
//! serialization are deterministic. Coefficients are double precision by
//! design; sign decisions under tolerance happen in the `asymptotics` module.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use crate::error::{Error, Result};

/// Counts calls to [`Polynomial::decompose`]. The certificate driver promises
/// to decompose each polynomial exactly once per run; tests observe this.
static DECOMPOSE_CALLS: AtomicU64 = AtomicU64::new(0);

/// Total number of `decompose` invocations so far in this process.
pub fn decompose_call_count() -> u64 {
    DECOMPOSE_CALLS.load(AtomicOrdering::Relaxed)
}

/// A product of variable powers: exponent vector plus cached total degree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    exponents: Vec<u32>,
    degree: u32,
}

impl Monomial {
    /// Builds a monomial from per-variable exponents.
    pub fn new(exponents: Vec<u32>) -> Self {
        let degree = exponents.iter().sum();
        Monomial { exponents, degree }
    }

    /// The constant monomial (all exponents zero) in `dimension` variables.
    pub fn constant(dimension: usize) -> Self {
        Monomial {
            exponents: vec![0; dimension],
            degree: 0,
        }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Total degree, the sum of the exponents.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        self.exponents.len()
    }

    /// Evaluates the power product at `x` (lengths must already agree).
    fn eval(&self, x: &[f64]) -> f64 {
        let mut value = 1.0;
        for (&e, &xj) in self.exponents.iter().zip(x) {
            match e {
                0 => {}
                1 => value *= xj,
                _ => value *= xj.powi(e as i32),
            }
        }
        value
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let exponents = self
            .exponents
            .iter()
            .zip(&other.exponents)
            .map(|(a, b)| a + b)
            .collect();
        Monomial {
            exponents,
            degree: self.degree + other.degree,
        }
    }
}

impl Ord for Monomial {
    /// Graded lexicographic order: total degree first, then the exponent
    /// vector lexicographically (earlier variables weigh more).
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| self.exponents.cmp(&other.exponents))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial in `dimension` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dimension: usize,
    /// Terms in descending graded-lex order; coefficients are nonzero.
    terms: Vec<(Monomial, f64)>,
}

impl Polynomial {
    /// The zero polynomial (empty term set) in `dimension` variables.
    pub fn zero(dimension: usize) -> Self {
        Polynomial {
            dimension,
            terms: Vec::new(),
        }
    }

    /// A constant polynomial. A zero constant produces the zero polynomial.
    pub fn constant(dimension: usize, value: f64) -> Self {
        if value == 0.0 {
            return Self::zero(dimension);
        }
        Polynomial {
            dimension,
            terms: vec![(Monomial::constant(dimension), value)],
        }
    }

    /// The polynomial `x_{index}` (0-based variable index).
    pub fn variable(dimension: usize, index: usize) -> Result<Self> {
        if index >= dimension {
            return Err(Error::InvalidInput(format!(
                "variable index {index} out of range for dimension {dimension}"
            )));
        }
        let mut exponents = vec![0; dimension];
        exponents[index] = 1;
        Ok(Polynomial {
            dimension,
            terms: vec![(Monomial::new(exponents), 1.0)],
        })
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs. Like terms
    /// are combined and exactly-zero coefficients dropped.
    pub fn from_terms<I>(dimension: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (exponents, coeff) in terms {
            if exponents.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: exponents.len(),
                });
            }
            *map.entry(Monomial::new(exponents)).or_insert(0.0) += coeff;
        }
        Ok(Self::from_map(dimension, map))
    }

    fn from_map(dimension: usize, map: BTreeMap<Monomial, f64>) -> Self {
        let terms = map
            .into_iter()
            .rev()
            .filter(|&(_, c)| c != 0.0)
            .collect();
        Polynomial { dimension, terms }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Terms in descending graded-lex order.
    pub fn terms(&self) -> &[(Monomial, f64)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, or `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.first().map(|(m, _)| m.degree())
    }

    /// Sum of absolute coefficient values. On the unit sphere every monomial
    /// is bounded by 1 in magnitude, so this bounds `|p(d)|` for unit `d`.
    pub fn coefficient_l1_norm(&self) -> f64 {
        self.terms.iter().map(|&(_, c)| c.abs()).sum()
    }

    /// Evaluates the polynomial at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (monomial, coeff) in &self.terms {
            sum += coeff * monomial.eval(x);
        }
        sum
    }

    /// Analytic gradient at `x` via the term-wise power rule.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        let mut grad = vec![0.0; self.dimension];
        for (monomial, coeff) in &self.terms {
            let exps = monomial.exponents();
            for j in 0..self.dimension {
                let e = exps[j];
                if e == 0 {
                    continue;
                }
                let mut value = coeff * e as f64;
                for (k, &ek) in exps.iter().enumerate() {
                    let power = if k == j { ek - 1 } else { ek };
                    match power {
                        0 => {}
                        1 => value *= x[k],
                        _ => value *= x[k].powi(power as i32),
                    }
                }
                grad[j] += value;
            }
        }
        Ok(grad)
    }

    /// Splits the polynomial into its homogeneous parts by total degree.
    pub fn decompose(&self) -> HomogeneousDecomposition {
        DECOMPOSE_CALLS.fetch_add(1, AtomicOrdering::Relaxed);
        let mut parts: Vec<(u32, Polynomial, f64)> = Vec::new();
        // Terms are sorted by degree, so each part is a contiguous run.
        for (monomial, coeff) in self.terms.iter().rev() {
            let degree = monomial.degree();
            match parts.last_mut() {
                Some((d, part, l1)) if *d == degree => {
                    part.terms.push((monomial.clone(), *coeff));
                    *l1 += coeff.abs();
                }
                _ => parts.push((
                    degree,
                    Polynomial {
                        dimension: self.dimension,
                        terms: vec![(monomial.clone(), *coeff)],
                    },
                    coeff.abs(),
                )),
            }
        }
        // Each part was filled in ascending term order; restore the canonical
        // descending order within the part.
        for (_, part, _) in &mut parts {
            part.terms.reverse();
        }
        HomogeneousDecomposition {
            dimension: self.dimension,
            parts,
        }
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c))
                .collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        if factor == 0.0 {
            return Polynomial::zero(self.dimension);
        }
        Polynomial {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * factor))
                .collect(),
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dimension, other.dimension, "dimension mismatch in add");
        // Merge two descending-sorted term lists.
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            match self.terms[i].0.cmp(&other.terms[j].0) {
                Ordering::Greater => {
                    terms.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    terms.push(other.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = self.terms[i].1 + other.terms[j].1;
                    if c != 0.0 {
                        terms.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        terms.extend_from_slice(&self.terms[i..]);
        terms.extend_from_slice(&other.terms[j..]);
        Polynomial {
            dimension: self.dimension,
            terms,
        }
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        self.mul_capped(other, usize::MAX)
            .expect("uncapped multiplication cannot exceed the limit")
    }

    /// Multiplication with a term-count cap, used by the parser's expansion.
    pub fn mul_capped(&self, other: &Polynomial, cap: usize) -> Result<Polynomial> {
        assert_eq!(self.dimension, other.dimension, "dimension mismatch in mul");
        let product_bound = self.terms.len().saturating_mul(other.terms.len());
        if product_bound > cap.saturating_mul(8) {
            return Err(Error::ResourceLimit(format!(
                "expansion would exceed the term cap of {cap}"
            )));
        }
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *map.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        let result = Self::from_map(self.dimension, map);
        if result.num_terms() > cap {
            return Err(Error::ResourceLimit(format!(
                "expansion exceeded the term cap of {cap}"
            )));
        }
        Ok(result)
    }

    pub fn pow(&self, exponent: u32) -> Polynomial {
        self.pow_capped(exponent, usize::MAX)
            .expect("uncapped power cannot exceed the limit")
    }

    /// Integer power by repeated squaring, with a term-count cap.
    pub fn pow_capped(&self, exponent: u32, cap: usize) -> Result<Polynomial> {
        let mut result = Polynomial::constant(self.dimension, 1.0);
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_capped(&base, cap)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_capped(&base, cap)?;
            }
        }
        Ok(result)
    }
}

impl fmt::Display for Polynomial {
    /// Canonical text form that re-parses to an identical term set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (monomial, coeff)) in self.terms.iter().enumerate() {
            let negative = *coeff < 0.0;
            if idx == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let magnitude = coeff.abs();
            let is_constant = monomial.degree() == 0;
            if is_constant {
                write!(f, "{magnitude}")?;
            } else if magnitude != 1.0 {
                write!(f, "{magnitude}*")?;
            } else if idx == 0 && negative {
                // A bare leading "-x^2" would re-parse as (-x)^2; keep the
                // unit coefficient explicit instead.
                write!(f, "1*")?;
            }
            if !is_constant {
                let mut first = true;
                for (j, &e) in monomial.exponents().iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    if !first {
                        write!(f, "*")?;
                    }
                    first = false;
                    if e == 1 {
                        write!(f, "x{}", j + 1)?;
                    } else {
                        write!(f, "x{}^{}", j + 1, e)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Degree-indexed homogeneous parts of a polynomial.
///
/// Reassembling the stored parts reproduces the original polynomial exactly;
/// every part is nonzero and purely homogeneous of its key degree.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousDecomposition {
    dimension: usize,
    /// `(degree, part, coefficient l1 norm)`, ascending by degree.
    parts: Vec<(u32, Polynomial, f64)>,
}

impl HomogeneousDecomposition {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Largest stored degree; `None` for the zero polynomial (conceptually
    /// degree negative infinity).
    pub fn max_degree(&self) -> Option<u32> {
        self.parts.last().map(|&(d, _, _)| d)
    }

    /// Iterates `(degree, part)` in ascending degree order.
    pub fn parts(&self) -> impl Iterator<Item = (u32, &Polynomial)> {
        self.parts.iter().map(|(d, p, _)| (*d, p))
    }

    pub fn part(&self, degree: u32) -> Option<&Polynomial> {
        self.parts
            .binary_search_by_key(&degree, |&(d, _, _)| d)
            .ok()
            .map(|i| &self.parts[i].1)
    }

    /// l1 norm of the coefficients of the degree-`degree` part (0 if absent).
    pub fn coefficient_l1_norm(&self, degree: u32) -> f64 {
        self.parts
            .binary_search_by_key(&degree, |&(d, _, _)| d)
            .ok()
            .map(|i| self.parts[i].2)
            .unwrap_or(0.0)
    }

    /// The full-degree part together with its degree, `None` for zero.
    pub fn top_form(&self) -> Option<(u32, &Polynomial)> {
        self.parts.last().map(|(d, p, _)| (*d, p))
    }

    /// Sums the parts back into a single polynomial.
    pub fn reassemble(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.dimension);
        for (_, part, _) in &self.parts {
            out = out.add(part);
        }
        out
    }

    /// Ray coefficients `c_k = part_k(d)` for `k = 0..=max_degree`, so that
    /// the restriction of the polynomial to the ray `t*d` is `sum c_k t^k`.
    /// Returns an empty vector for the zero polynomial.
    pub fn restrict_to_ray(&self, direction: &[f64]) -> Result<Vec<f64>> {
        let mut coefficients = Vec::new();
        self.restrict_to_ray_into(direction, &mut coefficients)?;
        Ok(coefficients)
    }

    /// Buffer-reusing variant of [`Self::restrict_to_ray`].
    pub fn restrict_to_ray_into(&self, direction: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if direction.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: direction.len(),
            });
        }
        if direction.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidInput(
                "ray restriction requires a nonzero direction".into(),
            ));
        }
        out.clear();
        let Some(max_degree) = self.max_degree() else {
            return Ok(());
        };
        out.resize(max_degree as usize + 1, 0.0);
        for (degree, part, _) in &self.parts {
            out[*degree as usize] = part.eval_unchecked(direction);
        }
        Ok(())
    }
}
