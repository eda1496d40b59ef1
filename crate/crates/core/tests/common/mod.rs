//! Shared helpers for the integration and acceptance suites: a small seeded
//! RNG, random problem generators, and oracles kept independent of the
//! library paths they check.

use polycert::polynomial::Polynomial;

/// splitmix64; deterministic test randomness without external crates.
pub struct TestRng {
    state: u64,
}

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng {
            state: seed ^ 0x6A09_E667_F3BC_C909,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Nonzero integer in [-9, 9] as a float.
    pub fn small_int_coeff(&mut self) -> f64 {
        loop {
            let c = self.below(19) as i64 - 9;
            if c != 0 {
                return c as f64;
            }
        }
    }
}

/// Random sparse polynomial with small integer coefficients.
pub fn random_polynomial(
    rng: &mut TestRng,
    dimension: usize,
    max_degree: u32,
    max_terms: usize,
) -> Polynomial {
    let num_terms = 1 + rng.below(max_terms as u64) as usize;
    let mut terms = Vec::with_capacity(num_terms);
    for _ in 0..num_terms {
        let degree = rng.below(max_degree as u64 + 1) as u32;
        let mut exponents = vec![0u32; dimension];
        for _ in 0..degree {
            exponents[rng.below(dimension as u64) as usize] += 1;
        }
        terms.push((exponents, rng.small_int_coeff()));
    }
    Polynomial::from_terms(dimension, terms).unwrap()
}

/// Like [`random_polynomial`] but never the zero polynomial.
pub fn random_nonzero_polynomial(
    rng: &mut TestRng,
    dimension: usize,
    max_degree: u32,
    max_terms: usize,
) -> Polynomial {
    loop {
        let p = random_polynomial(rng, dimension, max_degree, max_terms);
        if !p.is_zero() {
            return p;
        }
    }
}

/// Uniform unit vector via normalized gaussians (Box-Muller on the test RNG).
pub fn random_unit(rng: &mut TestRng, dimension: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dimension)
            .map(|_| {
                let u1 = (rng.uniform() + f64::MIN_POSITIVE).min(1.0);
                let u2 = rng.uniform();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for x in &mut v {
                *x /= norm;
            }
            return v;
        }
    }
}

/// Central finite-difference gradient, the oracle for the analytic one.
pub fn finite_difference_gradient(p: &Polynomial, x: &[f64], step: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            hi[j] += step;
            lo[j] -= step;
            (p.evaluate(&hi).unwrap() - p.evaluate(&lo).unwrap()) / (2.0 * step)
        })
        .collect()
}

/// Direct interpretive evaluation of an expression source at a point,
/// independent of the expansion-based parser. Same grammar, but every node
/// evaluates to a number immediately.
pub fn interpret_expression(src: &str, x: &[f64]) -> Result<f64, String> {
    let mut chars: Vec<char> = src.chars().collect();
    chars.retain(|c| !c.is_whitespace());
    let mut pos = 0usize;
    let value = interp_expr(&chars, &mut pos, x)?;
    if pos != chars.len() {
        return Err(format!("trailing input at {pos}"));
    }
    Ok(value)
}

fn interp_expr(chars: &[char], pos: &mut usize, x: &[f64]) -> Result<f64, String> {
    let mut acc = interp_term(chars, pos, x)?;
    while let Some(&c) = chars.get(*pos) {
        match c {
            '+' => {
                *pos += 1;
                acc += interp_term(chars, pos, x)?;
            }
            '-' => {
                *pos += 1;
                acc -= interp_term(chars, pos, x)?;
            }
            _ => break,
        }
    }
    Ok(acc)
}

fn interp_term(chars: &[char], pos: &mut usize, x: &[f64]) -> Result<f64, String> {
    let mut acc = interp_factor(chars, pos, x)?;
    while chars.get(*pos) == Some(&'*') {
        *pos += 1;
        acc *= interp_factor(chars, pos, x)?;
    }
    Ok(acc)
}

fn interp_factor(chars: &[char], pos: &mut usize, x: &[f64]) -> Result<f64, String> {
    let base = interp_base(chars, pos, x)?;
    if chars.get(*pos) == Some(&'^') {
        *pos += 1;
        let mut digits = String::new();
        while let Some(&c) = chars.get(*pos) {
            if c.is_ascii_digit() {
                digits.push(c);
                *pos += 1;
            } else {
                break;
            }
        }
        let exponent: i32 = digits.parse().map_err(|_| "bad exponent".to_string())?;
        return Ok(base.powi(exponent));
    }
    Ok(base)
}

fn interp_base(chars: &[char], pos: &mut usize, x: &[f64]) -> Result<f64, String> {
    match chars.get(*pos) {
        Some('-') => {
            *pos += 1;
            Ok(-interp_base(chars, pos, x)?)
        }
        Some('(') => {
            *pos += 1;
            let inner = interp_expr(chars, pos, x)?;
            if chars.get(*pos) != Some(&')') {
                return Err("expected ')'".into());
            }
            *pos += 1;
            Ok(inner)
        }
        Some('x') => {
            *pos += 1;
            let mut digits = String::new();
            while let Some(&c) = chars.get(*pos) {
                if c.is_ascii_digit() {
                    digits.push(c);
                    *pos += 1;
                } else {
                    break;
                }
            }
            let index: usize = digits.parse().map_err(|_| "bad variable".to_string())?;
            x.get(index - 1)
                .copied()
                .ok_or_else(|| format!("variable x{index} out of range"))
        }
        Some(c) if c.is_ascii_digit() => {
            let mut text = String::new();
            while let Some(&c) = chars.get(*pos) {
                if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' {
                    text.push(c);
                    *pos += 1;
                    if (c == 'e' || c == 'E')
                        && matches!(chars.get(*pos), Some(&'+') | Some(&'-'))
                    {
                        text.push(chars[*pos]);
                        *pos += 1;
                    }
                } else {
                    break;
                }
            }
            text.parse().map_err(|_| format!("bad number '{text}'"))
        }
        other => Err(format!("unexpected {other:?}")),
    }
}

/// Random expression source conforming to the grammar: depth-bounded sums of
/// products of powered bases.
pub fn random_expression(rng: &mut TestRng, dimension: usize, depth: u32) -> String {
    let mut out = String::new();
    gen_expr(rng, dimension, depth, &mut out);
    out
}

fn gen_expr(rng: &mut TestRng, n: usize, depth: u32, out: &mut String) {
    let terms = 1 + rng.below(3);
    for i in 0..terms {
        if i > 0 {
            out.push_str(if rng.below(2) == 0 { " + " } else { " - " });
        }
        gen_term(rng, n, depth, out);
    }
}

fn gen_term(rng: &mut TestRng, n: usize, depth: u32, out: &mut String) {
    let factors = 1 + rng.below(2);
    for i in 0..factors {
        if i > 0 {
            out.push('*');
        }
        gen_factor(rng, n, depth, out);
    }
}

fn gen_factor(rng: &mut TestRng, n: usize, depth: u32, out: &mut String) {
    gen_base(rng, n, depth, out);
    if rng.below(2) == 0 {
        out.push('^');
        out.push_str(&rng.below(4).to_string());
    }
}

fn gen_base(rng: &mut TestRng, n: usize, depth: u32, out: &mut String) {
    match rng.below(if depth > 0 { 4 } else { 3 }) {
        0 => {
            let value = rng.below(10);
            out.push_str(&value.to_string());
        }
        1 => {
            out.push('x');
            out.push_str(&(1 + rng.below(n as u64)).to_string());
        }
        2 => {
            out.push('-');
            gen_base(rng, n, depth, out);
        }
        _ => {
            out.push('(');
            gen_expr(rng, n, depth - 1, out);
            out.push(')');
        }
    }
}

/// Guarded agreement check: `|a - b| <= tol * (1 + scale)`.
pub fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + scale)
}

// ---------------------------------------------------------------------------
// Shared invariant checks, used by both the property and acceptance suites.

use polycert::asymptotics::{classify, witness_threshold, AsymptoticSign, Tolerance};

/// Homogeneous parts sum back to the original polynomial, term for term.
pub fn check_reassembly(p: &Polynomial) {
    assert_eq!(&p.decompose().reassemble(), p);
}

/// Euler's identity for homogeneous parts: <grad phi_k(d), d> = k * phi_k(d).
pub fn check_euler_identity(p: &Polynomial, d: &[f64]) {
    for (degree, part) in p.decompose().parts() {
        let value = part.evaluate(d).unwrap();
        let grad = part.gradient(d).unwrap();
        let radial: f64 = grad.iter().zip(d).map(|(g, x)| g * x).sum();
        let expected = degree as f64 * value;
        assert!(
            (radial - expected).abs() <= 1e-9 * (1.0 + expected.abs()),
            "Euler identity failed at degree {degree}: {radial} vs {expected}"
        );
    }
}

/// phi_k(lambda * d) = lambda^k * phi_k(d).
pub fn check_homogeneous_scaling(p: &Polynomial, d: &[f64]) {
    for (degree, part) in p.decompose().parts() {
        let base = part.evaluate(d).unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let scaled_point: Vec<f64> = d.iter().map(|x| lambda * x).collect();
            let scaled = part.evaluate(&scaled_point).unwrap();
            let expected = lambda.powi(degree as i32) * base;
            assert!(
                (scaled - expected).abs() <= 1e-10 * (1.0 + expected.abs() + scaled.abs()),
                "scaling failed: degree {degree} lambda {lambda}: {scaled} vs {expected}"
            );
        }
    }
}

/// Direct evaluation along a ray equals the ray-coefficient expansion.
pub fn check_ray_consistency(p: &Polynomial, d: &[f64]) {
    let coefficients = match p.decompose().restrict_to_ray(d) {
        Ok(c) => c,
        Err(_) => return,
    };
    for t in [0.5, 1.0, 3.0, 10.0] {
        let point: Vec<f64> = d.iter().map(|x| t * x).collect();
        let direct = p.evaluate(&point).unwrap();
        let mut via_ray = 0.0;
        let mut scale = 0.0;
        for (k, &c) in coefficients.iter().enumerate() {
            let term = c * t.powi(k as i32);
            via_ray += term;
            scale += term.abs();
        }
        assert!(
            (direct - via_ray).abs() <= 1e-9 * (1.0 + direct.abs() + scale),
            "ray consistency failed at t={t}: {direct} vs {via_ray}"
        );
    }
}

/// (mu, sign) and the leading value are invariant under scaling the
/// direction before normalization.
pub fn check_classification_scaling(p: &Polynomial, d: &[f64]) {
    let dec = p.decompose();
    let tol = Tolerance::default();
    let mut reference: Option<(Option<u32>, AsymptoticSign, f64)> = None;
    for lambda in [1e-3, 1.0, 1e3] {
        let scaled: Vec<f64> = d.iter().map(|x| lambda * x).collect();
        let norm: f64 = scaled.iter().map(|x| x * x).sum::<f64>().sqrt();
        let unit: Vec<f64> = scaled.iter().map(|x| x / norm).collect();
        let profile = classify(&dec, &unit, &tol).unwrap();
        match &reference {
            None => reference = Some((profile.mu, profile.sign, profile.leading_value)),
            Some((mu, sign, leading)) => {
                assert_eq!(profile.mu, *mu, "mu changed under scaling {lambda}");
                assert_eq!(
                    std::mem::discriminant(&profile.sign),
                    std::mem::discriminant(sign),
                    "sign tag changed under scaling {lambda}"
                );
                assert!(
                    (profile.leading_value - leading).abs() <= 1e-9 * (1.0 + leading.abs()),
                    "leading value drifted under scaling {lambda}"
                );
            }
        }
    }
}

/// When a profile certifies, the Cauchy witness really pins the restriction
/// below zero along the ray.
pub fn check_witness_validity(p: &Polynomial, d: &[f64]) {
    let tol = Tolerance::default();
    let profile = match classify(&p.decompose(), d, &tol) {
        Ok(profile) => profile,
        Err(_) => return,
    };
    if !profile.sign.certifies(&tol) {
        return;
    }
    let t_witness = witness_threshold(&profile).unwrap();
    assert!(t_witness >= 1.0);
    let values: Vec<f64> = [1.0, 2.0, 10.0, 100.0]
        .iter()
        .map(|m| profile.restriction_at(m * t_witness))
        .collect();
    for (i, v) in values.iter().enumerate() {
        assert!(*v < 0.0, "restriction not negative at checkpoint {i}: {v}");
    }
    assert!(
        values[3] <= values[2],
        "restriction increased between the last checkpoints"
    );
}
