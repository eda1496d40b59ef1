//! Parsing of polynomial expressions and problem files.
//!
//! Expressions use variables `x1..xn`, the operators `+ - * ^`, parentheses,
//! and real literals (decimal or scientific). Exponents are non-negative
//! integer literals. Juxtaposition is not multiplication: write `2*x1`, not
//! `2x1`. Parsing fully expands the expression into a canonical sparse
//! polynomial, subject to a term cap so pathological powers fail cleanly.
//!
//! Problem files are line oriented:
//!
//! ```text
//! dim 2
//! objective: (x1^2 - x2^2)^2 - x2^3
//! constraint: 1 - x1^2 - x2^2
//! name: my-problem
//! ```
//!
//! `dim` must come first; each `constraint:` line means `expr <= 0`; blank
//! lines and lines starting with `#` are ignored.

use crate::error::{Error, Result};
use crate::polynomial::Polynomial;

/// Default bound on the number of terms an expression may expand to.
pub const DEFAULT_TERM_CAP: usize = 100_000;

/// A polynomial optimization problem: minimize `objective` over the set
/// where every constraint polynomial is `<= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub dimension: usize,
    pub objective: Polynomial,
    pub constraints: Vec<Polynomial>,
    pub name: Option<String>,
}

impl Problem {
    /// Validates that all polynomials share the ambient dimension.
    pub fn new(
        dimension: usize,
        objective: Polynomial,
        constraints: Vec<Polynomial>,
        name: Option<String>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if objective.dimension() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: objective.dimension(),
            });
        }
        for g in &constraints {
            if g.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: g.dimension(),
                });
            }
        }
        Ok(Problem {
            dimension,
            objective,
            constraints,
            name,
        })
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Iterates the objective followed by the constraints (indices `0..=m`).
    pub fn polynomials(&self) -> impl Iterator<Item = &Polynomial> {
        std::iter::once(&self.objective).chain(self.constraints.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number { value: f64, is_integer: bool },
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct SpannedTok {
    tok: Tok,
    line: u32,
    column: u32,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, line: u32, column: u32) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            line,
            column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn lex(mut self) -> Result<(Vec<SpannedTok>, u32, u32)> {
        let mut toks = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, column) = (self.line, self.column);
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.bump();
                }
                '+' => {
                    self.bump();
                    toks.push(SpannedTok { tok: Tok::Plus, line, column });
                }
                '-' => {
                    self.bump();
                    toks.push(SpannedTok { tok: Tok::Minus, line, column });
                }
                '*' => {
                    self.bump();
                    toks.push(SpannedTok { tok: Tok::Star, line, column });
                }
                '^' => {
                    self.bump();
                    toks.push(SpannedTok { tok: Tok::Caret, line, column });
                }
                '(' => {
                    self.bump();
                    toks.push(SpannedTok { tok: Tok::LParen, line, column });
                }
                ')' => {
                    self.bump();
                    toks.push(SpannedTok { tok: Tok::RParen, line, column });
                }
                'x' => {
                    self.bump();
                    let mut digits = String::new();
                    while let Some(&d) = self.chars.peek() {
                        if d.is_ascii_digit() {
                            digits.push(d);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if digits.is_empty() {
                        return Err(Error::syntax(
                            line,
                            column,
                            "expected a variable index after 'x' (variables are x1..xn)",
                        ));
                    }
                    let index: usize = digits.parse().map_err(|_| {
                        Error::syntax(line, column, format!("variable index x{digits} is too large"))
                    })?;
                    if index == 0 {
                        return Err(Error::syntax(
                            line,
                            column,
                            "variable indices start at x1",
                        ));
                    }
                    toks.push(SpannedTok { tok: Tok::Var(index), line, column });
                }
                '0'..='9' => {
                    let (value, is_integer) = self.lex_number(line, column)?;
                    toks.push(SpannedTok {
                        tok: Tok::Number { value, is_integer },
                        line,
                        column,
                    });
                }
                other => {
                    return Err(Error::syntax(
                        line,
                        column,
                        format!("unexpected character '{other}'"),
                    ));
                }
            }
        }
        Ok((toks, self.line, self.column))
    }

    fn lex_number(&mut self, line: u32, column: u32) -> Result<(f64, bool)> {
        let mut text = String::new();
        let mut is_integer = true;
        while let Some(&d) = self.chars.peek() {
            if d.is_ascii_digit() {
                text.push(d);
                self.bump();
            } else {
                break;
            }
        }
        if let Some(&'.') = self.chars.peek() {
            is_integer = false;
            text.push('.');
            self.bump();
            let mut any = false;
            while let Some(&d) = self.chars.peek() {
                if d.is_ascii_digit() {
                    text.push(d);
                    self.bump();
                    any = true;
                } else {
                    break;
                }
            }
            if !any {
                return Err(Error::syntax(line, column, "expected digits after decimal point"));
            }
        }
        if let Some(&e) = self.chars.peek() {
            if e == 'e' || e == 'E' {
                is_integer = false;
                text.push(e);
                self.bump();
                if let Some(&s) = self.chars.peek() {
                    if s == '+' || s == '-' {
                        text.push(s);
                        self.bump();
                    }
                }
                let mut any = false;
                while let Some(&d) = self.chars.peek() {
                    if d.is_ascii_digit() {
                        text.push(d);
                        self.bump();
                        any = true;
                    } else {
                        break;
                    }
                }
                if !any {
                    return Err(Error::syntax(line, column, "expected digits in exponent"));
                }
            }
        }
        let value: f64 = text
            .parse()
            .map_err(|_| Error::syntax(line, column, format!("invalid number literal '{text}'")))?;
        Ok((value, is_integer))
    }
}

struct Parser {
    toks: Vec<SpannedTok>,
    pos: usize,
    end_line: u32,
    end_column: u32,
    dimension: usize,
    term_cap: usize,
}

impl Parser {
    fn peek(&self) -> Option<&SpannedTok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<SpannedTok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (u32, u32) {
        self.peek()
            .map(|t| (t.line, t.column))
            .unwrap_or((self.end_line, self.end_column))
    }

    fn check_cap(&self, poly: Polynomial, line: u32, column: u32) -> Result<Polynomial> {
        if poly.num_terms() > self.term_cap {
            return Err(Error::syntax(
                line,
                column,
                format!(
                    "expansion exceeded the term cap of {} terms",
                    self.term_cap
                ),
            ));
        }
        Ok(poly)
    }

    fn parse_expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.parse_term()?;
        while let Some(t) = self.peek() {
            let op = match t.tok {
                Tok::Plus => true,
                Tok::Minus => false,
                _ => break,
            };
            let (line, column) = (t.line, t.column);
            self.next();
            let rhs = self.parse_term()?;
            acc = if op { acc.add(&rhs) } else { acc.sub(&rhs) };
            acc = self.check_cap(acc, line, column)?;
        }
        Ok(acc)
    }

    fn parse_term(&mut self) -> Result<Polynomial> {
        let mut acc = self.parse_factor()?;
        while let Some(t) = self.peek() {
            if !matches!(t.tok, Tok::Star) {
                break;
            }
            let (line, column) = (t.line, t.column);
            self.next();
            let rhs = self.parse_factor()?;
            acc = map_resource_error(acc.mul_capped(&rhs, self.term_cap), line, column)?;
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<Polynomial> {
        let base = self.parse_base()?;
        if let Some(t) = self.peek() {
            if matches!(t.tok, Tok::Caret) {
                let (line, column) = (t.line, t.column);
                self.next();
                let exp_tok = self.next().ok_or_else(|| {
                    Error::syntax(line, column, "expected an exponent after '^'")
                })?;
                let exponent = match exp_tok.tok {
                    Tok::Number { value, is_integer } => {
                        if !is_integer || value.fract() != 0.0 {
                            return Err(Error::syntax(
                                exp_tok.line,
                                exp_tok.column,
                                "exponent must be a non-negative integer",
                            ));
                        }
                        if value > u32::MAX as f64 {
                            return Err(Error::syntax(
                                exp_tok.line,
                                exp_tok.column,
                                "exponent is too large",
                            ));
                        }
                        value as u32
                    }
                    Tok::Minus => {
                        return Err(Error::syntax(
                            exp_tok.line,
                            exp_tok.column,
                            "exponent must be a non-negative integer",
                        ));
                    }
                    _ => {
                        return Err(Error::syntax(
                            exp_tok.line,
                            exp_tok.column,
                            "exponent must be a non-negative integer",
                        ));
                    }
                };
                return map_resource_error(base.pow_capped(exponent, self.term_cap), line, column);
            }
        }
        Ok(base)
    }

    fn parse_base(&mut self) -> Result<Polynomial> {
        let (line, column) = self.here();
        let t = self
            .next()
            .ok_or_else(|| Error::syntax(line, column, "expected an expression"))?;
        match t.tok {
            Tok::Number { value, .. } => Ok(Polynomial::constant(self.dimension, value)),
            Tok::Var(index) => {
                if index > self.dimension {
                    return Err(Error::syntax(
                        t.line,
                        t.column,
                        format!(
                            "variable x{index} exceeds the declared dimension {}",
                            self.dimension
                        ),
                    ));
                }
                Polynomial::variable(self.dimension, index - 1)
            }
            Tok::Minus => Ok(self.parse_base()?.neg()),
            Tok::LParen => {
                let inner = self.parse_expr()?;
                let (cline, ccolumn) = self.here();
                match self.next() {
                    Some(SpannedTok { tok: Tok::RParen, .. }) => Ok(inner),
                    _ => Err(Error::syntax(cline, ccolumn, "expected ')'")),
                }
            }
            other => Err(Error::syntax(
                t.line,
                t.column,
                format!("unexpected token {}", describe(&other)),
            )),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Number { value, .. } => format!("number '{value}'"),
        Tok::Var(i) => format!("variable 'x{i}'"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
    }
}

fn map_resource_error(result: Result<Polynomial>, line: u32, column: u32) -> Result<Polynomial> {
    result.map_err(|e| match e {
        Error::ResourceLimit(msg) => Error::syntax(line, column, msg),
        other => other,
    })
}

fn parse_expression_at(
    src: &str,
    dimension: usize,
    line: u32,
    column: u32,
    term_cap: usize,
) -> Result<Polynomial> {
    let (toks, end_line, end_column) = Lexer::new(src, line, column).lex()?;
    if toks.is_empty() {
        return Err(Error::syntax(line, column, "expected an expression"));
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end_line,
        end_column,
        dimension,
        term_cap,
    };
    let poly = parser.parse_expr()?;
    if let Some(t) = parser.peek() {
        return Err(Error::syntax(
            t.line,
            t.column,
            format!("unexpected token {}", describe(&t.tok)),
        ));
    }
    Ok(poly)
}

/// Parses an expression in variables `x1..xn` into a canonical polynomial.
pub fn parse_expression(src: &str, dimension: usize) -> Result<Polynomial> {
    parse_expression_at(src, dimension, 1, 1, DEFAULT_TERM_CAP)
}

/// [`parse_expression`] with an explicit expansion term cap.
pub fn parse_expression_capped(src: &str, dimension: usize, term_cap: usize) -> Result<Polynomial> {
    parse_expression_at(src, dimension, 1, 1, term_cap)
}

/// Parses a problem file (see the module docs for the format).
pub fn parse_problem(src: &str) -> Result<Problem> {
    let mut dimension: Option<usize> = None;
    let mut objective: Option<Polynomial> = None;
    let mut constraints: Vec<Polynomial> = Vec::new();
    let mut name: Option<String> = None;

    for (idx, raw_line) in src.lines().enumerate() {
        let line_no = (idx + 1) as u32;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let column_of = |rest: &str| -> u32 {
            (rest.as_ptr() as usize - raw_line.as_ptr() as usize + 1) as u32
        };

        let Some(dim) = dimension else {
            let rest = trimmed.strip_prefix("dim").ok_or_else(|| {
                Error::syntax(
                    line_no,
                    column_of(trimmed),
                    "expected 'dim <n>' as the first directive",
                )
            })?;
            let n: usize = rest.trim().parse().map_err(|_| {
                Error::syntax(line_no, column_of(trimmed), "expected 'dim <n>' with a positive integer n")
            })?;
            if n == 0 {
                return Err(Error::syntax(
                    line_no,
                    column_of(trimmed),
                    "dimension must be at least 1",
                ));
            }
            dimension = Some(n);
            continue;
        };

        if trimmed.strip_prefix("dim").map(|r| r.trim().parse::<usize>().is_ok()) == Some(true) {
            return Err(Error::syntax(
                line_no,
                column_of(trimmed),
                "duplicate 'dim' directive",
            ));
        }
        if let Some(rest) = trimmed.strip_prefix("objective:") {
            if objective.is_some() {
                return Err(Error::syntax(
                    line_no,
                    column_of(trimmed),
                    "duplicate 'objective:' directive",
                ));
            }
            objective = Some(parse_expression_at(
                rest,
                dim,
                line_no,
                column_of(rest),
                DEFAULT_TERM_CAP,
            )?);
        } else if let Some(rest) = trimmed.strip_prefix("constraint:") {
            constraints.push(parse_expression_at(
                rest,
                dim,
                line_no,
                column_of(rest),
                DEFAULT_TERM_CAP,
            )?);
        } else if let Some(rest) = trimmed.strip_prefix("name:") {
            if name.is_some() {
                return Err(Error::syntax(
                    line_no,
                    column_of(trimmed),
                    "duplicate 'name:' directive",
                ));
            }
            let value = rest.trim();
            if !value.is_empty() {
                name = Some(value.to_string());
            }
        } else {
            return Err(Error::syntax(
                line_no,
                column_of(trimmed),
                "unknown directive; expected 'objective:', 'constraint:', or 'name:'",
            ));
        }
    }

    let dimension =
        dimension.ok_or_else(|| Error::InvalidInput("problem file is missing 'dim <n>'".into()))?;
    let objective = objective
        .ok_or_else(|| Error::InvalidInput("problem file is missing 'objective:'".into()))?;
    Problem::new(dimension, objective, constraints, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_running_example_objective() {
        let p = parse_expression("(x1^2 - x2^2)^2 - x2^3", 2).unwrap();
        assert_eq!(p.num_terms(), 4);
        assert_eq!(p.to_string(), "x1^4 - 2*x1^2*x2^2 + x2^4 - x2^3");
    }

    #[test]
    fn parses_single_variable() {
        let p = parse_expression("x1", 2).unwrap();
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.evaluate(&[5.0, 0.0]).unwrap(), 5.0);
    }

    #[test]
    fn combines_like_terms() {
        let p = parse_expression("2*x1*x2 + x1*x2", 2).unwrap();
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.evaluate(&[1.0, 1.0]).unwrap(), 3.0);
    }

    #[test]
    fn scientific_literals_and_unary_minus() {
        let p = parse_expression("-2.5e-1*x1 + 1e2", 1).unwrap();
        assert_eq!(p.evaluate(&[4.0]).unwrap(), 99.0);
    }

    #[test]
    fn unary_minus_binds_before_power() {
        // Per the grammar, -x1^2 is (-x1)^2.
        let p = parse_expression("-x1^2", 1).unwrap();
        assert_eq!(p.evaluate(&[3.0]).unwrap(), 9.0);
    }

    #[test]
    fn rejects_variable_beyond_dimension() {
        let err = parse_expression("x1 + x3", 2).unwrap_err();
        match err {
            Error::Syntax { line, column, message } => {
                assert_eq!(line, 1);
                assert_eq!(column, 6);
                assert!(message.contains("x3"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_and_fractional_exponents() {
        assert!(matches!(
            parse_expression("x1^-2", 2),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_expression("x1^2.5", 2),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn rejects_juxtaposition() {
        assert!(parse_expression("2x1", 2).is_err());
        assert!(parse_expression("x1 x2", 2).is_err());
    }

    #[test]
    fn reports_unbalanced_parentheses() {
        assert!(matches!(
            parse_expression("(x1 + x2", 2),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn term_cap_limits_expansion() {
        let err = parse_expression_capped("(x1 + x2 + x3 + x4)^9", 4, 50).unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }), "{err:?}");
        assert!(err.to_string().contains("term cap"), "{err}");
    }

    #[test]
    fn parses_example_problem_file() {
        let src = "\
# running example
dim 2
name: example
objective: (x1^2 - x2^2)^2 - x2^3
constraint: (x1^2 - x2^2)^2 - x1^2*x2^2
constraint: 1 - x1^2 - x2^2
";
        let problem = parse_problem(src).unwrap();
        assert_eq!(problem.dimension, 2);
        assert_eq!(problem.num_constraints(), 2);
        assert_eq!(problem.name.as_deref(), Some("example"));
        assert_eq!(problem.objective.num_terms(), 4);
    }

    #[test]
    fn objective_only_problem_has_no_constraints() {
        let problem = parse_problem("dim 3\nobjective: x1 + x2 + x3\n").unwrap();
        assert_eq!(problem.num_constraints(), 0);
    }

    #[test]
    fn undeclared_variable_names_line() {
        let src = "dim 2\nobjective: x1\nconstraint: x3 - 1\n";
        let err = parse_problem(src).unwrap_err();
        match err {
            Error::Syntax { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("x3"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_sections_are_input_errors() {
        assert!(matches!(parse_problem(""), Err(Error::InvalidInput(_))));
        assert!(matches!(
            parse_problem("dim 2\n"),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn duplicate_sections_are_rejected() {
        let src = "dim 2\nobjective: x1\nobjective: x2\n";
        assert!(matches!(parse_problem(src), Err(Error::Syntax { .. })));
        let src = "dim 2\ndim 3\nobjective: x1\n";
        assert!(matches!(parse_problem(src), Err(Error::Syntax { .. })));
    }

    #[test]
    fn dim_must_come_first() {
        let src = "objective: x1\ndim 2\n";
        assert!(matches!(parse_problem(src), Err(Error::Syntax { .. })));
    }

    #[test]
    fn display_round_trips() {
        let p = parse_expression("(x1 - 0.5*x2)^3 - 1e-3*x2 + 2", 2).unwrap();
        let reparsed = parse_expression(&p.to_string(), 2).unwrap();
        assert_eq!(p, reparsed);
        let q = parse_expression("-x2^2 + x1", 2).unwrap();
        // (-x2)^2 = x2^2, so the canonical form must keep the coefficient.
        assert_eq!(q.to_string(), "x2^2 + x1");
        assert_eq!(parse_expression(&q.to_string(), 2).unwrap(), q);
    }
}
