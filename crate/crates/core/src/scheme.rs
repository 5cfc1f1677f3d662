//! Explicit time-stepping schemes for `du/dt + P[(u.grad)u] = 0`.
//!
//! A one-step scheme is a list of stages
//!
//! ```text
//! u(0) = u_n
//! u(l) = sum_i a[l][i] u(i) - dt * sum_i b[l][i] P[(u(i).grad) u(i)],   1 <= l <= k
//! u_{n+1} = u(k)
//! ```
//!
//! The `b` weights are stored exactly as they appear in the scheme
//! definitions (non-negative for the built-ins); the minus sign lives in
//! the stepping and expansion code.

use crate::rational::{self, int, ratio};
use crate::{Error, Rational, Result};
use num_traits::{One, Zero};
use std::fmt;
use std::str::FromStr;

/// One stage row: `a[l][0..l]` and `b[l][0..l]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Stage {
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
}

impl Stage {
    pub fn new(a: Vec<Rational>, b: Vec<Rational>) -> Self {
        Self { a, b }
    }
}

/// Stage coefficients of an explicit multi-stage scheme.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExplicitTableau {
    pub name: String,
    pub stages: Vec<Stage>,
}

impl ExplicitTableau {
    pub fn new(name: impl Into<String>, stages: Vec<Stage>) -> Self {
        Self {
            name: name.into(),
            stages,
        }
    }

    /// Number of stages `k`.
    pub fn k(&self) -> usize {
        self.stages.len()
    }

    /// `a[l][i]` with 1-based stage index `l`; zero outside the stored row.
    pub fn a(&self, l: usize, i: usize) -> Rational {
        self.stages[l - 1].a.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn b(&self, l: usize, i: usize) -> Rational {
        self.stages[l - 1].b.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Float copies of the coefficients, row by row.
    pub fn float_rows(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.stages
            .iter()
            .map(|s| {
                (
                    s.a.iter().map(rational::to_f64).collect(),
                    s.b.iter().map(rational::to_f64).collect(),
                )
            })
            .collect()
    }
}

/// Two-step Adams-Bashforth style scheme:
/// `u_{n+1} = u_n - dt * sum_j weights[j] * P[(u_{n-j}.grad) u_{n-j}]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultistepScheme {
    pub name: String,
    /// Weight on the nonlinear term at step `n - j`.
    pub weights: Vec<Rational>,
    /// One-step scheme used while the history is not yet available.
    pub startup: ExplicitTableau,
}

impl MultistepScheme {
    /// Weights must sum to one (first-order consistency).
    pub fn is_consistent(&self) -> bool {
        self.weights.iter().fold(Rational::zero(), |acc, w| acc + w) == Rational::one()
    }
}

/// Pure Taylor truncation of order `m` of the exact flow map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaylorScheme {
    m: usize,
}

impl TaylorScheme {
    pub fn new(m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Domain("Taylor order m must be >= 1".into()));
        }
        Ok(Self { m })
    }

    pub fn order(&self) -> usize {
        self.m
    }
}

/// Built-in scheme identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    ExplicitEuler,
    Centered2,
    Rk4,
    Ab2,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [
        SchemeId::ExplicitEuler,
        SchemeId::Centered2,
        SchemeId::Rk4,
        SchemeId::Ab2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::ExplicitEuler => "explicit-euler",
            SchemeId::Centered2 => "centered-2",
            SchemeId::Rk4 => "rk4",
            SchemeId::Ab2 => "ab2",
        }
    }

    pub fn scheme(self) -> Scheme {
        match self {
            SchemeId::ExplicitEuler => Scheme::OneStep(explicit_euler()),
            SchemeId::Centered2 => Scheme::OneStep(centered_2()),
            SchemeId::Rk4 => Scheme::OneStep(rk4()),
            SchemeId::Ab2 => Scheme::Multistep(ab2()),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownScheme {
                name: s.to_string(),
                valid: SchemeId::ALL.map(|id| id.as_str()).join(", "),
            })
    }
}

/// Either kind of scheme the laboratory can run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scheme {
    OneStep(ExplicitTableau),
    Multistep(MultistepScheme),
}

impl Scheme {
    pub fn name(&self) -> &str {
        match self {
            Scheme::OneStep(t) => &t.name,
            Scheme::Multistep(m) => &m.name,
        }
    }

    pub fn as_tableau(&self) -> Option<&ExplicitTableau> {
        match self {
            Scheme::OneStep(t) => Some(t),
            Scheme::Multistep(_) => None,
        }
    }
}

/// Looks up a built-in scheme by identifier.
pub fn builtin(name: &str) -> Result<Scheme> {
    Ok(name.parse::<SchemeId>()?.scheme())
}

fn row(a: &[Rational], b: &[Rational]) -> Stage {
    Stage::new(a.to_vec(), b.to_vec())
}

pub fn explicit_euler() -> ExplicitTableau {
    ExplicitTableau::new("explicit-euler", vec![row(&[int(1)], &[int(1)])])
}

/// Midpoint-type centered scheme of order two.
pub fn centered_2() -> ExplicitTableau {
    ExplicitTableau::new(
        "centered-2",
        vec![
            row(&[int(1)], &[ratio(1, 2)]),
            row(&[int(1), int(0)], &[int(0), int(1)]),
        ],
    )
}

pub fn rk4() -> ExplicitTableau {
    let z = int(0);
    ExplicitTableau::new(
        "rk4",
        vec![
            row(&[int(1)], &[ratio(1, 2)]),
            row(&[int(1), z.clone()], &[z.clone(), ratio(1, 2)]),
            row(&[int(1), z.clone(), z.clone()], &[z.clone(), z.clone(), int(1)]),
            row(
                &[int(1), z.clone(), z.clone(), z],
                &[ratio(1, 6), ratio(1, 3), ratio(1, 3), ratio(1, 6)],
            ),
        ],
    )
}

/// Adams-Bashforth 2; the first step falls back to [`centered_2`].
pub fn ab2() -> MultistepScheme {
    MultistepScheme {
        name: "ab2".into(),
        weights: vec![ratio(3, 2), ratio(-1, 2)],
        startup: centered_2(),
    }
}

/// A single broken invariant; `row` is the 1-based stage index when the
/// violation is tied to a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub row: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidTableau(self.to_string()))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v.row {
                Some(r) => format!("row {r}: {}", v.message),
                None => v.message.clone(),
            })
            .collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks stage count, triangular shape and the unit row sum of `a`.
pub fn validate(t: &ExplicitTableau) -> ValidationReport {
    let mut violations = Vec::new();
    if t.stages.is_empty() {
        violations.push(Violation {
            row: None,
            message: "k >= 1 required".into(),
        });
    }
    for (idx, stage) in t.stages.iter().enumerate() {
        let l = idx + 1;
        if stage.a.len() != l || stage.b.len() != l {
            violations.push(Violation {
                row: Some(l),
                message: format!(
                    "stage {l} must have exactly {l} a- and b-entries (got {} and {})",
                    stage.a.len(),
                    stage.b.len()
                ),
            });
        }
        let sum = stage.a.iter().fold(Rational::zero(), |acc, x| acc + x);
        if sum != Rational::one() {
            violations.push(Violation {
                row: Some(l),
                message: format!("a-row sums to {}, expected 1", rational::format(&sum)),
            });
        }
    }
    ValidationReport { violations }
}

// Text format:
//
//     # comment
//     name: rk4
//     1 | 1/2
//     1 0 | 0 1/2
//
// Stage `l` lists its `l` a-entries, a `|`, then its `l` b-entries.

impl fmt::Display for ExplicitTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name: {}", self.name)?;
        for stage in &self.stages {
            let a: Vec<String> = stage.a.iter().map(rational::format).collect();
            let b: Vec<String> = stage.b.iter().map(rational::format).collect();
            writeln!(f, "{} | {}", a.join(" "), b.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for ExplicitTableau {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_tableau(text)
    }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based column.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (pos, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..pos]));
                start = None;
            }
            (false, None) => start = Some(pos),
            _ => {}
        }
    }
    out.into_iter()
}

/// Parses the plain-text tableau format; the result is not validated
/// beyond its triangular shape.
pub fn parse_tableau(text: &str) -> Result<ExplicitTableau> {
    let mut name = String::new();
    let mut stages = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.trim_start().strip_prefix("name:") {
            name = rest.trim().to_string();
            continue;
        }
        let l = stages.len() + 1;
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut seen_bar = false;
        for (col, tok) in tokens(line) {
            if tok == "|" {
                if seen_bar {
                    return Err(parse_err(lineno, col, "second `|` in stage"));
                }
                seen_bar = true;
                continue;
            }
            let q = rational::parse(tok).map_err(|m| parse_err(lineno, col, m))?;
            if seen_bar {
                b.push(q);
            } else {
                a.push(q);
            }
        }
        if !seen_bar {
            return Err(parse_err(lineno, 1, "missing `|` between a- and b-entries"));
        }
        if a.len() != l || b.len() != l {
            return Err(parse_err(
                lineno,
                1,
                format!(
                    "stage {l} needs {l} a-entries and {l} b-entries, got {} and {}",
                    a.len(),
                    b.len()
                ),
            ));
        }
        stages.push(Stage::new(a, b));
    }
    Ok(ExplicitTableau::new(name, stages))
}
