//! The two-observer Bell expression
//! `X₁X₂z₂ − Y₁Y₂z₂ + X₁x₁Y₂y₂ + Y₁x₁X₂y₂`.
//!
//! Local models reach at most 2 in absolute value; the cluster state reaches
//! 4, which is also the operator's largest eigenvalue.

use std::collections::BTreeSet;

use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::hilbert::{self, HilbertError, JointMeasurement, LocalObservable, ObservableWord, Operator, StateVector};
use crate::rational::{self, round15, Rational};
use crate::sign::Sign;

/// Fewest shots accepted by [`estimate_terms`].
pub const MIN_SHOTS: u64 = 100;

/// Distance to the nearest integer below which a quantum value is reported
/// as exact.
pub const EXACT_SNAP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BellError {
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("{0} shots requested, at least {MIN_SHOTS} required")]
    TooFewShots(u64),
    #[error("term {0} is the identity; the isotropic-noise shortcut needs traceless terms")]
    TrivialTerm(String),
    #[error("quantum value {0} is not positive, no visibility threshold exists")]
    NoViolation(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellTerm {
    pub coefficient: Sign,
    pub word: ObservableWord,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellExpression {
    terms: Vec<BellTerm>,
}

impl BellExpression {
    pub fn new(terms: Vec<BellTerm>) -> Self {
        BellExpression { terms }
    }

    /// From `(coefficient, word)` pairs such as `(Minus, "Y1Y2z2")`.
    pub fn parse(terms: &[(Sign, &str)]) -> Result<Self, HilbertError> {
        let terms = terms
            .iter()
            .map(|&(coefficient, w)| Ok(BellTerm { coefficient, word: w.parse()? }))
            .collect::<Result<_, HilbertError>>()?;
        Ok(BellExpression { terms })
    }

    pub fn terms(&self) -> &[BellTerm] {
        &self.terms
    }

    pub fn operator(&self) -> Operator {
        self.terms
            .iter()
            .fold(Operator::zeros(), |acc, t| &acc + &hilbert::word_matrix(&t.word).scale(t.coefficient.as_f64()))
    }

    /// Local observables appearing anywhere in the expression.
    pub fn observables(&self) -> Vec<LocalObservable> {
        let set: BTreeSet<LocalObservable> = self.terms.iter().flat_map(|t| t.word.factors().iter().copied()).collect();
        set.into_iter().collect()
    }

    /// Value of the expression when every observable has a predefined
    /// outcome `value(o)`.
    pub fn local_value(&self, value: impl Fn(LocalObservable) -> Sign) -> i64 {
        self.terms
            .iter()
            .map(|t| {
                let product = Sign::product(t.word.factors().iter().map(|&o| value(o)));
                i64::from((t.coefficient * t.word.sign() * product).value())
            })
            .sum()
    }
}

pub fn bell_expression() -> BellExpression {
    use Sign::{Minus, Plus};
    BellExpression::parse(&[(Plus, "X1X2z2"), (Minus, "Y1Y2z2"), (Plus, "X1x1Y2y2"), (Plus, "Y1x1X2y2")])
        .expect("static expression")
}

/// `Σ c_k ⟨s|W_k|s⟩`.
pub fn quantum_value(expr: &BellExpression, s: &StateVector) -> Result<f64, BellError> {
    expr.terms.iter().try_fold(0.0, |acc, t| Ok(acc + t.coefficient.as_f64() * hilbert::expectation(&t.word, s)?))
}

/// Largest `|value|` over all ±1 assignments to the participating
/// observables. Mixtures of deterministic models cannot exceed it.
pub fn lhv_bound(expr: &BellExpression) -> Rational {
    let observables = expr.observables();
    let best = (0..1u64 << observables.len())
        .map(|mask| {
            expr.local_value(|o| {
                let i = observables.iter().position(|&x| x == o).expect("listed");
                Sign::from_bit(mask >> i & 1 == 1)
            })
            .abs()
        })
        .max()
        .unwrap_or(0);
    rational::integer(best)
}

/// Largest eigenvalue of the summed operator; bounds every quantum value.
pub fn max_violation_check(expr: &BellExpression) -> Result<f64, BellError> {
    Ok(hilbert::max_eigenvalue(&expr.operator())?)
}

/// Value on `v|s⟩⟨s| + (1 − v) I/16`. With traceless terms the noise part
/// contributes nothing.
pub fn isotropic_value(expr: &BellExpression, s: &StateVector, visibility: f64) -> Result<f64, BellError> {
    require_traceless(expr)?;
    Ok(visibility * quantum_value(expr, s)?)
}

fn require_traceless(expr: &BellExpression) -> Result<(), BellError> {
    match expr.terms.iter().find(|t| t.word.is_identity()) {
        Some(t) => Err(BellError::TrivialTerm(t.word.to_string())),
        None => Ok(()),
    }
}

/// Critical visibility `v* = bound / quantum value` of the isotropic-noise
/// family.
pub fn noise_threshold(expr: &BellExpression, s: &StateVector) -> Result<f64, BellError> {
    require_traceless(expr)?;
    let q = quantum_value(expr, s)?;
    if q <= 0.0 {
        return Err(BellError::NoViolation(q));
    }
    Ok(rational::to_f64(&lhv_bound(expr)) / q)
}

#[derive(Clone, Debug, Serialize)]
pub struct TermEstimate {
    pub coefficient: Sign,
    pub word: ObservableWord,
    /// Sample mean of the word's measured value.
    pub mean: f64,
    pub standard_error: f64,
    pub exact: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TermEstimates {
    pub shots: u64,
    pub terms: Vec<TermEstimate>,
    pub total: f64,
    pub total_standard_error: f64,
}

/// Measures every term's factors jointly `shots` times on fresh copies of
/// `s` and averages the product of outcomes.
pub fn estimate_terms<R: Rng + ?Sized>(
    expr: &BellExpression,
    s: &StateVector,
    shots: u64,
    rng: &mut R,
) -> Result<TermEstimates, BellError> {
    if shots < MIN_SHOTS {
        return Err(BellError::TooFewShots(shots));
    }
    let mut terms = Vec::with_capacity(expr.terms.len());
    for t in &expr.terms {
        let m = JointMeasurement::new(s, t.word.factors())?;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..shots {
            let x = (t.word.sign() * m.sample(rng).product()).as_f64();
            sum += x;
            sum_sq += x * x;
        }
        let n = shots as f64;
        let mean = sum / n;
        // Unbiased sample variance, clamped against rounding below zero.
        let variance = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        terms.push(TermEstimate {
            coefficient: t.coefficient,
            word: t.word.clone(),
            mean,
            standard_error: (variance / n).sqrt(),
            exact: hilbert::expectation(&t.word, s)?,
        });
    }
    let total = terms.iter().map(|t| t.coefficient.as_f64() * t.mean).sum();
    let total_standard_error = terms.iter().map(|t| t.standard_error.powi(2)).sum::<f64>().sqrt();
    Ok(TermEstimates { shots, terms, total, total_standard_error })
}

#[derive(Clone, Debug, Serialize)]
pub struct BellReport {
    pub quantum_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantum_value_exact: Option<String>,
    pub lhv_bound: String,
    pub max_eigenvalue: f64,
    pub violation_ratio: f64,
    pub visibility_threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility_threshold_exact: Option<String>,
}

fn snap_integer(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() < EXACT_SNAP_TOLERANCE).then_some(r as i64)
}

pub fn bell_report(expr: &BellExpression, s: &StateVector) -> Result<BellReport, BellError> {
    let q = quantum_value(expr, s)?;
    let bound = lhv_bound(expr);
    let exact_q = snap_integer(q);
    let visibility_exact = exact_q.filter(|&n| n > 0).map(|n| (&bound / rational::integer(n)).to_string());
    let bound_f = rational::to_f64(&bound);
    Ok(BellReport {
        quantum_value: round15(q),
        quantum_value_exact: exact_q.map(|n| n.to_string()),
        lhv_bound: bound.to_string(),
        max_eigenvalue: round15(max_violation_check(expr)?),
        violation_ratio: if bound.is_zero() { f64::INFINITY } else { round15(q / bound_f) },
        visibility_threshold: round15(noise_threshold(expr, s)?),
        visibility_threshold_exact: visibility_exact,
    })
}
