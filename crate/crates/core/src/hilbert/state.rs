use num_complex::Complex64;
use serde::Serialize;

use super::operator::ZERO;
use super::{HilbertError, ObservableWord, DIM};
use crate::sign::Sign;

/// Tolerance on the squared norm of a constructed state.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Imaginary part beyond which an expectation value is rejected.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

/// Normalized pure state of the two-photon register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: [Complex64; DIM],
}

impl StateVector {
    /// Checks finiteness and unit norm.
    pub fn new(amplitudes: [Complex64; DIM]) -> Result<Self, HilbertError> {
        check_finite(&amplitudes)?;
        let norm_sqr = norm_sqr(&amplitudes);
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(HilbertError::NotNormalized(norm_sqr));
        }
        Ok(StateVector { amplitudes })
    }

    /// Rescales to unit norm.
    pub fn normalized(amplitudes: [Complex64; DIM]) -> Result<Self, HilbertError> {
        check_finite(&amplitudes)?;
        let norm = norm_sqr(&amplitudes).sqrt();
        if norm == 0.0 {
            return Err(HilbertError::NotNormalized(0.0));
        }
        let mut amplitudes = amplitudes;
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(StateVector { amplitudes })
    }

    /// Computational basis state `|b⟩`.
    pub fn basis(index: usize) -> Self {
        assert!(index < DIM, "basis index {index} out of range");
        let mut amplitudes = [ZERO; DIM];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        StateVector { amplitudes }
    }

    /// Product state from one qubit state per slot, in slot order
    /// pol₁, path₁, pol₂, path₂.
    pub fn product(qubits: [[Complex64; 2]; 4]) -> Result<Self, HilbertError> {
        let mut amplitudes = [ZERO; DIM];
        for (b, amp) in amplitudes.iter_mut().enumerate() {
            *amp = qubits.iter().enumerate().map(|(k, q)| q[(b >> (3 - k)) & 1]).product();
        }
        StateVector::normalized(amplitudes)
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// Euclidean norm of `self − other`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn from_raw(amplitudes: [Complex64; DIM]) -> Self {
        StateVector { amplitudes }
    }
}

fn norm_sqr(amplitudes: &[Complex64; DIM]) -> f64 {
    amplitudes.iter().map(Complex64::norm_sqr).sum()
}

fn check_finite(amplitudes: &[Complex64; DIM]) -> Result<(), HilbertError> {
    if amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(HilbertError::NonFinite)
    }
}

/// `½(|HuHu⟩ + |HdHd⟩ + |VuVu⟩ − |VdVd⟩)`, the two-photon embodiment of the
/// four-qubit cluster state.
pub fn build_cluster_state() -> StateVector {
    let half = Complex64::new(0.5, 0.0);
    let mut amplitudes = [ZERO; DIM];
    amplitudes[0b0000] = half; // H u H u
    amplitudes[0b0101] = half; // H d H d
    amplitudes[0b1010] = half; // V u V u
    amplitudes[0b1111] = -half; // V d V d
    StateVector { amplitudes }
}

/// Matrix–vector product of a word with a state. Words are unitary, so the
/// result stays normalized.
pub fn apply(word: &ObservableWord, s: &StateVector) -> StateVector {
    let mut out = [ZERO; DIM];
    for (b, amp) in s.amplitudes.iter().enumerate() {
        let (target, phase) = word.act_on_basis(b);
        out[target] += phase * amp;
    }
    StateVector::from_raw(out)
}

/// `⟨s|W|s⟩`, checked to be real.
pub fn expectation(word: &ObservableWord, s: &StateVector) -> Result<f64, HilbertError> {
    let image = apply(word, s);
    let value: Complex64 = s.amplitudes.iter().zip(&image.amplitudes).map(|(a, b)| a.conj() * b).sum();
    real_part(value)
}

pub(crate) fn real_part(value: Complex64) -> Result<f64, HilbertError> {
    if value.im.abs() > IMAGINARY_TOLERANCE {
        return Err(HilbertError::ComplexExpectation(value.im));
    }
    Ok(value.re)
}

/// The nine perfect correlations of the cluster state, in order: the seven
/// predictions that make the local observables elements of reality, then the
/// two four-factor words used by the contradiction.
pub fn perfect_correlations() -> Vec<(ObservableWord, Sign)> {
    use Sign::{Minus, Plus};
    [
        ("X1X2z2", Plus),
        ("Y1Y2z2", Minus),
        ("x1Z2x2", Plus),
        ("X1z1X2", Plus),
        ("Y1z1Y2", Minus),
        ("Z1y1y2", Minus),
        ("z1z2", Plus),
        ("X1x1Y2y2", Plus),
        ("Y1x1X2y2", Plus),
    ]
    .into_iter()
    .map(|(w, sign)| (w.parse().expect("static word"), sign))
    .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizerCheck {
    pub word: ObservableWord,
    pub expected_sign: Sign,
    /// `‖W s − sign·s‖`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizerReport {
    pub checks: Vec<StabilizerCheck>,
}

impl StabilizerReport {
    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn all_below(&self, tolerance: f64) -> bool {
        self.checks.iter().all(|c| c.residual < tolerance)
    }

    pub fn sign_pattern(&self) -> Vec<Sign> {
        self.checks.iter().map(|c| c.expected_sign).collect()
    }
}

pub fn verify_stabilizers(s: &StateVector) -> StabilizerReport {
    let checks = perfect_correlations()
        .into_iter()
        .map(|(word, expected_sign)| {
            let image = apply(&word, s);
            let target = StateVector::from_raw(s.amplitudes.map(|a| a * expected_sign.as_f64()));
            StabilizerCheck { residual: image.distance(&target), word, expected_sign }
        })
        .collect();
    StabilizerReport { checks }
}
