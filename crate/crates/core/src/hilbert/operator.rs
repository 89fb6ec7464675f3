use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use super::{HilbertError, ObservableWord, StateVector, DIM};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense 16×16 complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    entries: [[Complex64; DIM]; DIM],
}

impl Operator {
    pub fn zeros() -> Self {
        Operator { entries: [[ZERO; DIM]; DIM] }
    }

    pub fn identity() -> Self {
        let mut op = Operator::zeros();
        for i in 0..DIM {
            op.entries[i][i] = Complex64::new(1.0, 0.0);
        }
        op
    }

    pub fn from_rows(entries: [[Complex64; DIM]; DIM]) -> Self {
        Operator { entries }
    }

    pub fn rows(&self) -> &[[Complex64; DIM]; DIM] {
        &self.entries
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.entries.iter_mut().flatten().for_each(|z| *z *= factor);
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Operator::zeros();
        for r in 0..DIM {
            for c in 0..DIM {
                out.entries[c][r] = self.entries[r][c].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..DIM).map(|i| self.entries[i][i]).sum()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn mul_vec(&self, amplitudes: &[Complex64; DIM]) -> [Complex64; DIM] {
        let mut out = [ZERO; DIM];
        for (r, row) in self.entries.iter().enumerate() {
            out[r] = row.iter().zip(amplitudes).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `⟨s|A|s⟩` without any reality check.
    pub fn sandwich(&self, s: &StateVector) -> Complex64 {
        let a = s.amplitudes();
        let image = self.mul_vec(a);
        a.iter().zip(&image).map(|(x, y)| x.conj() * y).sum()
    }

    /// `⟨s|A|s⟩`, checked to be real.
    pub fn expectation(&self, s: &StateVector) -> Result<f64, HilbertError> {
        super::state::real_part(self.sandwich(s))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.entries[r][c]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[r][c]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().flatten().zip(rhs.entries.iter().flatten()) {
            *a += b;
        }
        out
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        let mut out = Operator::zeros();
        for r in 0..DIM {
            for k in 0..DIM {
                let a = self.entries[r][k];
                if a == ZERO {
                    continue;
                }
                for c in 0..DIM {
                    out.entries[r][c] += a * rhs.entries[k][c];
                }
            }
        }
        out
    }
}

/// Tensor-product embedding of a word: each factor in its slot, identity
/// elsewhere, times the word's sign.
pub fn word_matrix(word: &ObservableWord) -> Operator {
    let mut op = Operator::zeros();
    for b in 0..DIM {
        let (target, phase) = word.act_on_basis(b);
        op.entries[target][b] = phase;
    }
    op
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::LocalObservable;
    use crate::sign::Sign;

    fn word(s: &str) -> ObservableWord {
        s.parse().unwrap()
    }

    #[test]
    fn z1z2_is_diagonal_with_plus_one_at_origin() {
        let m = word_matrix(&word("z1z2"));
        assert_eq!(m[(0, 0)], Complex64::new(1.0, 0.0));
        for r in 0..DIM {
            for c in 0..DIM {
                if r != c {
                    assert_eq!(m[(r, c)], ZERO);
                }
            }
        }
        // path1 = d (bit 4) flips the sign, path2 = d (bit 1) flips it back.
        assert_eq!(m[(4, 4)], Complex64::new(-1.0, 0.0));
        assert_eq!(m[(5, 5)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn single_pauli_is_traceless() {
        assert_eq!(word_matrix(&word("X1")).trace(), ZERO);
        assert_eq!(word_matrix(&ObservableWord::identity()).trace(), Complex64::new(16.0, 0.0));
    }

    #[test]
    fn four_factor_word_is_an_involution() {
        let m = word_matrix(&word("X1x1Y2y2"));
        assert!((&m * &m).max_abs_diff(&Operator::identity()) < 1e-12);
        assert!(m.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn sign_scales_matrix() {
        let plus = word_matrix(&word("Y1Y2z2"));
        let minus = word_matrix(
            &ObservableWord::new(Sign::Minus, [LocalObservable::Y1, LocalObservable::Y2, LocalObservable::z2]).unwrap(),
        );
        assert!(plus.scale(-1.0).max_abs_diff(&minus) < 1e-15);
    }
}
