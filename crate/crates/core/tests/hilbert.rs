mod common;

use common::{born_rule_cases, chi_square_p_value, state_from};

use avn_lab::hilbert::{
    self, build_cluster_state, perfect_correlations, verify_stabilizers, word_matrix, Axis, JointMeasurement,
    LocalObservable, ObservableWord, Operator, Slot, DIM,
};
use avn_lab::Sign;
use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn to_nalgebra(op: &Operator) -> DMatrix<Complex64> {
    DMatrix::from_fn(DIM, DIM, |r, col| op[(r, col)])
}

/// `σ₁ ⊗ σ₂ ⊗ σ₃ ⊗ σ₄` in slot order, identity where the word is silent.
fn kronecker(word: &ObservableWord) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(1, 1, c(word.sign().as_f64()));
    for slot in Slot::ALL {
        let factor = match word.factors().iter().find(|o| o.slot == slot) {
            Some(o) => {
                let a = o.axis.matrix();
                DMatrix::from_fn(2, 2, |r, col| a[r][col])
            }
            None => DMatrix::identity(2, 2),
        };
        m = m.kronecker(&factor);
    }
    m
}

fn all_words() -> Vec<ObservableWord> {
    let choices = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
    let mut words = Vec::new();
    for code in 0..256usize {
        let factors: Vec<LocalObservable> = Slot::ALL
            .iter()
            .enumerate()
            .filter_map(|(i, &slot)| choices[code >> (2 * i) & 3].map(|axis| LocalObservable::new(slot, axis)))
            .collect();
        let sign = Sign::from_bit(code % 3 == 0);
        words.push(ObservableWord::new(sign, factors).unwrap());
    }
    words
}

#[test]
fn word_matrix_matches_kronecker_product() {
    for w in all_words() {
        let ours = to_nalgebra(&word_matrix(&w));
        let oracle = kronecker(&w);
        let diff = (ours - oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-15, "{w}");
    }
}

#[test]
fn single_slot_words_are_involutions() {
    for w in all_words() {
        let m = word_matrix(&w);
        assert!((&m * &m).max_abs_diff(&Operator::identity()) < 1e-15, "{w}");
        assert!(m.hermiticity_defect() < 1e-15);
    }
}

#[test]
fn cluster_state_amplitudes() {
    let psi = build_cluster_state();
    let expected = [(0, 0.5), (5, 0.5), (10, 0.5), (15, -0.5)];
    for b in 0..DIM {
        let want = expected.iter().find(|(i, _)| *i == b).map_or(0.0, |&(_, a)| a);
        assert!((psi.amplitude(b) - c(want)).norm() < 1e-15);
    }
}

#[test]
fn stabilizer_signs_and_residuals() {
    let report = verify_stabilizers(&build_cluster_state());
    let pattern: Vec<i32> = report.sign_pattern().iter().map(|s| s.value()).collect();
    assert_eq!(pattern, [1, -1, 1, 1, -1, -1, 1, 1, 1]);
    assert!(report.max_residual() < 1e-12);
    // The opposite sign has expectation −1.
    let (w, sign) = perfect_correlations()[0].clone();
    let flipped = ObservableWord::new(-sign, w.factors().to_vec()).unwrap();
    assert!((hilbert::expectation(&flipped, &build_cluster_state()).unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let words = all_words();
    for trial in 0..20 {
        // A real random combination of Hermitian words is Hermitian.
        let mut op = Operator::zeros();
        for k in 0..6 {
            let w = &words[(trial * 37 + k * 101) % words.len()];
            let coeff: f64 = rand::Rng::random_range(&mut rng, -2.0..2.0);
            op = &op + &word_matrix(w).scale(coeff);
        }
        let mut ours = hilbert::eigenvalues(&op).unwrap();
        let mut oracle: Vec<f64> = to_nalgebra(&op).symmetric_eigenvalues().iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        oracle.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "trial {trial}: {a} vs {b}");
        }
        let max = hilbert::max_eigenvalue(&op).unwrap();
        assert!((max - oracle[DIM - 1]).abs() < 1e-9);
    }
}

#[test]
fn two_qubit_kronecker_sanity() {
    // XY on a pair equals the 4×4 Kronecker product written out by hand.
    let w: ObservableWord = "X2y2".parse().unwrap();
    let m = word_matrix(&w);
    let i = Complex64::new(0.0, 1.0);
    let o = c(0.0);
    let by_hand = Matrix4::new(o, o, o, -i, o, o, i, o, o, -i, o, o, i, o, o, o);
    for r in 0..4 {
        for col in 0..4 {
            assert_eq!(m[(r, col)], by_hand[(r, col)]);
        }
    }
}

#[test]
fn born_rule_chi_square() {
    for (k, (s, obs)) in born_rule_cases().iter().enumerate() {
        let m = JointMeasurement::new(s, obs).unwrap();
        let p = chi_square_p_value(&m, 100_000, 1000 + k as u64).unwrap();
        assert!(p > 0.001, "set {k}: p = {p}");
    }
}

#[test]
fn duplicate_slot_rejected() {
    let psi = build_cluster_state();
    assert!(JointMeasurement::new(&psi, &[LocalObservable::X1, LocalObservable::Z1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_identity(v in proptest::collection::vec(-1.0f64..1.0, 32), mask in 1u8..16) {
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-3);
        let s = state_from(&v);
        let axes = [Axis::X, Axis::Y, Axis::Z];
        let obs: Vec<LocalObservable> = Slot::ALL
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(i, &slot)| LocalObservable::new(slot, axes[(i + mask as usize) % 3]))
            .collect();
        let m = JointMeasurement::new(&s, &obs).unwrap();
        let total: f64 = m.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(m.probabilities().iter().all(|&p| p >= -1e-15));
        // Mean of the outcome product equals the expectation of the word.
        let mean: f64 = m
            .probabilities()
            .iter()
            .enumerate()
            .map(|(t, p)| p * m.record(t).product().as_f64())
            .sum();
        let word = ObservableWord::new(Sign::Plus, obs.clone()).unwrap();
        prop_assert!((mean - hilbert::expectation(&word, &s).unwrap()).abs() < 1e-12);
        // Single-observable marginals.
        for (i, &o) in obs.iter().enumerate() {
            let plus: f64 = m.probabilities().iter().enumerate().filter(|(t, _)| t >> i & 1 == 0).map(|(_, p)| p).sum();
            let e = hilbert::expectation(&ObservableWord::new(Sign::Plus, [o]).unwrap(), &s).unwrap();
            prop_assert!((plus - (1.0 + e) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_matches_dense_sandwich(v in proptest::collection::vec(-1.0f64..1.0, 32), code in 0usize..256) {
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-3);
        let s = state_from(&v);
        let w = &all_words()[code];
        let dense = word_matrix(w).sandwich(&s);
        prop_assert!((dense.re - hilbert::expectation(w, &s).unwrap()).abs() < 1e-12);
        prop_assert!(dense.im.abs() < 1e-12);
    }
}
