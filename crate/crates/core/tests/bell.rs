use avn_lab::avn::{constraint_system, satisfied_count, Assignment, ObservableId};
use avn_lab::bell::{
    bell_expression, estimate_terms, isotropic_value, lhv_bound, max_violation_check, noise_threshold, quantum_value,
};
use avn_lab::hilbert::{build_cluster_state, StateVector, DIM};
use avn_lab::rational::integer;
use avn_lab::Variant;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(rng: &mut ChaCha8Rng) -> StateVector {
    let mut amps = [Complex64::new(0.0, 0.0); DIM];
    for a in &mut amps {
        *a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    StateVector::normalized(amps).unwrap()
}

fn random_qubit(rng: &mut ChaCha8Rng) -> [Complex64; 2] {
    let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    [Complex64::new((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi)]
}

#[test]
fn headline_values() {
    let e = bell_expression();
    let psi = build_cluster_state();
    assert!((quantum_value(&e, &psi).unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(lhv_bound(&e), integer(2));
    assert!((max_violation_check(&e).unwrap() - 4.0).abs() < 1e-9);
    assert!((noise_threshold(&e, &psi).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn local_value_is_four_minus_twice_the_violations() {
    let e = bell_expression();
    let sys = constraint_system(Variant::New4);
    for mask in 0..1u64 << sys.universe().len() {
        let a = Assignment::from_mask(sys.universe(), mask);
        let violated = sys.constraints().len() - satisfied_count(&a, &sys).unwrap();
        let value = e.local_value(|o| a.get(&ObservableId::new(o.name())).expect("id in universe"));
        assert_eq!(value, 4 - 2 * violated as i64, "mask {mask:#b}");
    }
}

#[test]
fn isotropic_noise_against_dense_density_matrix() {
    let e = bell_expression();
    let psi = build_cluster_state();
    let op = e.operator();
    let s = DMatrix::from_fn(DIM, DIM, |r, c| op[(r, c)]);
    let ket = DMatrix::from_fn(DIM, 1, |r, _| psi.amplitude(r));
    let projector = &ket * ket.adjoint();
    for v in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let rho = projector.scale(v) + DMatrix::identity(DIM, DIM).scale((1.0 - v) / DIM as f64);
        let trace = (&rho * &s).trace();
        assert!(trace.im.abs() < 1e-12);
        assert!((trace.re - isotropic_value(&e, &psi, v).unwrap()).abs() < 1e-12, "v = {v}");
    }
    // At the threshold the noisy value meets the local bound.
    let v = noise_threshold(&e, &psi).unwrap();
    assert!((isotropic_value(&e, &psi, v).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn eigenvalue_bounds_random_states() {
    let e = bell_expression();
    let max = max_violation_check(&e).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    for _ in 0..100 {
        let s = random_state(&mut rng);
        assert!(quantum_value(&e, &s).unwrap() <= max + 1e-9);
    }
}

#[test]
fn product_states_respect_the_local_bound() {
    let e = bell_expression();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let qubits = [0; 4].map(|_| random_qubit(&mut rng));
        let s = StateVector::product(qubits).unwrap();
        assert!(quantum_value(&e, &s).unwrap().abs() <= 2.0 + 1e-12);
    }
}

#[test]
fn estimates_within_five_standard_errors() {
    let e = bell_expression();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let qubits = [0; 4].map(|_| random_qubit(&mut rng));
        let s = StateVector::product(qubits).unwrap();
        let est = estimate_terms(&e, &s, 20_000, &mut rng).unwrap();
        for t in &est.terms {
            assert!(
                (t.mean - t.exact).abs() <= 5.0 * t.standard_error + 1e-12,
                "{}: {} vs {}",
                t.word,
                t.mean,
                t.exact
            );
        }
        let exact = quantum_value(&e, &s).unwrap();
        assert!((est.total - exact).abs() <= 5.0 * est.total_standard_error + 1e-12);
    }
}

#[test]
fn cluster_state_estimate_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let est = estimate_terms(&bell_expression(), &build_cluster_state(), 100_000, &mut rng).unwrap();
    assert!((est.total - 4.0).abs() < 0.05);
}
