mod common;

use avn_lab::avn::{constraint_system, infeasibility_witness, max_satisfiable, satisfied_count, Assignment};
use avn_lab::Variant;

use common::{brute_force, gauge_invariance, is_valid_witness, witness_equivalence};

#[test]
fn headline_values() {
    let new = max_satisfiable(&constraint_system(Variant::New4)).unwrap();
    assert_eq!((new.best, new.total, new.optima_count), (3, 4, 64));
    let old = max_satisfiable(&constraint_system(Variant::Old9)).unwrap();
    assert_eq!((old.best, old.total, old.optima_count), (8, 9, 144));
    for v in Variant::ALL {
        let sys = constraint_system(v);
        assert_eq!(brute_force(&sys), {
            let m = max_satisfiable(&sys).unwrap();
            (m.best, m.optima_count)
        });
    }
}

#[test]
fn new_system_witness_is_everything() {
    let sys = constraint_system(Variant::New4);
    assert_eq!(infeasibility_witness(&sys).witness(), Some(&[0, 1, 2, 3][..]));
    // Each value appears exactly twice across the four predictions.
    for id in sys.universe() {
        assert_eq!(sys.constraints().iter().filter(|c| c.mentions(id)).count(), 2, "{id}");
    }
}

#[test]
fn every_assignment_violates_an_odd_number() {
    let sys = constraint_system(Variant::New4);
    for mask in 0..1 << sys.universe().len() {
        let a = Assignment::from_mask(sys.universe(), mask);
        let violated = sys.constraints().len() - satisfied_count(&a, &sys).unwrap();
        assert_eq!(violated % 2, 1, "mask {mask:#b}");
    }
}

#[test]
fn old_system_witness() {
    let sys = constraint_system(Variant::Old9);
    let witness = infeasibility_witness(&sys).witness().unwrap().to_vec();
    assert!(is_valid_witness(&sys, &witness));
}

#[test]
fn relabeling_and_negation_preserve_the_maximum() {
    gauge_invariance(50, 2024).unwrap();
}

#[test]
fn witness_iff_unsatisfiable_on_random_systems() {
    let infeasible = witness_equivalence(200, 7).unwrap();
    // Both branches are exercised.
    assert!(infeasible > 0 && infeasible < 200, "{infeasible}");
}
