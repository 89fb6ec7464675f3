//! Oracles shared by the integration suites and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;

use avn_lab::avn::{
    constraint_system, infeasibility_witness, max_satisfiable, satisfied_count, ConstraintSystem, Feasibility,
    ObservableId, ParityConstraint,
};
use avn_lab::hilbert::{build_cluster_state, JointMeasurement, LocalObservable, StateVector, DIM};
use avn_lab::{Sign, Variant};
use num_complex::Complex64;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Best count and number of maximizers, by direct parity counting.
pub fn brute_force(sys: &ConstraintSystem) -> (usize, u64) {
    let n = sys.universe().len();
    let index: BTreeMap<&ObservableId, usize> = sys.universe().iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut best = 0;
    let mut count = 0;
    for mask in 0u64..1 << n {
        let satisfied = sys
            .constraints()
            .iter()
            .filter(|c| {
                let minus = c.ids().iter().filter(|id| mask >> index[id] & 1 == 1).count();
                (minus % 2 == 1) == (c.rhs() == Sign::Minus)
            })
            .count();
        if satisfied > best {
            best = satisfied;
            count = 1;
        } else if satisfied == best {
            count += 1;
        }
    }
    (best, count)
}

/// Every id occurs an even number of times and the right-hand sides
/// multiply to −1.
pub fn is_valid_witness(sys: &ConstraintSystem, witness: &[usize]) -> bool {
    let mut occurrences: BTreeMap<&ObservableId, usize> = BTreeMap::new();
    let mut rhs = Sign::Plus;
    for &k in witness {
        let c = &sys.constraints()[k];
        for id in c.ids() {
            *occurrences.entry(id).or_default() += 1;
        }
        rhs *= c.rhs();
    }
    !witness.is_empty() && occurrences.values().all(|n| n % 2 == 0) && rhs == Sign::Minus
}

pub fn random_system(rng: &mut ChaCha8Rng) -> ConstraintSystem {
    let n = rng.random_range(1..=12);
    let universe: Vec<ObservableId> = (0..n).map(|i| ObservableId::new(format!("o{i}"))).collect();
    let m = rng.random_range(1..=10);
    let constraints = (0..m)
        .map(|_| {
            let k = rng.random_range(1..=n.min(4));
            let ids: Vec<ObservableId> = universe.choose_multiple(rng, k).cloned().collect();
            let rhs = if rng.random() { Sign::Minus } else { Sign::Plus };
            ParityConstraint::new(ids, rhs).unwrap()
        })
        .collect();
    ConstraintSystem::new(universe, constraints).unwrap()
}

/// Checks `systems` random systems: exhaustive counts agree with brute force,
/// and a valid witness exists exactly when not every constraint can hold.
/// Returns the number of infeasible systems seen, or a description of the
/// first disagreement.
pub fn witness_equivalence(systems: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut infeasible = 0;
    for k in 0..systems {
        let sys = random_system(&mut rng);
        let total = sys.constraints().len();
        let (best, count) = brute_force(&sys);
        let m = max_satisfiable(&sys).map_err(|e| e.to_string())?;
        if (m.best, m.optima_count) != (best, count) {
            return Err(format!("system {k}: enumeration disagrees with brute force"));
        }
        match infeasibility_witness(&sys) {
            Feasibility::Infeasible { witness } => {
                if best == total || !is_valid_witness(&sys, &witness) {
                    return Err(format!("system {k}: bad witness {witness:?}"));
                }
                infeasible += 1;
            }
            Feasibility::Satisfiable { assignment } => {
                if best != total || satisfied_count(&assignment, &sys).ok() != Some(total) {
                    return Err(format!("system {k}: bad satisfying assignment"));
                }
            }
        }
    }
    Ok(infeasible)
}

/// Random relabelings and sign flips of the two argument systems leave the
/// exhaustive maximum unchanged.
pub fn gauge_invariance(trials: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let sys = constraint_system(Variant::ALL[trial % 2]);
        let reference = max_satisfiable(&sys).map_err(|e| e.to_string())?;
        let mut order: Vec<usize> = (0..sys.universe().len()).collect();
        order.shuffle(&mut rng);
        let suffix = format!("_{trial}");
        let mut moved = sys.relabeled(&order, |id| ObservableId::new(format!("{id}{suffix}")));
        let flips = rng.random_range(0..=moved.universe().len());
        for _ in 0..flips {
            let id = moved.universe()[rng.random_range(0..moved.universe().len())].clone();
            moved = moved.with_negated(&id);
        }
        let m = max_satisfiable(&moved).map_err(|e| e.to_string())?;
        if m != reference || infeasibility_witness(&moved).witness().is_none() {
            return Err(format!("trial {trial}: {m:?} vs {reference:?}"));
        }
    }
    Ok(())
}

pub fn state_from(v: &[f64]) -> StateVector {
    let mut amps = [Complex64::new(0.0, 0.0); DIM];
    for (i, a) in amps.iter_mut().enumerate() {
        *a = Complex64::new(v[2 * i], v[2 * i + 1]);
    }
    StateVector::normalized(amps).unwrap()
}

/// Three observable sets, two on the cluster state and one on a fixed
/// pseudo-random state.
pub fn born_rule_cases() -> Vec<(StateVector, Vec<LocalObservable>)> {
    use LocalObservable as L;
    let random = state_from(&(0..32).map(|k| ((k * 7919 % 101) as f64 / 50.0) - 1.0).collect::<Vec<_>>());
    vec![
        (build_cluster_state(), vec![L::X1, L::x1, L::X2]),
        (build_cluster_state(), vec![L::Z1, L::y1, L::Y2, L::z2]),
        (random, vec![L::Y1, L::z1, L::X2, L::y2]),
    ]
}

/// Pearson chi-square p-value of `samples` draws against the Born
/// probabilities. Drawing an outcome of zero probability is an error.
pub fn chi_square_p_value(m: &JointMeasurement, samples: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; m.probabilities().len()];
    for _ in 0..samples {
        counts[m.sample_index(&mut rng)] += 1;
    }
    let mut stat = 0.0;
    let mut cells = 0;
    for (t, (&n, &p)) in counts.iter().zip(m.probabilities()).enumerate() {
        if p < 1e-12 {
            if n > 0 {
                return Err(format!("outcome {t} has zero probability but was drawn {n} times"));
            }
            continue;
        }
        let expected = p * samples as f64;
        stat += (n as f64 - expected).powi(2) / expected;
        cells += 1;
    }
    if cells < 2 {
        return Ok(1.0);
    }
    Ok(1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat))
}
