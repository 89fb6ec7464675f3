//! Ideal projective joint measurement of commuting local observables.

use rand::Rng;
use serde::Serialize;

use super::{apply, HilbertError, LocalObservable, ObservableWord, StateVector};
use crate::sign::Sign;

/// One ±1 outcome per measured observable, in request order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutcomeRecord {
    pub outcomes: Vec<(LocalObservable, Sign)>,
}

impl OutcomeRecord {
    pub fn value_of(&self, observable: LocalObservable) -> Option<Sign> {
        self.outcomes.iter().find(|(o, _)| *o == observable).map(|&(_, s)| s)
    }

    /// Product of all outcomes.
    pub fn product(&self) -> Sign {
        Sign::product(self.outcomes.iter().map(|&(_, s)| s))
    }
}

/// Born distribution over outcome tuples for one set of observables.
///
/// Tuple `t` assigns `Minus` to observable `i` iff bit `i` of `t` is set.
/// Its probability is `‖Π_i (I + σ_i O_i)/2 · s‖²`.
#[derive(Clone, Debug)]
pub struct JointMeasurement {
    observables: Vec<LocalObservable>,
    probabilities: Vec<f64>,
}

impl JointMeasurement {
    pub fn new(s: &StateVector, observables: &[LocalObservable]) -> Result<Self, HilbertError> {
        let mut slots: Vec<_> = observables.iter().map(|o| o.slot).collect();
        slots.sort();
        if slots.windows(2).any(|w| w[0] == w[1]) {
            return Err(HilbertError::MalformedRequest(format!(
                "observables {:?} do not sit on distinct slots",
                observables.iter().map(|o| o.name()).collect::<Vec<_>>()
            )));
        }
        let words: Vec<ObservableWord> =
            observables.iter().map(|&o| ObservableWord::new(Sign::Plus, [o]).expect("single factor")).collect();
        let probabilities = (0..1usize << observables.len())
            .map(|tuple| {
                let projected = words.iter().enumerate().fold(s.clone(), |v, (i, w)| {
                    let sigma = Sign::from_bit(tuple >> i & 1 == 1).as_f64();
                    let image = apply(w, &v);
                    let mut amps = *v.amplitudes();
                    for (a, b) in amps.iter_mut().zip(image.amplitudes()) {
                        *a = (*a + b * sigma) * 0.5;
                    }
                    StateVector::from_raw(amps)
                });
                projected.norm_sqr()
            })
            .collect();
        Ok(JointMeasurement { observables: observables.to_vec(), probabilities })
    }

    pub fn observables(&self) -> &[LocalObservable] {
        &self.observables
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn record(&self, tuple: usize) -> OutcomeRecord {
        OutcomeRecord {
            outcomes: self
                .observables
                .iter()
                .enumerate()
                .map(|(i, &o)| (o, Sign::from_bit(tuple >> i & 1 == 1)))
                .collect(),
        }
    }

    /// Inverse-CDF draw of a tuple index.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return i;
            }
        }
        // Rounding left u above the total; fall back to the last tuple with mass.
        self.probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> OutcomeRecord {
        self.record(self.sample_index(rng))
    }
}

pub fn sample_joint_measurement<R: Rng + ?Sized>(
    s: &StateVector,
    observables: &[LocalObservable],
    rng: &mut R,
) -> Result<OutcomeRecord, HilbertError> {
    Ok(JointMeasurement::new(s, observables)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::build_cluster_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn z1_z2_outcomes_always_agree() {
        let psi = build_cluster_state();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = JointMeasurement::new(&psi, &[LocalObservable::z1, LocalObservable::z2]).unwrap();
        for _ in 0..2000 {
            let r = m.sample(&mut rng);
            assert_eq!(r.outcomes[0].1, r.outcomes[1].1);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let psi = build_cluster_state();
        use LocalObservable as L;
        let m = JointMeasurement::new(&psi, &[L::X1, L::y1, L::Z2, L::x2]).unwrap();
        let total: f64 = m.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(m.probabilities().len(), 16);
    }

    #[test]
    fn x1_marginal_is_fair() {
        let psi = build_cluster_state();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = JointMeasurement::new(&psi, &[LocalObservable::X1]).unwrap();
        let n = 100_000;
        let plus = (0..n).filter(|_| m.sample(&mut rng).outcomes[0].1 == Sign::Plus).count();
        let freq = plus as f64 / n as f64;
        assert!((0.49..=0.51).contains(&freq), "{freq}");
    }

    #[test]
    fn duplicate_slots_rejected() {
        let psi = build_cluster_state();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = sample_joint_measurement(&psi, &[LocalObservable::X1, LocalObservable::Z1], &mut rng);
        assert!(matches!(err, Err(HilbertError::MalformedRequest(_))));
    }
}
