//! The two nonlocal games obtained from the all-versus-nothing arguments.
//!
//! A referee draws a pair of questions, each player answers the two values
//! asked, and the team wins if the answers satisfy the round's parity
//! relations. Deterministic strategies are value assignments over every id,
//! so an id is answered the same way whichever question asks it. Shared
//! randomness cannot beat the best deterministic strategy (the value is
//! linear in the mixture), so [`classical_value`] only enumerates
//! assignments.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::avn::{self, Assignment, AvnError, ObservableId, ParityConstraint, MAX_ENUMERATION_IDS};
use crate::hilbert::{self, HilbertError, JointMeasurement, LocalObservable, ObservableWord, StateVector};
use crate::rational::{self, Rational};
use crate::sign::Sign;
use crate::Variant;

/// Number of rounds kept verbatim in [`Simulation::log_sample`].
pub const LOG_SAMPLE_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GameError {
    #[error(transparent)]
    Avn(#[from] AvnError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("invalid game: {0}")]
    Invalid(String),
    #[error("round ({alice}, {bob}) has no single-word quantum evaluation: {reason}")]
    Unsupported {
        alice: String,
        bob: String,
        reason: String,
        /// The round's asked observables are jointly measurable, so the win
        /// rate can still be estimated by [`simulate_rounds`].
        monte_carlo_available: bool,
    },
    #[error("simulation needs at least one round")]
    NoRounds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Alice,
    Bob,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Question {
    pub player: Player,
    pub label: String,
    pub asked: [ObservableId; 2],
}

impl Question {
    pub fn new(player: Player, label: &str, a: &str, b: &str) -> Self {
        Question { player, label: label.to_string(), asked: [a.into(), b.into()] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Round {
    pub alice: String,
    pub bob: String,
    #[serde(serialize_with = "serialize_rational")]
    pub probability: Rational,
    /// Conjunction of relations that decides the round.
    pub predicates: Vec<ParityConstraint>,
}

impl Round {
    /// Won ⟺ every predicate holds for `answers`.
    pub fn won_by(&self, answers: &Assignment) -> Result<bool, AvnError> {
        self.predicates.iter().try_fold(true, |acc, p| Ok(acc && p.satisfied_by(answers)?))
    }
}

fn serialize_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<Variant>,
    alice_questions: Vec<Question>,
    bob_questions: Vec<Question>,
    rounds: Vec<Round>,
}

impl GameSpec {
    pub fn new(
        alice_questions: Vec<Question>,
        bob_questions: Vec<Question>,
        rounds: Vec<Round>,
    ) -> Result<Self, GameError> {
        let invalid = |msg: String| Err(GameError::Invalid(msg));
        for (qs, player) in [(&alice_questions, Player::Alice), (&bob_questions, Player::Bob)] {
            let mut labels = BTreeSet::new();
            for q in qs.iter() {
                if q.player != player {
                    return invalid(format!("question {} listed under the wrong player", q.label));
                }
                if !labels.insert(&q.label) {
                    return invalid(format!("duplicate question label {}", q.label));
                }
            }
        }
        let side = |qs: &[Question]| qs.iter().flat_map(|q| q.asked.iter().cloned()).collect::<BTreeSet<_>>();
        if let Some(id) = side(&alice_questions).intersection(&side(&bob_questions)).next() {
            return invalid(format!("id {id} is asked of both players"));
        }
        if rounds.is_empty() {
            return invalid("no rounds".into());
        }
        let mut total = Rational::zero();
        for r in &rounds {
            let (Some(a), Some(b)) =
                (alice_questions.iter().find(|q| q.label == r.alice), bob_questions.iter().find(|q| q.label == r.bob))
            else {
                return invalid(format!("round ({}, {}) names an unknown question", r.alice, r.bob));
            };
            if r.probability < Rational::zero() {
                return invalid(format!("round ({}, {}) has negative probability", r.alice, r.bob));
            }
            let asked: BTreeSet<&ObservableId> = a.asked.iter().chain(&b.asked).collect();
            for p in &r.predicates {
                if let Some(id) = p.ids().iter().find(|id| !asked.contains(id)) {
                    return invalid(format!("round ({}, {}) predicate uses unasked id {id}", r.alice, r.bob));
                }
            }
            total += &r.probability;
        }
        if !total.is_one() {
            return invalid(format!("round probabilities sum to {total}"));
        }
        Ok(GameSpec { variant: None, alice_questions, bob_questions, rounds })
    }

    pub fn variant(&self) -> Option<Variant> {
        self.variant
    }

    pub fn questions(&self, player: Player) -> &[Question] {
        match player {
            Player::Alice => &self.alice_questions,
            Player::Bob => &self.bob_questions,
        }
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn question_index(&self, player: Player, label: &str) -> usize {
        self.questions(player).iter().position(|q| q.label == label).expect("round labels validated at construction")
    }

    /// Questions of `round` as (Alice's, Bob's).
    pub fn round_questions(&self, round: &Round) -> (&Question, &Question) {
        (
            &self.alice_questions[self.question_index(Player::Alice, &round.alice)],
            &self.bob_questions[self.question_index(Player::Bob, &round.bob)],
        )
    }

    /// Ids asked of `player`, in first-asked order.
    pub fn player_ids(&self, player: Player) -> Vec<ObservableId> {
        let mut seen = BTreeSet::new();
        self.questions(player).iter().flat_map(|q| q.asked.iter()).filter(|id| seen.insert(*id)).cloned().collect()
    }

    /// Alice's ids followed by Bob's.
    pub fn universe(&self) -> Vec<ObservableId> {
        let mut u = self.player_ids(Player::Alice);
        u.extend(self.player_ids(Player::Bob));
        u
    }

    /// Probability that `player` is asked each of their questions.
    pub fn question_marginals(&self, player: Player) -> Vec<Rational> {
        let mut marginals = vec![Rational::zero(); self.questions(player).len()];
        for r in &self.rounds {
            let label = match player {
                Player::Alice => &r.alice,
                Player::Bob => &r.bob,
            };
            marginals[self.question_index(player, label)] += &r.probability;
        }
        marginals
    }
}

fn questions(player: Player, qs: &[(&str, &str, &str)]) -> Vec<Question> {
    qs.iter().map(|&(l, a, b)| Question::new(player, l, a, b)).collect()
}

/// Four-prediction game: Alice gets one of two questions and Bob one of four,
/// under the promise that only four pairs occur, each with probability 1/4.
pub fn new_game_spec() -> GameSpec {
    let alice = questions(Player::Alice, &[("I", "X1", "x1"), ("II", "Y1", "x1")]);
    let bob = questions(Player::Bob, &[("i", "X2", "y2"), ("ii", "X2", "z2"), ("iii", "Y2", "y2"), ("iv", "Y2", "z2")]);
    let relations = avn::constraint_system(Variant::New4).constraints().to_vec();
    let quarter = rational::ratio(1, 4);
    let rounds = [("I", "ii", 0), ("I", "iii", 2), ("II", "i", 3), ("II", "iv", 1)]
        .into_iter()
        .map(|(a, b, rel)| Round {
            alice: a.into(),
            bob: b.into(),
            probability: quarter.clone(),
            predicates: vec![relations[rel].clone()],
        })
        .collect();
    let mut spec = GameSpec::new(alice, bob, rounds).expect("static game");
    spec.variant = Some(Variant::New4);
    spec
}

/// Nine-prediction game: three questions per player, all nine pairs asked
/// uniformly. A round is decided by every relation whose ids are all asked in
/// it.
pub fn old_game_spec() -> GameSpec {
    let alice = questions(Player::Alice, &[("I", "Z1", "x1"), ("II", "X1", "z1"), ("III", "Z1z1", "X1x1")]);
    let bob = questions(Player::Bob, &[("i", "Z2", "z2"), ("ii", "X2", "x2"), ("iii", "Z2x2", "X2z2")]);
    let relations = avn::constraint_system(Variant::Old9).constraints().to_vec();
    let ninth = rational::ratio(1, 9);
    let mut rounds = Vec::new();
    for a in &alice {
        for b in &bob {
            let asked: BTreeSet<&ObservableId> = a.asked.iter().chain(&b.asked).collect();
            let predicates =
                relations.iter().filter(|rel| rel.ids().iter().all(|id| asked.contains(id))).cloned().collect();
            rounds.push(Round { alice: a.label.clone(), bob: b.label.clone(), probability: ninth.clone(), predicates });
        }
    }
    let mut spec = GameSpec::new(alice, bob, rounds).expect("static game");
    spec.variant = Some(Variant::Old9);
    spec
}

pub fn game_spec(variant: Variant) -> GameSpec {
    match variant {
        Variant::New4 => new_game_spec(),
        Variant::Old9 => old_game_spec(),
    }
}

/// Win probability of a deterministic strategy.
pub fn strategy_value(spec: &GameSpec, strategy: &Assignment) -> Result<Rational, GameError> {
    strategy.covers(&spec.universe())?;
    spec.rounds
        .iter()
        .try_fold(Rational::zero(), |acc, r| Ok(if r.won_by(strategy)? { acc + &r.probability } else { acc }))
}

/// Best deterministic strategy (first maximizer in enumeration order) and
/// its value.
pub fn optimal_classical_strategy(spec: &GameSpec) -> Result<(Rational, Assignment), GameError> {
    let universe = spec.universe();
    let n = universe.len();
    if n > MAX_ENUMERATION_IDS {
        return Err(AvnError::Capacity(n).into());
    }
    let index: BTreeMap<&ObservableId, usize> = universe.iter().enumerate().map(|(i, id)| (id, i)).collect();
    // Integer weights over the common denominator.
    let denom = spec.rounds.iter().fold(BigInt::one(), |acc, r| num_integer::Integer::lcm(&acc, r.probability.denom()));
    let rounds: Vec<(u128, Vec<(u64, u32)>)> = spec
        .rounds
        .iter()
        .map(|r| {
            let weight = (&r.probability * Rational::from_integer(denom.clone())).to_integer();
            let weight = weight.to_u128().ok_or_else(|| GameError::Invalid("round weights too large".into()))?;
            let preds = r
                .predicates
                .iter()
                .map(|p| {
                    let mask = p.ids().iter().fold(0u64, |m, id| m ^ (1 << index[id]));
                    (mask, u32::from(p.rhs().bit()))
                })
                .collect();
            Ok((weight, preds))
        })
        .collect::<Result<_, GameError>>()?;
    let mut best = (0u128, 0u64);
    let mut found = false;
    for mask in 0..1u64 << n {
        let score: u128 = rounds
            .iter()
            .filter(|(_, preds)| preds.iter().all(|&(p, rhs)| (p & mask).count_ones() & 1 == rhs))
            .map(|(w, _)| w)
            .sum();
        if !found || score > best.0 {
            best = (score, mask);
            found = true;
        }
    }
    let value = Rational::new(BigInt::from(best.0), denom);
    Ok((value, Assignment::from_mask(&universe, best.1)))
}

/// Maximum win probability over deterministic strategies, exactly.
pub fn classical_value(spec: &GameSpec) -> Result<Rational, GameError> {
    Ok(optimal_classical_strategy(spec)?.0)
}

/// The single word a round's predicate measures, when one exists.
fn round_word(spec: &GameSpec, round: &Round) -> Result<(ObservableWord, Sign), GameError> {
    let unsupported = |reason: String| GameError::Unsupported {
        alice: round.alice.clone(),
        bob: round.bob.clone(),
        monte_carlo_available: round_observables(spec, round).is_ok(),
        reason,
    };
    let [predicate] = round.predicates.as_slice() else {
        return Err(unsupported(format!("{} predicates", round.predicates.len())));
    };
    let factors = predicate
        .ids()
        .iter()
        .map(|id| id.local_observable().ok_or_else(|| unsupported(format!("{id} is not a single-slot observable"))))
        .collect::<Result<Vec<_>, _>>()?;
    let word = ObservableWord::new(Sign::Plus, factors).map_err(|e| unsupported(e.to_string()))?;
    Ok((word, predicate.rhs()))
}

/// The four asked observables of a round, when they are jointly measurable.
fn round_observables(spec: &GameSpec, round: &Round) -> Result<Vec<LocalObservable>, GameError> {
    let (a, b) = spec.round_questions(round);
    let observables = a
        .asked
        .iter()
        .chain(&b.asked)
        .map(|id| {
            id.local_observable().ok_or_else(|| GameError::Unsupported {
                alice: round.alice.clone(),
                bob: round.bob.clone(),
                reason: format!("{id} has no single-slot measurement"),
                monte_carlo_available: false,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut slots: Vec<_> = observables.iter().map(|o| o.slot).collect();
    slots.sort();
    if slots.windows(2).any(|w| w[0] == w[1]) {
        return Err(GameError::Unsupported {
            alice: round.alice.clone(),
            bob: round.bob.clone(),
            reason: "asked observables share a slot".into(),
            monte_carlo_available: false,
        });
    }
    Ok(observables)
}

/// `Σ_r p_r (1 + rhs_r ⟨W_r⟩)/2` for a strategy that answers with the
/// measurement results on `s`.
pub fn quantum_value(spec: &GameSpec, s: &StateVector) -> Result<f64, GameError> {
    spec.rounds.iter().try_fold(0.0, |acc, r| {
        let (word, rhs) = round_word(spec, r)?;
        let e = hilbert::expectation(&word, s)?;
        Ok(acc + rational::to_f64(&r.probability) * (1.0 + rhs.as_f64() * e) / 2.0)
    })
}

/// Inverse-CDF sampler over a game's round distribution.
#[derive(Clone, Debug)]
pub struct RoundSampler {
    cumulative: Vec<f64>,
}

impl RoundSampler {
    pub fn new(spec: &GameSpec) -> Self {
        let mut acc = 0.0;
        let cumulative = spec
            .rounds
            .iter()
            .map(|r| {
                acc += rational::to_f64(&r.probability);
                acc
            })
            .collect();
        RoundSampler { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1)
    }
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Strategy {
    Classical(Assignment),
    /// Answer with the joint measurement results on a shared state.
    Quantum(StateVector),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundLog {
    pub alice: String,
    pub bob: String,
    pub alice_answers: BTreeMap<ObservableId, Sign>,
    pub bob_answers: BTreeMap<ObservableId, Sign>,
    pub won: bool,
}

impl RoundLog {
    /// One JSON object per line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("round log serializes")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Simulation {
    pub rounds: u64,
    pub wins: u64,
    pub win_rate: f64,
    /// How often each round of the spec was drawn, in round order.
    pub round_counts: Vec<u64>,
    pub log_sample: Vec<RoundLog>,
}

pub fn simulate_rounds<R: Rng + ?Sized>(
    spec: &GameSpec,
    strategy: &Strategy,
    n: u64,
    rng: &mut R,
) -> Result<Simulation, GameError> {
    simulate_rounds_with(spec, strategy, n, rng, |_| {})
}

/// As [`simulate_rounds`], handing every round's log to `on_round`.
pub fn simulate_rounds_with<R, F>(
    spec: &GameSpec,
    strategy: &Strategy,
    n: u64,
    rng: &mut R,
    mut on_round: F,
) -> Result<Simulation, GameError>
where
    R: Rng + ?Sized,
    F: FnMut(&RoundLog),
{
    if n == 0 {
        return Err(GameError::NoRounds);
    }
    let measurements: Option<Vec<JointMeasurement>> = match strategy {
        Strategy::Classical(a) => {
            a.covers(&spec.universe())?;
            None
        }
        Strategy::Quantum(s) => Some(
            spec.rounds
                .iter()
                .map(|r| Ok(JointMeasurement::new(s, &round_observables(spec, r)?)?))
                .collect::<Result<_, GameError>>()?,
        ),
    };
    let sampler = RoundSampler::new(spec);
    let mut wins = 0;
    let mut round_counts = vec![0; spec.rounds.len()];
    let mut log_sample = Vec::new();
    for _ in 0..n {
        let k = sampler.sample(rng);
        round_counts[k] += 1;
        let round = &spec.rounds[k];
        let (qa, qb) = spec.round_questions(round);
        let answers: Assignment = match (strategy, &measurements) {
            (Strategy::Classical(a), _) => {
                qa.asked.iter().chain(&qb.asked).map(|id| (id.clone(), a.get(id).expect("coverage checked"))).collect()
            }
            (Strategy::Quantum(_), Some(ms)) => {
                let record = ms[k].sample(rng);
                qa.asked.iter().chain(&qb.asked).zip(&record.outcomes).map(|(id, &(_, v))| (id.clone(), v)).collect()
            }
            (Strategy::Quantum(_), None) => unreachable!("measurements prepared for quantum strategies"),
        };
        let won = round.won_by(&answers)?;
        wins += u64::from(won);
        let pick = |q: &Question| -> BTreeMap<ObservableId, Sign> {
            q.asked.iter().map(|id| (id.clone(), answers.get(id).expect("asked"))).collect()
        };
        let log = RoundLog {
            alice: round.alice.clone(),
            bob: round.bob.clone(),
            alice_answers: pick(qa),
            bob_answers: pick(qb),
            won,
        };
        on_round(&log);
        if log_sample.len() < LOG_SAMPLE_LEN {
            log_sample.push(log);
        }
    }
    Ok(Simulation { rounds: n, wins, win_rate: wins as f64 / n as f64, round_counts, log_sample })
}
