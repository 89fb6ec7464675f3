//! Detection-efficiency analysis.
//!
//! A local model may refuse to answer. Its hidden variable is a pair of
//! [`InstructionTable`]s with one entry per id: a value ±1, or `NoAnswer`
//! meaning the detector stays silent whenever that id is asked. A player
//! therefore answers a question iff neither asked id is silenced. The induced
//! per-question behaviour is an [`InstructionSheet`].
//!
//! A round counts only when both players answer. [`critical_efficiency`]
//! finds the largest common answer rate of any ensemble that wins every
//! counted round. Above it, no local model reproduces perfect quantum
//! correlations.

mod simplex;

pub use simplex::{LinearProgram, LpError, LpSolution};

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::avn::{Assignment, ObservableId};
use crate::game::{self, GameError, GameSpec, Player, Question, RoundSampler};
use crate::rational::{self, ExactValue, Rational};
use crate::sign::Sign;
use crate::Variant;

/// Most ids per player whose `3^k` tables are enumerated.
pub const MAX_TABLE_IDS: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoopholeError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("mixing parameter p = {0} outside [0, 1]")]
    ProbabilityOutOfRange(Rational),
    #[error("ensemble weights sum to {0}, not 1")]
    NotNormalized(Rational),
    #[error("negative ensemble weight {0}")]
    NegativeWeight(Rational),
    #[error("{player:?} sheet has {found} entries, game has {expected} questions")]
    SheetShape { player: Player, found: usize, expected: usize },
    #[error("{0} ids on one side exceeds the table enumeration limit of {MAX_TABLE_IDS}")]
    Capacity(usize),
}

/// Entry of an instruction table: a value or a refusal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    Value(Sign),
    NoAnswer,
}

impl Serialize for Entry {
    /// `1`, `-1`, or `0` for a refusal.
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Entry::Value(v) => v.serialize(s),
            Entry::NoAnswer => s.serialize_i8(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstructionTable {
    pub player: Player,
    pub entries: BTreeMap<ObservableId, Entry>,
}

impl InstructionTable {
    /// Values for `ids` taken from `a`, nothing silenced.
    pub fn from_assignment(player: Player, ids: &[ObservableId], a: &Assignment) -> Self {
        let entries = ids.iter().map(|id| (id.clone(), Entry::Value(a.get(id).unwrap_or_default()))).collect();
        InstructionTable { player, entries }
    }

    pub fn silencing(mut self, ids: &[&str]) -> Self {
        for id in ids {
            self.entries.insert(ObservableId::from(*id), Entry::NoAnswer);
        }
        self
    }

    /// Per-question behaviour under this table.
    pub fn sheet(&self, questions: &[Question]) -> InstructionSheet {
        let entries = questions
            .iter()
            .map(|q| {
                let values: Option<Vec<Sign>> = q
                    .asked
                    .iter()
                    .map(|id| match self.entries.get(id) {
                        Some(Entry::Value(v)) => Some(*v),
                        _ => None,
                    })
                    .collect();
                match values.as_deref() {
                    Some(&[a, b]) => SheetEntry::Answer([a, b]),
                    _ => SheetEntry::NoAnswer,
                }
            })
            .collect();
        InstructionSheet { player: self.player, entries }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SheetEntry {
    Answer([Sign; 2]),
    NoAnswer,
}

/// What one player does for each of their questions, in game order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct InstructionSheet {
    pub player: Player,
    pub entries: Vec<SheetEntry>,
}

impl InstructionSheet {
    fn answers(&self, question: usize) -> Option<[Sign; 2]> {
        match self.entries[question] {
            SheetEntry::Answer(a) => Some(a),
            SheetEntry::NoAnswer => None,
        }
    }

    /// Probability of answering under `player`'s question marginals.
    pub fn answer_rate(&self, spec: &GameSpec) -> Rational {
        spec.question_marginals(self.player)
            .iter()
            .zip(&self.entries)
            .filter(|(_, e)| matches!(e, SheetEntry::Answer(_)))
            .fold(Rational::zero(), |acc, (p, _)| acc + p)
    }

    /// Answers no more questions than `other`, identically where it answers.
    pub fn refines(&self, other: &InstructionSheet) -> bool {
        self.entries.iter().zip(&other.entries).all(|(a, b)| matches!(a, SheetEntry::NoAnswer) || a == b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundOutcome {
    /// At least one player stayed silent.
    Discarded,
    Won,
    Lost,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct JointInstruction {
    pub alice: InstructionSheet,
    pub bob: InstructionSheet,
}

impl JointInstruction {
    pub fn from_tables(spec: &GameSpec, alice: &InstructionTable, bob: &InstructionTable) -> Self {
        JointInstruction {
            alice: alice.sheet(spec.questions(Player::Alice)),
            bob: bob.sheet(spec.questions(Player::Bob)),
        }
    }

    fn check_shape(&self, spec: &GameSpec) -> Result<(), LoopholeError> {
        for sheet in [&self.alice, &self.bob] {
            let expected = spec.questions(sheet.player).len();
            if sheet.entries.len() != expected {
                return Err(LoopholeError::SheetShape { player: sheet.player, found: sheet.entries.len(), expected });
            }
        }
        Ok(())
    }

    pub fn outcome(&self, spec: &GameSpec, round: usize) -> RoundOutcome {
        let r = &spec.rounds()[round];
        let qa = spec.question_index(Player::Alice, &r.alice);
        let qb = spec.question_index(Player::Bob, &r.bob);
        let (Some(a), Some(b)) = (self.alice.answers(qa), self.bob.answers(qb)) else {
            return RoundOutcome::Discarded;
        };
        let (question_a, question_b) = spec.round_questions(r);
        let answers: Assignment = question_a
            .asked
            .iter()
            .zip(a)
            .chain(question_b.asked.iter().zip(b))
            .map(|(id, v)| (id.clone(), v))
            .collect();
        match r.won_by(&answers) {
            Ok(true) => RoundOutcome::Won,
            // Predicates only mention asked ids (validated by GameSpec).
            Ok(false) | Err(_) => RoundOutcome::Lost,
        }
    }

    /// Never loses a round in which both players answer.
    pub fn is_perfect(&self, spec: &GameSpec) -> bool {
        (0..spec.rounds().len()).all(|k| self.outcome(spec, k) != RoundOutcome::Lost)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedInstruction {
    pub instruction: JointInstruction,
    #[serde(serialize_with = "serialize_rational")]
    pub weight: Rational,
}

fn serialize_rational<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(r)
}

/// Probability-weighted joint instructions; weights are exact and sum to 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ensemble {
    components: Vec<WeightedInstruction>,
}

impl Ensemble {
    /// Drops zero-weight components.
    pub fn new(components: Vec<(JointInstruction, Rational)>) -> Result<Self, LoopholeError> {
        let mut total = Rational::zero();
        for (_, w) in &components {
            if w.is_negative() {
                return Err(LoopholeError::NegativeWeight(w.clone()));
            }
            total += w;
        }
        if !total.is_one() {
            return Err(LoopholeError::NotNormalized(total));
        }
        let components = components
            .into_iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|(instruction, weight)| WeightedInstruction { instruction, weight })
            .collect();
        Ok(Ensemble { components })
    }

    pub fn components(&self) -> &[WeightedInstruction] {
        &self.components
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub eta_alice: ExactValue,
    pub eta_bob: ExactValue,
    /// `None` when no round is ever valid.
    pub conditional_win: Option<ExactValue>,
    pub valid_round_probability: ExactValue,
    #[serde(skip)]
    pub exact: ExactEfficiency,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExactEfficiency {
    pub eta_alice: Rational,
    pub eta_bob: Rational,
    pub conditional_win: Option<Rational>,
    pub valid_round_probability: Rational,
}

impl ExactEfficiency {
    pub fn min_eta(&self) -> Rational {
        self.eta_alice.clone().min(self.eta_bob.clone())
    }
}

pub fn efficiency_of(e: &Ensemble, spec: &GameSpec) -> Result<EfficiencyReport, LoopholeError> {
    let mut exact = ExactEfficiency::default();
    let mut won = Rational::zero();
    for c in &e.components {
        c.instruction.check_shape(spec)?;
        exact.eta_alice += &c.weight * c.instruction.alice.answer_rate(spec);
        exact.eta_bob += &c.weight * c.instruction.bob.answer_rate(spec);
        for (k, r) in spec.rounds().iter().enumerate() {
            match c.instruction.outcome(spec, k) {
                RoundOutcome::Discarded => {}
                RoundOutcome::Won => {
                    exact.valid_round_probability += &c.weight * &r.probability;
                    won += &c.weight * &r.probability;
                }
                RoundOutcome::Lost => exact.valid_round_probability += &c.weight * &r.probability,
            }
        }
    }
    exact.conditional_win = (!exact.valid_round_probability.is_zero()).then(|| won / &exact.valid_round_probability);
    Ok(EfficiencyReport {
        eta_alice: (&exact.eta_alice).into(),
        eta_bob: (&exact.eta_bob).into(),
        conditional_win: exact.conditional_win.as_ref().map(ExactValue::from),
        valid_round_probability: (&exact.valid_round_probability).into(),
        exact,
    })
}

/// The deterministic table behind the perfect-correlation strategy `G` of
/// each argument.
pub fn reference_g_assignment(variant: Variant) -> Assignment {
    let spec = game::game_spec(variant);
    let universe = spec.universe();
    let mut a = Assignment::constant(&universe, Sign::Plus);
    if variant == Variant::Old9 {
        for id in ["Z2", "z2", "X2", "x2"] {
            a.set(id.into(), Sign::Minus);
        }
    }
    a
}

/// The tables `G`, `B₁`, `B₂`: `B₁` silences Alice on one row, `B₂` silences
/// Bob on one row.
pub fn reference_tables(variant: Variant) -> [(InstructionTable, InstructionTable); 3] {
    let spec = game::game_spec(variant);
    let g = reference_g_assignment(variant);
    let alice = InstructionTable::from_assignment(Player::Alice, &spec.player_ids(Player::Alice), &g);
    let bob = InstructionTable::from_assignment(Player::Bob, &spec.player_ids(Player::Bob), &g);
    let (alice_silenced, bob_silenced): (&[&str], &[&str]) = match variant {
        Variant::New4 => (&["Y1"], &["Y2"]),
        Variant::Old9 => (&["Z1z1", "X1x1"], &["Z2x2", "X2z2"]),
    };
    [
        (alice.clone(), bob.clone()),
        (alice.clone().silencing(alice_silenced), bob.clone()),
        (alice, bob.silencing(bob_silenced)),
    ]
}

/// `G` with weight `1 − p`, `B₁` and `B₂` with `p/2` each.
pub fn reference_ensemble(variant: Variant, p: &Rational) -> Result<Ensemble, LoopholeError> {
    if p.is_negative() || *p > Rational::one() {
        return Err(LoopholeError::ProbabilityOutOfRange(p.clone()));
    }
    let spec = game::game_spec(variant);
    let half = rational::ratio(1, 2);
    let weights = [Rational::one() - p, p * &half, p * &half];
    let components = reference_tables(variant)
        .iter()
        .zip(weights)
        .map(|((a, b), w)| (JointInstruction::from_tables(&spec, a, b), w))
        .collect();
    Ensemble::new(components)
}

/// `η = 1 − p + (p/2)·f + p/2`: a player always answers under `G` and under
/// the other player's `B` set, and with probability `f` under their own.
pub fn eta_formula(p: &Rational, f: &Rational) -> Rational {
    let half = rational::ratio(1, 2);
    Rational::one() - p + p * &half * f + p * &half
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceInputs {
    pub quantum: ExactValue,
    pub g: ExactValue,
    pub b1: ExactValue,
    pub b2: ExactValue,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BalanceSolution {
    Unique(Rational),
    /// Every `p` solves the equation.
    Indeterminate,
    NoSolution,
}

/// Solves `P_Q = (1 − p) P_G + (p/2) P_B₁ + (p/2) P_B₂` for `p`.
pub fn solve_balance(quantum: &Rational, g: &Rational, b1: &Rational, b2: &Rational) -> BalanceSolution {
    let slope = (b1 + b2) * rational::ratio(1, 2) - g;
    let gap = quantum - g;
    match (slope.is_zero(), gap.is_zero()) {
        (true, true) => BalanceSolution::Indeterminate,
        (true, false) => BalanceSolution::NoSolution,
        _ => BalanceSolution::Unique(gap / slope),
    }
}

/// Win probabilities entering the balance equation: `P_Q = 1`, `P_G` the
/// classical value, `P_B = 1`.
pub fn reference_balance_inputs(variant: Variant) -> [Rational; 4] {
    let g = match variant {
        Variant::New4 => rational::ratio(3, 4),
        Variant::Old9 => rational::ratio(8, 9),
    };
    [Rational::one(), g, Rational::one(), Rational::one()]
}

pub fn solve_balance_p(variant: Variant) -> BalanceSolution {
    let [q, g, b1, b2] = reference_balance_inputs(variant);
    solve_balance(&q, &g, &b1, &b2)
}

/// Distinct sheets realizable by some table over `player`'s ids.
pub fn realizable_sheets(spec: &GameSpec, player: Player) -> Result<Vec<InstructionSheet>, LoopholeError> {
    let ids = spec.player_ids(player);
    if ids.len() > MAX_TABLE_IDS {
        return Err(LoopholeError::Capacity(ids.len()));
    }
    let options = [Entry::Value(Sign::Plus), Entry::Value(Sign::Minus), Entry::NoAnswer];
    let mut sheets = BTreeSet::new();
    for code in 0..3usize.pow(ids.len() as u32) {
        let mut rest = code;
        let entries = ids
            .iter()
            .map(|id| {
                let e = options[rest % 3];
                rest /= 3;
                (id.clone(), e)
            })
            .collect();
        sheets.insert(InstructionTable { player, entries }.sheet(spec.questions(player)));
    }
    Ok(sheets.into_iter().collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct Threshold {
    #[serde(serialize_with = "serialize_rational")]
    pub threshold: Rational,
    /// Joint sheets examined.
    pub candidates: usize,
    /// Joint sheets that never lose a valid round.
    pub survivors: usize,
    /// Survivors left after removing dominated answer-rate pairs.
    pub frontier: usize,
    pub ensemble: Ensemble,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Survivors of the support filter.
pub fn perfect_instructions(spec: &GameSpec) -> Result<(usize, Vec<JointInstruction>), LoopholeError> {
    let alice = realizable_sheets(spec, Player::Alice)?;
    let bob = realizable_sheets(spec, Player::Bob)?;
    let survivors = alice
        .iter()
        .flat_map(|a| bob.iter().map(move |b| JointInstruction { alice: a.clone(), bob: b.clone() }))
        .filter(|j| j.is_perfect(spec))
        .collect();
    Ok((alice.len() * bob.len(), survivors))
}

/// Largest `min(η_A, η_B)` over ensembles that win every valid round.
///
/// Survivors are reduced to their Pareto-maximal `(η_A, η_B)` pairs, then
/// `max t  s.t.  t ≤ Σ w_k η_A,k,  t ≤ Σ w_k η_B,k,  Σ w_k ≤ 1` is solved
/// in exact arithmetic.
pub fn critical_efficiency(spec: &GameSpec) -> Result<Threshold, LoopholeError> {
    let (candidates, survivors) = perfect_instructions(spec)?;
    let mut points: BTreeMap<(Rational, Rational), JointInstruction> = BTreeMap::new();
    for j in &survivors {
        let key = (j.alice.answer_rate(spec), j.bob.answer_rate(spec));
        points.entry(key).or_insert_with(|| j.clone());
    }
    let frontier: Vec<((Rational, Rational), JointInstruction)> = points
        .iter()
        .filter(|((a, b), _)| !points.keys().any(|(a2, b2)| a2 >= a && b2 >= b && (a2 > a || b2 > b)))
        .map(|(k, j)| (k.clone(), j.clone()))
        .collect();

    let idle = JointInstruction {
        alice: InstructionSheet {
            player: Player::Alice,
            entries: vec![SheetEntry::NoAnswer; spec.questions(Player::Alice).len()],
        },
        bob: InstructionSheet {
            player: Player::Bob,
            entries: vec![SheetEntry::NoAnswer; spec.questions(Player::Bob).len()],
        },
    };
    if frontier.is_empty() {
        return Ok(Threshold {
            threshold: Rational::zero(),
            candidates,
            survivors: 0,
            frontier: 0,
            ensemble: Ensemble::new(vec![(idle, Rational::one())])?,
            diagnostic: Some("no joint instruction wins every valid round".into()),
        });
    }

    let k = frontier.len();
    let mut objective = vec![Rational::zero(); k + 1];
    objective[k] = Rational::one();
    let row = |pick: fn(&(Rational, Rational)) -> &Rational| {
        let mut r: Vec<Rational> = frontier.iter().map(|(key, _)| -pick(key).clone()).collect();
        r.push(Rational::one());
        r
    };
    let mut simplex_row = vec![Rational::one(); k];
    simplex_row.push(Rational::zero());
    let lp = LinearProgram {
        objective,
        rows: vec![row(|p| &p.0), row(|p| &p.1), simplex_row],
        bounds: vec![Rational::zero(), Rational::zero(), Rational::one()],
    };
    let solution = lp.solve()?;

    let mut components: Vec<(JointInstruction, Rational)> =
        frontier.into_iter().zip(&solution.x).map(|((_, j), w)| (j, w.clone())).collect();
    let used: Rational = solution.x[..k].iter().sum();
    if used < Rational::one() {
        components.push((idle, Rational::one() - used));
    }
    let threshold = solution.value;
    let diagnostic =
        threshold.is_zero().then(|| "only the all-refusing instruction wins every valid round".to_string());
    Ok(Threshold {
        threshold,
        candidates,
        survivors: survivors.len(),
        frontier: k,
        ensemble: Ensemble::new(components)?,
        diagnostic,
    })
}

/// Best Bob answer rate among perfect models in which Alice always answers.
pub fn bob_efficiency_with_perfect_alice(spec: &GameSpec) -> Result<Rational, LoopholeError> {
    let (_, survivors) = perfect_instructions(spec)?;
    Ok(survivors
        .iter()
        .filter(|j| j.alice.answer_rate(spec).is_one())
        .map(|j| j.bob.answer_rate(spec))
        .max()
        .unwrap_or_else(Rational::zero))
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimalityReport {
    pub variant: Variant,
    pub balance_inputs: BalanceInputs,
    pub balance_p: ExactValue,
    /// Answer rate of each player inside their own `B` set.
    pub f_alice: ExactValue,
    pub f_bob: ExactValue,
    /// `η` from the closed-form expression.
    pub eta_formula: ExactValue,
    /// `η` of the reference ensemble computed directly.
    pub reference_ensemble: EfficiencyReport,
    pub critical: Threshold,
    pub optimal: bool,
}

/// Confirms that `G`/`B₁`/`B₂` at the balancing `p` reaches the LP optimum.
pub fn verify_reference_optimality(variant: Variant) -> Result<OptimalityReport, LoopholeError> {
    let spec = game::game_spec(variant);
    let [q, g, b1, b2] = reference_balance_inputs(variant);
    let p = match solve_balance(&q, &g, &b1, &b2) {
        BalanceSolution::Unique(p) => p,
        // Any admissible p simulates; the fully mixed end is the most lenient.
        BalanceSolution::Indeterminate | BalanceSolution::NoSolution => Rational::one(),
    };
    let ensemble = reference_ensemble(variant, &p)?;
    let report = efficiency_of(&ensemble, &spec)?;
    let [_, (b1_alice, _), (_, b2_bob)] = reference_tables(variant);
    let f_alice = b1_alice.sheet(spec.questions(Player::Alice)).answer_rate(&spec);
    let f_bob = b2_bob.sheet(spec.questions(Player::Bob)).answer_rate(&spec);
    let formula = eta_formula(&p, &f_alice);
    let critical = critical_efficiency(&spec)?;
    let optimal =
        report.exact.conditional_win.as_ref().is_some_and(One::is_one) && report.exact.min_eta() == critical.threshold;
    Ok(OptimalityReport {
        variant,
        balance_inputs: BalanceInputs { quantum: q.into(), g: g.into(), b1: b1.into(), b2: b2.into() },
        balance_p: p.into(),
        f_alice: f_alice.into(),
        f_bob: f_bob.into(),
        eta_formula: formula.into(),
        reference_ensemble: report,
        critical,
        optimal,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscardSimulation {
    pub rounds: u64,
    pub valid: u64,
    pub wins: u64,
    pub conditional_win_rate: Option<f64>,
}

/// Draws an instruction and a round per trial, discarding rounds where a
/// player stays silent.
pub fn simulate_with_discard<R: Rng + ?Sized>(
    spec: &GameSpec,
    ensemble: &Ensemble,
    n: u64,
    rng: &mut R,
) -> Result<DiscardSimulation, LoopholeError> {
    if n == 0 {
        return Err(GameError::NoRounds.into());
    }
    for c in &ensemble.components {
        c.instruction.check_shape(spec)?;
    }
    let mut acc = 0.0;
    let cumulative: Vec<f64> = ensemble
        .components
        .iter()
        .map(|c| {
            acc += rational::to_f64(&c.weight);
            acc
        })
        .collect();
    let rounds = RoundSampler::new(spec);
    let (mut valid, mut wins) = (0, 0);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let i = cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1);
        match ensemble.components[i].instruction.outcome(spec, rounds.sample(rng)) {
            RoundOutcome::Discarded => {}
            RoundOutcome::Won => {
                valid += 1;
                wins += 1;
            }
            RoundOutcome::Lost => valid += 1,
        }
    }
    Ok(DiscardSimulation {
        rounds: n,
        valid,
        wins,
        conditional_win_rate: (valid > 0).then(|| wins as f64 / valid as f64),
    })
}
