//! Local-hidden-variable layer: parity constraints over ±1 value assignments.
//!
//! A constraint `v(a)·v(b)·… = ±1` becomes the GF(2) equation
//! `bit(a) ⊕ bit(b) ⊕ … = bit(rhs)` with `−1 ↦ 1`. Compound ids of the
//! nine-relation system (`Z1z1`, `X2z2`, …) are atomic symbols with their own
//! values; no factorization through their constituents is imposed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hilbert::LocalObservable;
use crate::sign::Sign;
use crate::Variant;

/// Largest universe accepted by exhaustive enumeration.
pub const MAX_ENUMERATION_IDS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AvnError {
    #[error("assignment has no value for {0}")]
    PartialAssignment(ObservableId),
    #[error("id {0} is not in the universe")]
    UnknownId(ObservableId),
    #[error("id {0} appears twice in the universe")]
    DuplicateId(ObservableId),
    #[error("parity constraint needs at least one id")]
    EmptyConstraint,
    #[error("universe of {0} ids exceeds the enumeration limit of {MAX_ENUMERATION_IDS}")]
    Capacity(usize),
}

/// Symbolic name of a local element of reality, e.g. `X1`, `y2`, `Z1z1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservableId(String);

impl ObservableId {
    pub fn new(name: impl Into<String>) -> Self {
        ObservableId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The single-slot observable this id names, if it is not compound.
    pub fn local_observable(&self) -> Option<LocalObservable> {
        self.0.parse().ok()
    }
}

impl From<&str> for ObservableId {
    fn from(s: &str) -> Self {
        ObservableId::new(s)
    }
}

impl fmt::Display for ObservableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn ids<const N: usize>(names: [&str; N]) -> Vec<ObservableId> {
    names.into_iter().map(ObservableId::from).collect()
}

/// Value map `id ↦ ±1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    values: BTreeMap<ObservableId, Sign>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    /// Every id of `universe` set to `value`.
    pub fn constant(universe: &[ObservableId], value: Sign) -> Self {
        universe.iter().map(|id| (id.clone(), value)).collect()
    }

    /// Bit `i` of `mask` set ⟺ `universe[i]` takes the value −1.
    pub fn from_mask(universe: &[ObservableId], mask: u64) -> Self {
        universe.iter().enumerate().map(|(i, id)| (id.clone(), Sign::from_bit(mask >> i & 1 == 1))).collect()
    }

    pub fn get(&self, id: &ObservableId) -> Option<Sign> {
        self.values.get(id).copied()
    }

    pub fn set(&mut self, id: ObservableId, value: Sign) {
        self.values.insert(id, value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObservableId, Sign)> {
        self.values.iter().map(|(k, &v)| (k, v))
    }

    pub fn covers(&self, universe: &[ObservableId]) -> Result<(), AvnError> {
        match universe.iter().find(|id| !self.values.contains_key(*id)) {
            Some(id) => Err(AvnError::PartialAssignment(id.clone())),
            None => Ok(()),
        }
    }
}

impl FromIterator<(ObservableId, Sign)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (ObservableId, Sign)>>(iter: I) -> Self {
        Assignment { values: iter.into_iter().collect() }
    }
}

/// `Π v(id) = rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParityConstraint {
    ids: Vec<ObservableId>,
    rhs: Sign,
}

impl ParityConstraint {
    pub fn new(ids: Vec<ObservableId>, rhs: Sign) -> Result<Self, AvnError> {
        if ids.is_empty() {
            return Err(AvnError::EmptyConstraint);
        }
        Ok(ParityConstraint { ids, rhs })
    }

    pub fn ids(&self) -> &[ObservableId] {
        &self.ids
    }

    pub fn rhs(&self) -> Sign {
        self.rhs
    }

    pub fn mentions(&self, id: &ObservableId) -> bool {
        self.ids.contains(id)
    }

    /// Product of the assigned values, or the first missing id.
    pub fn evaluate(&self, a: &Assignment) -> Result<Sign, AvnError> {
        self.ids
            .iter()
            .map(|id| a.get(id).ok_or_else(|| AvnError::PartialAssignment(id.clone())))
            .try_fold(Sign::Plus, |acc, v| Ok(acc * v?))
    }

    pub fn satisfied_by(&self, a: &Assignment) -> Result<bool, AvnError> {
        Ok(self.evaluate(a)? == self.rhs)
    }
}

impl fmt::Display for ParityConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs: Vec<&str> = self.ids.iter().map(ObservableId::as_str).collect();
        write!(f, "{} = {}1", lhs.join("·"), self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstraintSystem {
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<Variant>,
    universe: Vec<ObservableId>,
    constraints: Vec<ParityConstraint>,
}

impl ConstraintSystem {
    pub fn new(universe: Vec<ObservableId>, constraints: Vec<ParityConstraint>) -> Result<Self, AvnError> {
        let mut seen = BTreeSet::new();
        if let Some(dup) = universe.iter().find(|id| !seen.insert(*id)) {
            return Err(AvnError::DuplicateId(dup.clone()));
        }
        for c in &constraints {
            if let Some(id) = c.ids.iter().find(|id| !seen.contains(id)) {
                return Err(AvnError::UnknownId(id.clone()));
            }
        }
        Ok(ConstraintSystem { variant: None, universe, constraints })
    }

    pub fn variant(&self) -> Option<Variant> {
        self.variant
    }

    pub fn universe(&self) -> &[ObservableId] {
        &self.universe
    }

    pub fn constraints(&self) -> &[ParityConstraint] {
        &self.constraints
    }

    /// Same system with `universe` reordered by `order` (a permutation of
    /// indices) and every id renamed through `rename`.
    pub fn relabeled(&self, order: &[usize], rename: impl Fn(&ObservableId) -> ObservableId) -> Self {
        let universe = order.iter().map(|&i| rename(&self.universe[i])).collect();
        let constraints = self
            .constraints
            .iter()
            .map(|c| ParityConstraint { ids: c.ids.iter().map(&rename).collect(), rhs: c.rhs })
            .collect();
        ConstraintSystem { variant: None, universe, constraints }
    }

    /// Substitutes `v(id) ↦ −v(id)`: each constraint mentioning `id` an odd
    /// number of times has its rhs flipped.
    pub fn with_negated(&self, id: &ObservableId) -> Self {
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let odd = c.ids.iter().filter(|x| *x == id).count() % 2 == 1;
                ParityConstraint { ids: c.ids.clone(), rhs: if odd { -c.rhs } else { c.rhs } }
            })
            .collect();
        ConstraintSystem { variant: None, universe: self.universe.clone(), constraints }
    }

    fn index_of(&self) -> BTreeMap<&ObservableId, usize> {
        self.universe.iter().enumerate().map(|(i, id)| (id, i)).collect()
    }

    /// Each constraint as (GF(2) row over the universe, rhs bit).
    fn gf2_rows(&self) -> Vec<(BitRow, bool)> {
        let index = self.index_of();
        self.constraints
            .iter()
            .map(|c| {
                let mut row = BitRow::zeros(self.universe.len());
                for id in &c.ids {
                    row.toggle(index[id]);
                }
                (row, c.rhs.bit())
            })
            .collect()
    }
}

/// The constraint systems of the two all-versus-nothing arguments.
pub fn constraint_system(variant: Variant) -> ConstraintSystem {
    use Sign::{Minus, Plus};
    let (universe, relations): (Vec<ObservableId>, Vec<(Vec<ObservableId>, Sign)>) = match variant {
        Variant::New4 => (
            ids(["X1", "Y1", "x1", "X2", "Y2", "y2", "z2"]),
            vec![
                (ids(["X1", "X2", "z2"]), Plus),
                (ids(["Y1", "Y2", "z2"]), Minus),
                (ids(["X1", "x1", "Y2", "y2"]), Plus),
                (ids(["Y1", "x1", "X2", "y2"]), Plus),
            ],
        ),
        Variant::Old9 => (
            ids(["Z1", "z1", "X1", "x1", "Z1z1", "X1x1", "Z2", "z2", "X2", "x2", "Z2x2", "X2z2"]),
            vec![
                (ids(["Z1", "Z2"]), Minus),
                (ids(["z1", "z2"]), Minus),
                (ids(["X1", "X2"]), Minus),
                (ids(["x1", "x2"]), Minus),
                (ids(["Z1z1", "Z2", "z2"]), Plus),
                (ids(["X1x1", "X2", "x2"]), Plus),
                (ids(["Z1", "x1", "Z2x2"]), Plus),
                (ids(["X1", "z1", "X2z2"]), Plus),
                (ids(["Z1z1", "X1x1", "Z2x2", "X2z2"]), Minus),
            ],
        ),
    };
    let constraints =
        relations.into_iter().map(|(ids, rhs)| ParityConstraint::new(ids, rhs).expect("static relation")).collect();
    let mut sys = ConstraintSystem::new(universe, constraints).expect("static system");
    sys.variant = Some(variant);
    sys
}

pub fn satisfied_count(a: &Assignment, sys: &ConstraintSystem) -> Result<usize, AvnError> {
    a.covers(&sys.universe)?;
    sys.constraints.iter().try_fold(0, |n, c| Ok(n + usize::from(c.satisfied_by(a)?)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MaxSatisfiable {
    pub best: usize,
    pub optima_count: u64,
    pub total: usize,
}

/// Exhaustive maximum of [`satisfied_count`] over all `2^|universe|`
/// assignments, with the number of maximizers.
pub fn max_satisfiable(sys: &ConstraintSystem) -> Result<MaxSatisfiable, AvnError> {
    let n = sys.universe.len();
    if n > MAX_ENUMERATION_IDS {
        return Err(AvnError::Capacity(n));
    }
    let rows: Vec<(u64, u32)> = sys.gf2_rows().into_iter().map(|(row, rhs)| (row.low_word(), u32::from(rhs))).collect();
    let mut best = 0;
    let mut optima_count = 0u64;
    for mask in 0..1u64 << n {
        let count = rows.iter().filter(|&&(row, rhs)| (row & mask).count_ones() & 1 == rhs).count();
        match count.cmp(&best) {
            std::cmp::Ordering::Greater => {
                best = count;
                optima_count = 1;
            }
            std::cmp::Ordering::Equal => optima_count += 1,
            std::cmp::Ordering::Less => {}
        }
    }
    Ok(MaxSatisfiable { best, optima_count, total: sys.constraints.len() })
}

/// Outcome of GF(2) elimination on a constraint system.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Feasibility {
    /// Constraint indices whose product reads `1 = −1`: every id occurs an
    /// even number of times while the right-hand sides multiply to −1.
    Infeasible {
        witness: Vec<usize>,
    },
    Satisfiable {
        assignment: Assignment,
    },
}

impl Feasibility {
    pub fn witness(&self) -> Option<&[usize]> {
        match self {
            Feasibility::Infeasible { witness } => Some(witness),
            Feasibility::Satisfiable { .. } => None,
        }
    }
}

pub fn infeasibility_witness(sys: &ConstraintSystem) -> Feasibility {
    let width = sys.universe.len();
    let m = sys.constraints.len();
    // (lhs, rhs, combination of original constraints)
    let mut rows: Vec<(BitRow, bool, BitRow)> = sys
        .gf2_rows()
        .into_iter()
        .enumerate()
        .map(|(i, (lhs, rhs))| {
            let mut combo = BitRow::zeros(m);
            combo.toggle(i);
            (lhs, rhs, combo)
        })
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next = 0;
    for col in 0..width {
        let Some(p) = (next..m).find(|&r| rows[r].0.get(col)) else {
            continue;
        };
        rows.swap(next, p);
        let (pivot_lhs, pivot_rhs, pivot_combo) = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && row.0.get(col) {
                row.0.xor_with(&pivot_lhs);
                row.1 ^= pivot_rhs;
                row.2.xor_with(&pivot_combo);
            }
        }
        pivots.push((next, col));
        next += 1;
    }

    if let Some((_, _, combo)) = rows[next..].iter().filter(|(_, rhs, _)| *rhs).min_by_key(|(_, _, c)| c.count_ones()) {
        return Feasibility::Infeasible { witness: combo.ones().collect() };
    }

    // Free ids take +1; each pivot id then equals its reduced rhs.
    let mut assignment = Assignment::constant(&sys.universe, Sign::Plus);
    for (r, col) in pivots {
        assignment.set(sys.universe[col].clone(), Sign::from_bit(rows[r].1));
    }
    Feasibility::Satisfiable { assignment }
}

/// Fixed-width GF(2) row vector.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    fn zeros(width: usize) -> Self {
        BitRow { words: vec![0; width.div_ceil(64).max(1)] }
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn toggle(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    fn xor_with(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.words.len() * 64).filter(|&i| self.get(i))
    }

    fn low_word(&self) -> u64 {
        self.words[0]
    }
}
