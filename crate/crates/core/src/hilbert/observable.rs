use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use super::HilbertError;
use crate::sign::Sign;

/// A qubit position in the two-photon register.
///
/// The declaration order `Pol1 < Path1 < Pol2 < Path2` fixes the basis
/// indexing: `b = 8·pol₁ + 4·path₁ + 2·pol₂ + path₂` with H, u ↦ 0 and
/// V, d ↦ 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Pol1,
    Path1,
    Pol2,
    Path2,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::Pol1, Slot::Path1, Slot::Pol2, Slot::Path2];

    /// Bit mask of this slot inside a basis index.
    pub fn mask(self) -> usize {
        match self {
            Slot::Pol1 => 8,
            Slot::Path1 => 4,
            Slot::Pol2 => 2,
            Slot::Path2 => 1,
        }
    }

    /// Position in `Slot::ALL`, which is also the Kronecker factor order.
    pub fn position(self) -> usize {
        self as usize
    }

    pub fn photon(self) -> u8 {
        match self {
            Slot::Pol1 | Slot::Path1 => 1,
            Slot::Pol2 | Slot::Path2 => 2,
        }
    }

    pub fn is_path(self) -> bool {
        matches!(self, Slot::Path1 | Slot::Path2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// The 2×2 matrix in the (H, V) or (u, d) basis, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Axis::X => [[o, one], [one, o]],
            Axis::Y => [[o, -i], [i, o]],
            Axis::Z => [[one, o], [o, -one]],
        }
    }

    /// Action on a basis bit: `axis |bit⟩ = phase |bit ^ flip⟩`.
    fn act(self, bit: bool) -> (bool, Complex64) {
        match (self, bit) {
            (Axis::X, _) => (true, Complex64::new(1.0, 0.0)),
            (Axis::Y, false) => (true, Complex64::new(0.0, 1.0)),
            (Axis::Y, true) => (true, Complex64::new(0.0, -1.0)),
            (Axis::Z, false) => (false, Complex64::new(1.0, 0.0)),
            (Axis::Z, true) => (false, Complex64::new(-1.0, 0.0)),
        }
    }
}

/// One of the six single-photon observables: upper-case letters act on
/// polarization, lower-case on path (`X1`, `x1`, `Z2`, `y2`, ...).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalObservable {
    pub slot: Slot,
    pub axis: Axis,
}

macro_rules! local {
    ($($name:ident = $slot:ident, $axis:ident;)*) => {
        $(pub const $name: LocalObservable = LocalObservable { slot: Slot::$slot, axis: Axis::$axis };)*
    };
}

#[allow(non_upper_case_globals)]
impl LocalObservable {
    local! {
        X1 = Pol1, X; Y1 = Pol1, Y; Z1 = Pol1, Z;
        x1 = Path1, X; y1 = Path1, Y; z1 = Path1, Z;
        X2 = Pol2, X; Y2 = Pol2, Y; Z2 = Pol2, Z;
        x2 = Path2, X; y2 = Path2, Y; z2 = Path2, Z;
    }

    pub fn new(slot: Slot, axis: Axis) -> Self {
        LocalObservable { slot, axis }
    }

    /// Image of basis index `b` under this observable, with its phase.
    pub fn act_on_basis(self, b: usize) -> (usize, Complex64) {
        let mask = self.slot.mask();
        let (flip, phase) = self.axis.act(b & mask != 0);
        (if flip { b ^ mask } else { b }, phase)
    }

    pub fn name(self) -> String {
        let letter = match self.axis {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        };
        let letter = if self.slot.is_path() { letter.to_ascii_lowercase() } else { letter };
        format!("{letter}{}", self.slot.photon())
    }
}

impl fmt::Display for LocalObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for LocalObservable {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

impl FromStr for LocalObservable {
    type Err = HilbertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HilbertError::Parse(s.to_string());
        let mut chars = s.chars();
        let (letter, digit) = match (chars.next(), chars.next(), chars.next()) {
            (Some(l), Some(d), None) => (l, d),
            _ => return Err(bad()),
        };
        let axis = match letter.to_ascii_uppercase() {
            'X' => Axis::X,
            'Y' => Axis::Y,
            'Z' => Axis::Z,
            _ => return Err(bad()),
        };
        let path = letter.is_ascii_lowercase();
        let slot = match (digit, path) {
            ('1', false) => Slot::Pol1,
            ('1', true) => Slot::Path1,
            ('2', false) => Slot::Pol2,
            ('2', true) => Slot::Path2,
            _ => return Err(bad()),
        };
        Ok(LocalObservable { slot, axis })
    }
}

/// A signed product of local observables on pairwise distinct slots.
///
/// Distinct slots make every factor commute, so the induced matrix is
/// Hermitian and squares to the identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObservableWord {
    sign: Sign,
    factors: Vec<LocalObservable>,
}

impl ObservableWord {
    pub fn new<I>(sign: Sign, factors: I) -> Result<Self, HilbertError>
    where
        I: IntoIterator<Item = LocalObservable>,
    {
        let mut factors: Vec<LocalObservable> = factors.into_iter().collect();
        factors.sort();
        if let Some(w) = factors.windows(2).find(|w| w[0].slot == w[1].slot) {
            return Err(HilbertError::MalformedWord(format!("{} and {} share slot {:?}", w[0], w[1], w[0].slot)));
        }
        Ok(ObservableWord { sign, factors })
    }

    pub fn identity() -> Self {
        ObservableWord { sign: Sign::Plus, factors: Vec::new() }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Factors in slot order.
    pub fn factors(&self) -> &[LocalObservable] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn with_sign(&self, sign: Sign) -> Self {
        ObservableWord { sign, factors: self.factors.clone() }
    }

    /// `W|b⟩ = phase |b'⟩`; every word is a signed monomial matrix.
    pub fn act_on_basis(&self, b: usize) -> (usize, Complex64) {
        let mut target = b;
        let mut phase = Complex64::new(self.sign.as_f64(), 0.0);
        for f in &self.factors {
            let (t, p) = f.act_on_basis(target);
            target = t;
            phase *= p;
        }
        (target, phase)
    }
}

impl fmt::Display for ObservableWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign == Sign::Minus {
            f.write_str("-")?;
        }
        if self.factors.is_empty() {
            return f.write_str("I");
        }
        for factor in &self.factors {
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

impl Serialize for ObservableWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for ObservableWord {
    type Err = HilbertError;

    /// Parses forms such as `X1X2z2`, `-Y1Y2z2`, `+z1z2` and `I`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (Sign::Minus, rest),
            None => (Sign::Plus, s.strip_prefix('+').unwrap_or(s)),
        };
        if body == "I" {
            return Ok(ObservableWord::identity().with_sign(sign));
        }
        if body.is_empty() || body.len() % 2 != 0 || !body.is_ascii() {
            return Err(HilbertError::Parse(s.to_string()));
        }
        let factors =
            (0..body.len()).step_by(2).map(|i| body[i..i + 2].parse()).collect::<Result<Vec<LocalObservable>, _>>()?;
        ObservableWord::new(sign, factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["X1X2z2", "-Y1Y2z2", "X1x1Y2y2", "I", "-I", "Z1y1y2"] {
            let w: ObservableWord = s.parse().unwrap();
            assert_eq!(w.to_string(), s);
        }
        let w: ObservableWord = "+z2z1".parse().unwrap();
        assert_eq!(w.to_string(), "z1z2");
    }

    #[test]
    fn duplicate_slot_is_malformed() {
        let err = ObservableWord::new(Sign::Plus, [LocalObservable::X1, LocalObservable::Z1]);
        assert!(matches!(err, Err(HilbertError::MalformedWord(_))));
        assert!("X1Y1".parse::<ObservableWord>().is_err());
    }

    #[test]
    fn bad_names_rejected() {
        for s in ["W1", "X3", "X", "X12", ""] {
            assert!(s.parse::<LocalObservable>().is_err(), "{s}");
        }
        assert!("X1x".parse::<ObservableWord>().is_err());
    }

    #[test]
    fn y_follows_i_v_h_convention() {
        // Y|H⟩ = i|V⟩ on slot pol1: basis 0 -> 8.
        let (t, p) = LocalObservable::Y1.act_on_basis(0);
        assert_eq!(t, 8);
        assert_eq!(p, Complex64::new(0.0, 1.0));
        let (t, p) = LocalObservable::Y1.act_on_basis(8);
        assert_eq!(t, 0);
        assert_eq!(p, Complex64::new(0.0, -1.0));
    }
}
