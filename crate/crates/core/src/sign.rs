use std::fmt;
use std::ops::{Mul, MulAssign, Neg};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A value in {−1, +1}.
///
/// Serialized as the integer `1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    /// GF(2) encoding: `Minus` is the set bit.
    pub fn bit(self) -> bool {
        self == Sign::Minus
    }

    pub fn from_bit(bit: bool) -> Sign {
        if bit {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn from_value(value: i32) -> Option<Sign> {
        match value {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    /// Product of an iterator of signs, `Plus` when empty.
    pub fn product<I: IntoIterator<Item = Sign>>(signs: I) -> Sign {
        signs.into_iter().fold(Sign::Plus, |acc, s| acc * s)
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl MulAssign for Sign {
    fn mul_assign(&mut self, rhs: Sign) {
        *self = *self * rhs;
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        Sign::from_bit(!self.bit())
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.value() as i8)
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Sign, D::Error> {
        let v = i32::deserialize(deserializer)?;
        Sign::from_value(v).ok_or_else(|| serde::de::Error::custom(format!("expected 1 or -1, got {v}")))
    }
}
