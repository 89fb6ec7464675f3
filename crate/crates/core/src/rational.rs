//! Exact rational helpers shared by the game and loophole layers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

pub type Rational = BigRational;

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Round to 15 significant digits, the precision used in every report.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// A rational rendered both exactly (`"3/4"`) and as a decimal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactValue {
    pub exact: String,
    pub decimal: f64,
}

impl From<&Rational> for ExactValue {
    fn from(r: &Rational) -> Self {
        ExactValue { exact: r.to_string(), decimal: round15(to_f64(r)) }
    }
}

impl From<Rational> for ExactValue {
    fn from(r: Rational) -> Self {
        ExactValue::from(&r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_forms() {
        assert_eq!(ratio(6, 8).to_string(), "3/4");
        assert_eq!(integer(2).to_string(), "2");
        let v = ExactValue::from(ratio(5, 6));
        assert_eq!(v.exact, "5/6");
        assert_eq!(v.decimal, 0.833333333333333);
    }

    #[test]
    fn round15_keeps_exact_binary_values() {
        assert_eq!(round15(0.75), 0.75);
        assert_eq!(round15(4.000000000000002), 4.0);
    }
}
