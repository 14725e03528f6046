//! Exact utility arithmetic.
//!
//! Utilities are stored as fixed-point integers with four decimal places, so
//! sums of `quantity × unit utility` products are reproducible bit-for-bit
//! regardless of summation order.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::{Serialize, Serializer};

/// Number of fixed-point units per whole utility unit.
pub const SCALE: u64 = 10_000;
const SCALE_DIGITS: usize = 4;

/// A nonnegative utility value with a resolution of 10⁻⁴.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Utility(u64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UtilityParseError {
    #[error("empty utility value")]
    Empty,
    #[error("`{0}` is not a decimal number")]
    NotDecimal(String),
    #[error("`{0}` has more than four decimal places")]
    TooPrecise(String),
    #[error("`{0}` is out of range")]
    Overflow(String),
}

impl Utility {
    pub const ZERO: Utility = Utility(0);

    /// Builds a utility from a whole number of units.
    pub const fn from_int(value: u64) -> Self {
        Utility(value * SCALE)
    }

    /// Builds a utility from raw fixed-point units (1 unit = 10⁻⁴).
    pub const fn from_raw(raw: u64) -> Self {
        Utility(raw)
    }

    pub const fn raw(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `self × quantity`, as used for `q(i, s) × iu(i)`.
    pub fn times(self, quantity: u32) -> Self {
        Utility(
            self.0
                .checked_mul(u64::from(quantity))
                .expect("utility overflow"),
        )
    }

    pub fn saturating_sub(self, other: Utility) -> Self {
        Utility(self.0.saturating_sub(other.0))
    }

    /// Lossy conversion for reporting only.
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }
}

impl Add for Utility {
    type Output = Utility;

    fn add(self, rhs: Utility) -> Utility {
        Utility(self.0.checked_add(rhs.0).expect("utility overflow"))
    }
}

impl AddAssign for Utility {
    fn add_assign(&mut self, rhs: Utility) {
        *self = *self + rhs;
    }
}

impl Sub for Utility {
    type Output = Utility;

    fn sub(self, rhs: Utility) -> Utility {
        Utility(self.0.checked_sub(rhs.0).expect("negative utility"))
    }
}

impl Sum for Utility {
    fn sum<I: Iterator<Item = Utility>>(iter: I) -> Utility {
        iter.fold(Utility::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Utility> for Utility {
    fn sum<I: Iterator<Item = &'a Utility>>(iter: I) -> Utility {
        iter.copied().sum()
    }
}

impl FromStr for Utility {
    type Err = UtilityParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        if text.is_empty() {
            return Err(UtilityParseError::Empty);
        }
        let (whole, frac) = match text.split_once('.') {
            Some((w, f)) => (w, f),
            None => (text, ""),
        };
        let digits_only = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if (whole.is_empty() && frac.is_empty()) || !digits_only(whole) || !digits_only(frac) {
            return Err(UtilityParseError::NotDecimal(text.to_string()));
        }
        if frac.len() > SCALE_DIGITS {
            return Err(UtilityParseError::TooPrecise(text.to_string()));
        }
        let overflow = || UtilityParseError::Overflow(text.to_string());
        let whole: u64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| overflow())?
        };
        let mut frac_units = 0u64;
        for (i, b) in frac.bytes().enumerate() {
            frac_units += u64::from(b - b'0') * 10u64.pow((SCALE_DIGITS - 1 - i) as u32);
        }
        whole
            .checked_mul(SCALE)
            .and_then(|w| w.checked_add(frac_units))
            .map(Utility)
            .ok_or_else(overflow)
    }
}

/// Integers print without a decimal point; fractions print with trailing
/// zeros trimmed (`2.5`, `0.0001`).
impl fmt::Display for Utility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / SCALE;
        let frac = self.0 % SCALE;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:0width$}", width = SCALE_DIGITS);
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl Serialize for Utility {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
