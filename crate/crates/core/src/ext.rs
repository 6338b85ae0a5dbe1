//! Extended reals `ℝ ∪ {-∞}` for KL-penalized rewards.
//!
//! Rules: `-∞ + x = -∞`; a zero weight times `-∞` is `0`; a positive weight
//! times `-∞` is `-∞`.

use core::cmp::Ordering;
use core::fmt;
use core::ops::Add;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ext {
    Finite(f64),
    NegInf,
}

impl Ext {
    pub const ZERO: Ext = Ext::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Ext::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Ext::Finite(x) => Some(x),
            Ext::NegInf => None,
        }
    }

    /// `f64` view, with `-∞` mapped to `f64::NEG_INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            Ext::Finite(x) => x,
            Ext::NegInf => f64::NEG_INFINITY,
        }
    }

    /// Value used as an LP coefficient: `-∞` becomes `sentinel`.
    pub fn or_sentinel(self, sentinel: f64) -> f64 {
        match self {
            Ext::Finite(x) => x,
            Ext::NegInf => sentinel,
        }
    }

    /// Multiply by a nonnegative weight with `0 · -∞ = 0`.
    pub fn scale(self, weight: f64) -> Ext {
        debug_assert!(weight >= 0.0);
        match self {
            Ext::Finite(x) => Ext::Finite(weight * x),
            Ext::NegInf if weight == 0.0 => Ext::ZERO,
            Ext::NegInf => Ext::NegInf,
        }
    }

    pub fn max(self, other: Ext) -> Ext {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Add for Ext {
    type Output = Ext;
    fn add(self, rhs: Ext) -> Ext {
        match (self, rhs) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a + b),
            _ => Ext::NegInf,
        }
    }
}

impl Add<f64> for Ext {
    type Output = Ext;
    fn add(self, rhs: f64) -> Ext {
        self + Ext::Finite(rhs)
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Ext) -> Option<Ordering> {
        match (self, other) {
            (Ext::NegInf, Ext::NegInf) => Some(Ordering::Equal),
            (Ext::NegInf, Ext::Finite(_)) => Some(Ordering::Less),
            (Ext::Finite(_), Ext::NegInf) => Some(Ordering::Greater),
            (Ext::Finite(a), Ext::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl core::iter::Sum for Ext {
    fn sum<I: Iterator<Item = Ext>>(iter: I) -> Ext {
        iter.fold(Ext::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(x) => write!(f, "{x}"),
            Ext::NegInf => write!(f, "-inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_rules() {
        assert_eq!(Ext::NegInf + 3.0, Ext::NegInf);
        assert_eq!(Ext::Finite(1.5) + Ext::NegInf, Ext::NegInf);
        assert_eq!(Ext::Finite(1.5) + 2.0, Ext::Finite(3.5));
        assert_eq!(Ext::NegInf.scale(0.0), Ext::ZERO);
        assert_eq!(Ext::NegInf.scale(0.25), Ext::NegInf);
        assert_eq!(Ext::Finite(2.0).scale(0.25), Ext::Finite(0.5));
    }

    #[test]
    fn ordering_puts_neg_inf_below_everything() {
        assert!(Ext::NegInf < Ext::Finite(-1e300));
        assert_eq!(Ext::NegInf.max(Ext::Finite(-7.0)), Ext::Finite(-7.0));
        assert_eq!(Ext::NegInf.or_sentinel(-1e6), -1e6);
        let total: Ext = [Ext::Finite(1.0), Ext::NegInf.scale(0.0), Ext::Finite(2.0)]
            .into_iter()
            .sum();
        assert_eq!(total, Ext::Finite(3.0));
    }
}
