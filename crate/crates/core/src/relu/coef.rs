//! Small exact rationals for network construction. Build-time magnitudes stay far
//! below `i128`; every operation is checked and panics on overflow.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coef(Ratio<i128>);

impl Coef {
    pub const ZERO: Coef = Coef(Ratio::new_raw(0, 1));
    pub const ONE: Coef = Coef(Ratio::new_raw(1, 1));

    pub fn int(v: i128) -> Coef {
        Coef(Ratio::from_integer(v))
    }

    pub fn frac(num: i128, den: i128) -> Coef {
        Coef(Ratio::new(num, den))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn max(self, other: Coef) -> Coef {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Coef) -> Coef {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn relu(self) -> Coef {
        self.max(Coef::ZERO)
    }

    pub fn to_big(self) -> BigRational {
        BigRational::new(BigInt::from(self.numer()), BigInt::from(self.denom()))
    }

    pub fn from_big(v: &BigRational) -> Option<Coef> {
        Some(Coef::frac(v.numer().to_i128()?, v.denom().to_i128()?))
    }

    pub fn to_f64(self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }
}

impl fmt::Debug for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl From<i128> for Coef {
    fn from(v: i128) -> Coef {
        Coef::int(v)
    }
}

impl From<i64> for Coef {
    fn from(v: i64) -> Coef {
        Coef::int(v as i128)
    }
}

impl From<usize> for Coef {
    fn from(v: usize) -> Coef {
        Coef::int(v as i128)
    }
}

impl From<u64> for Coef {
    fn from(v: u64) -> Coef {
        Coef::int(v as i128)
    }
}

impl From<u32> for Coef {
    fn from(v: u32) -> Coef {
        Coef::int(v as i128)
    }
}

impl From<i32> for Coef {
    fn from(v: i32) -> Coef {
        Coef::int(v as i128)
    }
}

macro_rules! checked_op {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr for Coef {
            type Output = Coef;
            fn $method(self, rhs: Coef) -> Coef {
                Coef(self.0.$checked(&rhs.0).expect("coefficient overflow"))
            }
        }
    };
}

checked_op!(Add, add, checked_add);
checked_op!(Sub, sub, checked_sub);
checked_op!(Mul, mul, checked_mul);
checked_op!(Div, div, checked_div);

impl Neg for Coef {
    type Output = Coef;
    fn neg(self) -> Coef {
        Coef(-self.0)
    }
}

impl Zero for Coef {
    fn zero() -> Coef {
        Coef::ZERO
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Coef {
    fn one() -> Coef {
        Coef::ONE
    }
}

impl std::iter::Sum for Coef {
    fn sum<I: Iterator<Item = Coef>>(iter: I) -> Coef {
        iter.fold(Coef::ZERO, |a, b| a + b)
    }
}

/// `gcd` of two positive rationals: the largest `g` with both values integer multiples of `g`.
pub fn rational_gcd(a: Coef, b: Coef) -> Coef {
    use num_integer::Integer;
    // gcd(p/q, r/s) = gcd(p s, r q) / (q s)
    let (p, q, r, s) = (a.numer().abs(), a.denom(), b.numer().abs(), b.denom());
    let num = (p * s).gcd(&(r * q));
    Coef::frac(num, q * s)
}

impl PartialEq<i128> for Coef {
    fn eq(&self, other: &i128) -> bool {
        self.0 == Ratio::from_integer(*other)
    }
}

impl PartialOrd<i128> for Coef {
    fn partial_cmp(&self, other: &i128) -> Option<Ordering> {
        self.0.partial_cmp(&Ratio::from_integer(*other))
    }
}
