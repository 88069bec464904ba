//! Exact arbitrary-precision rational scalars and vectors.
//!
//! Every quantity the verification paths touch (data vectors, connection
//! ratios, MLE coordinates, elimination pivots) is a [`Fraction`]. No
//! rounding ever occurs; equality is exact.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// An exact rational number in canonical form: positive denominator,
/// gcd(|numerator|, denominator) = 1 after every operation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fraction(BigRational);

/// A vector of exact rationals.
pub type FractionVector = Vec<Fraction>;

impl Fraction {
    /// Builds `numer / denom`. Panics if `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Self {
        Fraction(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    /// Builds from big integer parts. Panics if `denom == 0`.
    pub fn from_big(numer: BigInt, denom: BigInt) -> Self {
        Fraction(BigRational::new(numer, denom))
    }

    pub fn from_int(n: i64) -> Self {
        Fraction(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Fraction(BigRational::zero())
    }

    pub fn one() -> Self {
        Fraction(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Fraction(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Fraction(self.0.recip())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Integer power with negative exponents allowed (except on zero).
    pub fn pow(&self, exp: i64) -> Self {
        if exp == 0 {
            return Fraction::one();
        }
        let base = if exp < 0 {
            self.0.recip()
        } else {
            self.0.clone()
        };
        let mut acc = BigRational::one();
        for _ in 0..exp.unsigned_abs() {
            acc *= &base;
        }
        Fraction(acc)
    }

    /// Nearest f64, for reporting only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Returns Some(n) when the value is an integer fitting in u64.
    pub fn to_integer_u64(&self) -> Option<u64> {
        if self.0.is_integer() {
            self.0.numer().to_u64()
        } else {
            None
        }
    }

    /// Parses `a/b`, an integer `a`, or a decimal `a.b` (converted exactly
    /// via its base-10 expansion).
    pub fn parse(text: &str) -> Result<Self, Error> {
        let s = text.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty rational literal".into()));
        }
        if let Some((n, d)) = s.split_once('/') {
            let numer = BigInt::from_str(n.trim())
                .map_err(|_| Error::Parse(format!("bad numerator {n:?}")))?;
            let denom = BigInt::from_str(d.trim())
                .map_err(|_| Error::Parse(format!("bad denominator {d:?}")))?;
            if denom.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            return Ok(Fraction(BigRational::new(numer, denom)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            let digits = frac_part.trim();
            if !digits.chars().all(|c| c.is_ascii_digit()) {
                return Err(Error::Parse(format!("bad decimal {s:?}")));
            }
            let (sign, int_digits) = match int_part.trim() {
                t if t.starts_with('-') => (-1i64, &t[1..]),
                t if t.starts_with('+') => (1, &t[1..]),
                t => (1, t),
            };
            let int_val = if int_digits.is_empty() {
                BigInt::zero()
            } else {
                BigInt::from_str(int_digits)
                    .map_err(|_| Error::Parse(format!("bad decimal {s:?}")))?
            };
            let scale = num_traits::pow(BigInt::from(10), digits.len());
            let frac_val = if digits.is_empty() {
                BigInt::zero()
            } else {
                BigInt::from_str(digits).map_err(|_| Error::Parse(format!("bad decimal {s:?}")))?
            };
            let numer = (int_val * &scale + frac_val) * BigInt::from(sign);
            return Ok(Fraction(BigRational::new(numer, scale)));
        }
        let numer = BigInt::from_str(s).map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
        Ok(Fraction(BigRational::from_integer(numer)))
    }
}

impl fmt::Display for Fraction {
    /// `num/den`, or just `num` for integers (matching num-rational).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<i64> for Fraction {
    fn from(n: i64) -> Self {
        Fraction::from_int(n)
    }
}

impl From<u64> for Fraction {
    fn from(n: u64) -> Self {
        Fraction(BigRational::from_integer(BigInt::from(n)))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Fraction {
            type Output = Fraction;
            fn $method(self, rhs: Fraction) -> Fraction {
                Fraction((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Fraction> for Fraction {
            type Output = Fraction;
            fn $method(self, rhs: &'a Fraction) -> Fraction {
                Fraction((self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<Fraction> for &'a Fraction {
            type Output = Fraction;
            fn $method(self, rhs: Fraction) -> Fraction {
                Fraction((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Fraction> for &'a Fraction {
            type Output = Fraction;
            fn $method(self, rhs: &'b Fraction) -> Fraction {
                Fraction((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Fraction {
    type Output = Fraction;
    fn neg(self) -> Fraction {
        Fraction(-self.0)
    }
}

impl Neg for &Fraction {
    type Output = Fraction;
    fn neg(self) -> Fraction {
        Fraction(-&self.0)
    }
}

impl AddAssign<&Fraction> for Fraction {
    fn add_assign(&mut self, rhs: &Fraction) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Fraction> for Fraction {
    fn sub_assign(&mut self, rhs: &Fraction) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Fraction> for Fraction {
    fn mul_assign(&mut self, rhs: &Fraction) {
        self.0 *= &rhs.0;
    }
}

impl DivAssign<&Fraction> for Fraction {
    fn div_assign(&mut self, rhs: &Fraction) {
        self.0 /= &rhs.0;
    }
}

impl Sum for Fraction {
    fn sum<I: Iterator<Item = Fraction>>(iter: I) -> Fraction {
        iter.fold(Fraction::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Fraction> for Fraction {
    fn sum<I: Iterator<Item = &'a Fraction>>(iter: I) -> Fraction {
        iter.fold(Fraction::zero(), |acc, x| acc + x)
    }
}

/// Sum of a slice of fractions.
pub fn vector_sum(v: &[Fraction]) -> Fraction {
    v.iter().sum()
}

/// Checks that every entry is strictly positive.
pub fn check_positive(v: &[Fraction]) -> Result<(), Error> {
    match v.iter().position(|x| !x.is_positive()) {
        Some(index) => Err(Error::NotPositive { index }),
        None => Ok(()),
    }
}

/// Checks exact normalization (sum = 1).
pub fn check_normalized(v: &[Fraction]) -> Result<(), Error> {
    let s = vector_sum(v);
    if s.is_one() {
        Ok(())
    } else {
        Err(Error::NonNormalizedData(s.to_string()))
    }
}
