//! Ground field: exact rationals and their Gaussian extension.
//!
//! [`Rational`] bundles the num-traits capabilities the rest of the crate
//! needs from a rational scalar.  Both `num_rational::BigRational` and
//! `num_rational::Rational64` satisfy it; the fixed-width variant will panic
//! on overflow in debug builds, so the arbitrary-precision type is the
//! default everywhere it matters.

use std::fmt;

use num_traits::{FromPrimitive, Num, Signed};

/// Capability bundle for the backing rational type.
pub trait Rational:
    Clone + Eq + fmt::Debug + fmt::Display + Num + Signed + FromPrimitive + 'static
{
}

impl<T> Rational for T where
    T: Clone + Eq + fmt::Debug + fmt::Display + Num + Signed + FromPrimitive + 'static
{
}

/// Build a rational from an integer; total for both supported backends.
pub fn rat_int<R: Rational>(n: i64) -> R {
    R::from_i64(n).expect("integer must embed into the scalar type")
}

/// Build the fraction `n/d` exactly.
pub fn rat_frac<R: Rational>(n: i64, d: i64) -> R {
    assert!(d != 0, "zero denominator");
    rat_int::<R>(n) / rat_int::<R>(d)
}

/// Gaussian rational `re + im*i`; the coefficient field of every ring here.
///
/// Stored componentwise; `Ratio` keeps each component reduced with a
/// positive denominator, so equality is plain structural equality.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Gaussian<R> {
    pub re: R,
    pub im: R,
}

impl<R: Rational> Gaussian<R> {
    pub fn new(re: R, im: R) -> Self {
        Gaussian { re, im }
    }

    pub fn zero() -> Self {
        Gaussian { re: R::zero(), im: R::zero() }
    }

    pub fn one() -> Self {
        Gaussian { re: R::one(), im: R::zero() }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Gaussian { re: R::zero(), im: R::one() }
    }

    pub fn from_int(n: i64) -> Self {
        Gaussian { re: rat_int(n), im: R::zero() }
    }

    /// `n/d`, exactly.
    pub fn frac(n: i64, d: i64) -> Self {
        Gaussian { re: rat_frac(n, d), im: R::zero() }
    }

    /// `(n/d)*i`, exactly.
    pub fn frac_i(n: i64, d: i64) -> Self {
        Gaussian { re: R::zero(), im: rat_frac(n, d) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    /// True when the imaginary part vanishes.
    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn neg(&self) -> Self {
        Gaussian { re: -self.re.clone(), im: -self.im.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Gaussian { re: self.re.clone() + other.re.clone(), im: self.im.clone() + other.im.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Gaussian { re: self.re.clone() - other.re.clone(), im: self.im.clone() - other.im.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let re = self.re.clone() * other.re.clone() - self.im.clone() * other.im.clone();
        let im = self.re.clone() * other.im.clone() + self.im.clone() * other.re.clone();
        Gaussian { re, im }
    }

    /// Multiplicative inverse; `None` for zero.  Nonzero Gaussian rationals
    /// form a field: `(a+bi)^-1 = (a-bi)/(a^2+b^2)`.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let norm = self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone();
        Some(Gaussian { re: self.re.clone() / norm.clone(), im: -self.im.clone() / norm })
    }

    pub fn scale(&self, r: &R) -> Self {
        Gaussian { re: self.re.clone() * r.clone(), im: self.im.clone() * r.clone() }
    }
}

impl<R: Rational> fmt::Display for Gaussian<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        if self.re.is_zero() {
            return write!(f, "{}*i", self.im);
        }
        if self.im.is_negative() {
            write!(f, "{}-{}*i", self.re, self.im.abs())
        } else {
            write!(f, "{}+{}*i", self.re, self.im)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    type G = Gaussian<Rat>;

    #[test]
    fn i_squares_to_minus_one() {
        assert_eq!(G::i().mul(&G::i()), G::from_int(-1));
    }

    #[test]
    fn field_inverse() {
        let q = G::new(rat_frac(3, 2), rat_frac(-1, 4));
        let p = q.inv().unwrap();
        assert!(q.mul(&p).is_one());
        assert!(G::zero().inv().is_none());
    }

    #[test]
    fn fraction_normalization_is_structural() {
        // 2/4 and 1/2 must be the same value for map-based coefficient
        // storage to merge terms correctly.
        assert_eq!(G::frac(2, 4), G::frac(1, 2));
        assert_eq!(G::frac(1, -2), G::frac(-1, 2));
    }

    #[test]
    fn display_forms() {
        assert_eq!(G::zero().to_string(), "0");
        assert_eq!(G::frac(-3, 2).to_string(), "-3/2");
        assert_eq!(G::frac_i(1, 3).to_string(), "1/3*i");
        assert_eq!(G::new(rat_int(1), rat_int(-2)).to_string(), "1-2*i");
    }
}
