//! Scalars that stay rational as long as the mathematics does.
//!
//! All masses, coordinates, and pairings in this crate are arbitrary-precision
//! rationals. The only operation that can leave the rational field is root
//! extraction (an `l^2` norm, a `p`-th root of an averaged `p`-power). A
//! [`Scalar`] is exact until such a root genuinely has no rational value, and
//! only then degrades to binary64. Roots of perfect powers are recovered
//! exactly, so a quantity with a rational closed form stays rational here.

use std::cmp::Ordering;
use std::fmt;

use num::bigint::BigInt;
use num::traits::{Signed, ToPrimitive, Zero};

pub type Rational = num::BigRational;

/// Tolerance for comparisons that involve a binary64 root extraction.
pub const ROOT_TOL: f64 = 1e-12;

/// An exact rational, or a binary64 once a root has left the rational field.
///
/// Arithmetic between two exact scalars is exact; any operation touching an
/// approximate scalar is approximate. Perfect-power detection in
/// [`Scalar::nth_root`] keeps the exact branch alive through norm/root
/// round-trips such as `(f^p)^{1/p}`.
#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(Rational),
    Approx(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(Rational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(Rational::from_integer(BigInt::from(1)))
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Exact(Rational::from_integer(BigInt::from(n)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Approx(x) => *x == 0.0,
        }
    }

    /// The exact value, when this scalar never left the rational field.
    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Approx(x) => *x,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Approx(x) => Scalar::Approx(x.abs()),
        }
    }

    /// Raise to a rational power, staying exact whenever the result is
    /// rational. Negative bases are only meaningful for integer exponents.
    pub fn pow(&self, exponent: &Rational) -> Scalar {
        if exponent.is_zero() {
            return Scalar::one();
        }
        match self {
            Scalar::Exact(base) => {
                if base.is_zero() {
                    assert!(
                        exponent.is_positive(),
                        "zero base with nonpositive exponent"
                    );
                    return Scalar::zero();
                }
                let numer = exponent.numer();
                let denom = exponent.denom();
                let int_pow = match numer.to_i32() {
                    Some(n) => base.pow(n),
                    None => return Scalar::Approx(self.to_f64().powf(rational_f64(exponent))),
                };
                if denom.to_u32() == Some(1) {
                    return Scalar::Exact(int_pow);
                }
                let n = match denom.to_u32() {
                    Some(n) => n,
                    None => return Scalar::Approx(self.to_f64().powf(rational_f64(exponent))),
                };
                match exact_nth_root(&int_pow, n) {
                    Some(root) => Scalar::Exact(root),
                    None => Scalar::Approx(rational_f64(&int_pow).powf(1.0 / f64::from(n))),
                }
            }
            Scalar::Approx(x) => Scalar::Approx(x.powf(rational_f64(exponent))),
        }
    }

    /// `n`-th root, exact when the operand is a perfect `n`-th power.
    pub fn nth_root(&self, n: u32) -> Scalar {
        assert!(n > 0);
        match self {
            Scalar::Exact(r) => match exact_nth_root(r, n) {
                Some(root) => Scalar::Exact(root),
                None => Scalar::Approx(rational_f64(r).powf(1.0 / f64::from(n))),
            },
            Scalar::Approx(x) => Scalar::Approx(x.powf(1.0 / f64::from(n))),
        }
    }

    /// `self <= other + tol`, with `tol` ignored on the all-exact branch.
    pub fn le_tol(&self, other: &Scalar, tol: f64) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a <= b,
            _ => self.to_f64() <= other.to_f64() + tol,
        }
    }

    /// Equality up to `tol`, exact on the all-exact branch.
    pub fn eq_tol(&self, other: &Scalar, tol: f64) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => (self.to_f64() - other.to_f64()).abs() <= tol,
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Scalar) -> Scalar {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::Exact(r)
    }
}

impl From<&Rational> for Scalar {
    fn from(r: &Rational) -> Self {
        Scalar::Exact(r.clone())
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl std::ops::$trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    (a, b) => Scalar::Approx(a.to_f64() $op b.to_f64()),
                }
            }
        }
        impl std::ops::$trait for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    (a, b) => Scalar::Approx(a.to_f64() $op b.to_f64()),
                }
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);

impl std::ops::Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => {
                assert!(!b.is_zero(), "division of an exact scalar by zero");
                Scalar::Exact(a / b)
            }
            (a, b) => Scalar::Approx(a.to_f64() / b.to_f64()),
        }
    }
}

impl std::ops::Div for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        self.clone() / rhs.clone()
    }
}

impl std::ops::Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Approx(x) => Scalar::Approx(-x),
        }
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            (a, b) => a.to_f64() == b.to_f64(),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.partial_cmp(b),
            (a, b) => a.to_f64().partial_cmp(&b.to_f64()),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{}", fmt_rational(r)),
            Scalar::Approx(x) => write!(f, "~{x}"),
        }
    }
}

/// Exact `n`-th root of a rational, when one exists.
pub fn exact_nth_root(r: &Rational, n: u32) -> Option<Rational> {
    assert!(n > 0);
    if n == 1 {
        return Some(r.clone());
    }
    if r.is_negative() && n % 2 == 0 {
        return None;
    }
    let sign = if r.is_negative() { -1 } else { 1 };
    let numer = r.numer().abs();
    let denom = r.denom().abs();
    let rn = perfect_root(&numer, n)?;
    let rd = perfect_root(&denom, n)?;
    Some(Rational::new(rn * BigInt::from(sign), rd))
}

fn perfect_root(value: &BigInt, n: u32) -> Option<BigInt> {
    let root = value.nth_root(n);
    if num::pow::pow(root.clone(), n as usize) == *value {
        Some(root)
    } else {
        None
    }
}

pub fn rational_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parse a rational from `"p"` or `"p/q"` form.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    s.trim()
        .parse::<Rational>()
        .map_err(|e| format!("'{s}' is not a rational: {e}"))
}

/// Render as `p/q`, or just `p` for integers.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().to_u32() == Some(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Promote a rational-valued function to scalar values.
pub fn exact_vec(v: &[Rational]) -> Vec<Scalar> {
    v.iter().map(Scalar::from).collect()
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn roots_of_perfect_powers_are_exact() {
        let x = rat(9, 4);
        assert_eq!(exact_nth_root(&x, 2), Some(rat(3, 2)));
        assert_eq!(exact_nth_root(&rat(-27, 8), 3), Some(rat(-3, 2)));
        assert_eq!(exact_nth_root(&rat(5, 1), 2), None);
        assert_eq!(exact_nth_root(&rat(-4, 1), 2), None);
    }

    #[test]
    fn pow_keeps_exactness_through_power_root_round_trips() {
        let half = rat(1, 2);
        let v = Scalar::Exact(rat(7, 3));
        let sq = v.pow(&rat_int(2));
        assert_eq!(sq.pow(&half), v);
        assert!(sq.pow(&half).is_exact());
    }

    #[test]
    fn irrational_roots_degrade_to_binary64() {
        let five = Scalar::from_int(5);
        let root = five.nth_root(2);
        assert!(!root.is_exact());
        assert!((root.to_f64() - 5f64.sqrt()).abs() < ROOT_TOL);
    }

    #[test]
    fn mixed_arithmetic_is_approximate_but_close() {
        let a = Scalar::Exact(rat(1, 3));
        let b = Scalar::Approx(0.5);
        let s = a + b;
        assert!(!s.is_exact());
        assert!((s.to_f64() - (1.0 / 3.0 + 0.5)).abs() < ROOT_TOL);
    }

    #[test]
    fn tolerant_comparisons_are_strict_on_the_exact_branch() {
        let a = Scalar::Exact(rat(1, 3));
        let b = Scalar::Exact(rat(1, 3) + rat(1, 1_000_000));
        assert!(a.le_tol(&b, 0.0));
        assert!(!b.le_tol(&a, 0.0));
        assert!(!a.eq_tol(&b, 1e-3));
    }

    proptest! {
        #[test]
        fn nth_root_inverts_pow(n in -40i64..40, d in 1i64..12, k in 1u32..4) {
            let r = rat(n, d);
            if !(r.is_negative() && k % 2 == 0) {
                let powed = num::pow::Pow::pow(r.clone(), k as i32);
                prop_assert_eq!(exact_nth_root(&powed, k), Some(r));
            }
        }

        #[test]
        fn exact_ops_never_degrade(a in -50i64..50, b in -50i64..50, d in 1i64..20) {
            let x = Scalar::Exact(rat(a, d));
            let y = Scalar::Exact(rat(b, d));
            prop_assert!((x.clone() + y.clone()).is_exact());
            prop_assert!((x.clone() * y.clone()).is_exact());
            prop_assert!((x - y).is_exact());
        }
    }
}
