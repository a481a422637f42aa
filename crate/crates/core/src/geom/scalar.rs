//! Numeric types shared by the kernel.
//!
//! Predicates are written once against [`Scalar`] and evaluated twice: first
//! with [`Interval`]s, which may answer "don't know", then with exact
//! rationals, which always answer.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::interval::Interval;

pub type Rational = BigRational;

pub trait Scalar: Clone + fmt::Debug {
    fn zero() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Sign relative to zero; `None` when the representation cannot decide.
    fn sign(&self) -> Option<Ordering>;
}

/// Scalars with division and a total order, used by the closest-point code.
pub trait FieldScalar: Scalar + PartialOrd {
    fn one() -> Self;
    fn div(&self, o: &Self) -> Self;
    /// Whether a cross-product determinant `det` is too small, relative to
    /// `scale`, to solve with. Exact types only reject zero.
    fn nearly_parallel(det: &Self, scale: &Self) -> bool;
}

impl Scalar for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sign(&self) -> Option<Ordering> {
        Some(Ord::cmp(self, &<Rational as Zero>::zero()))
    }
}

impl FieldScalar for Rational {
    fn one() -> Self {
        One::one()
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn nearly_parallel(det: &Self, _scale: &Self) -> bool {
        det.is_zero()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sign(&self) -> Option<Ordering> {
        self.partial_cmp(&0.0)
    }
}

impl FieldScalar for f64 {
    fn one() -> Self {
        1.0
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn nearly_parallel(det: &Self, scale: &Self) -> bool {
        det.abs() <= 1e-12 * scale.abs()
    }
}

impl Scalar for Interval {
    fn zero() -> Self {
        Interval::ZERO
    }
    fn add(&self, o: &Self) -> Self {
        *self + *o
    }
    fn sub(&self, o: &Self) -> Self {
        *self - *o
    }
    fn mul(&self, o: &Self) -> Self {
        *self * *o
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn sign(&self) -> Option<Ordering> {
        if self.lo == 0.0 && self.hi == 0.0 {
            return Some(Ordering::Equal);
        }
        Interval::sign(self)
    }
}

/// Exact rational value of a finite `f64`.
pub fn rat_from_f64(v: f64) -> Rational {
    assert!(v.is_finite(), "non-finite coordinate {v}");
    Rational::from_float(v).expect("finite float")
}

pub fn rat_from_i64(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Nearest `f64`, ties to even. Returns `None` on overflow.
pub fn rat_to_f64(r: &Rational) -> Option<f64> {
    if r.is_zero() {
        return Some(0.0);
    }
    let neg = r.is_negative();
    let n = r.numer().abs();
    let d = r.denom().abs();
    // Pick k so that q = floor(n * 2^k / d) has exactly 53 bits, or fewer in
    // the subnormal range where k is capped at 1074.
    let mut k: i64 = 53 - (n.bits() as i64 - d.bits() as i64);
    let quot = |k: i64| -> (BigInt, BigInt, BigInt) {
        let (num, den) = if k >= 0 {
            (&n << (k as usize), d.clone())
        } else {
            (n.clone(), &d << ((-k) as usize))
        };
        let (q, r) = num.div_rem(&den);
        (q, r, den)
    };
    let two53 = BigInt::one() << 53usize;
    let (mut q, mut rem, mut den) = quot(k);
    while q >= two53 {
        k -= 1;
        (q, rem, den) = quot(k);
    }
    while q < (&two53 >> 1usize) && k < 1074 {
        k += 1;
        (q, rem, den) = quot(k);
    }
    if k > 1074 {
        k = 1074;
        (q, rem, den) = quot(k);
    }
    let twice = &rem << 1usize;
    let round_up = match twice.cmp(&den) {
        Ordering::Greater => true,
        Ordering::Equal => q.is_odd(),
        Ordering::Less => false,
    };
    if round_up {
        q += 1;
    }
    let qf = q.to_u64()? as f64; // q <= 2^53, exact
    let v = ldexp(qf, -k);
    if v.is_infinite() {
        return None;
    }
    Some(if neg { -v } else { v })
}

/// `x * 2^e` without double rounding for results that are representable.
fn ldexp(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Whether `r` is exactly a finite `f64`.
pub fn is_f64_exact(r: &Rational) -> bool {
    match rat_to_f64(r) {
        Some(v) => rat_from_f64(v) == *r,
        None => false,
    }
}

/// Enclosure of `r` from its nearest `f64`.
pub fn rat_interval(r: &Rational) -> Interval {
    match rat_to_f64(r) {
        Some(v) if rat_from_f64(v) == *r => Interval::point(v),
        Some(v) => Interval::around(v),
        None => {
            if r.is_negative() {
                Interval::new(f64::NEG_INFINITY, -f64::MAX)
            } else {
                Interval::new(f64::MAX, f64::INFINITY)
            }
        }
    }
}

/// Lossy conversion for diagnostics and LP coefficients.
pub fn rat_approx(r: &Rational) -> f64 {
    rat_to_f64(r).unwrap_or(if r.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

/// Parses `n`, `n/d`, or a decimal literal such as `-1.25e-6` exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let mut n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    if neg {
        n = -n;
    }
    let scale = exp - frac.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return None;
    }
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        Rational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Canonical `num/den` text; integers print without a denominator.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Bits needed for numerator plus denominator, a rough precision measure.
pub fn rational_bits(r: &Rational) -> u64 {
    let b = |x: &BigInt| if x.sign() == Sign::NoSign { 0 } else { x.bits() };
    b(r.numer()) + b(r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn one_third_rounds_to_nearest() {
        assert_eq!(rat_to_f64(&r(1, 3)).unwrap().to_bits(), 0x3FD5555555555555);
        assert_eq!(rat_to_f64(&r(-1, 3)).unwrap(), -1.0 / 3.0);
    }

    #[test]
    fn ties_go_to_even() {
        let one = rat_from_f64(1.0);
        let ulp = rat_from_f64(f64::EPSILON);
        let half = &ulp / rat_from_i64(2);
        // 1 + ulp/2 sits exactly between 1 and 1+ulp; even mantissa is 1.
        assert_eq!(rat_to_f64(&(&one + &half)).unwrap(), 1.0);
        // 1 + 3ulp/2 sits between 1+ulp (odd) and 1+2ulp (even).
        let v = &one + &ulp + &half;
        assert_eq!(rat_to_f64(&v).unwrap(), 1.0 + 2.0 * f64::EPSILON);
    }

    #[test]
    fn float_round_trip_is_identity() {
        for v in [0.1, -7.25e-300, 5e-324, f64::MAX, 1e22, 123456.789] {
            assert_eq!(rat_to_f64(&rat_from_f64(v)).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn subnormal_and_overflow() {
        let tiny = rat_from_f64(5e-324) / rat_from_i64(3);
        assert_eq!(rat_to_f64(&tiny).unwrap(), 0.0);
        let two_thirds = rat_from_f64(5e-324) * r(2, 3);
        assert_eq!(rat_to_f64(&two_thirds).unwrap(), 5e-324);
        let huge = rat_from_f64(f64::MAX) * rat_from_i64(2);
        assert!(rat_to_f64(&huge).is_none());
    }

    #[test]
    fn matches_std_parse_for_decimals() {
        for s in ["0.1", "1e-6", "-3.75", "2.5e10", "7", "1.0000000000000002", "9007199254740993"] {
            let q = parse_rational(s).unwrap();
            assert_eq!(rat_to_f64(&q).unwrap(), s.parse::<f64>().unwrap(), "{s}");
        }
        assert_eq!(parse_rational("3/-6").unwrap(), r(-1, 2));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn interval_encloses_value() {
        let q = r(1, 3);
        let i = rat_interval(&q);
        assert!(rat_from_f64(i.lo) < q && q < rat_from_f64(i.hi));
        let exact = rat_interval(&r(3, 4));
        assert_eq!((exact.lo, exact.hi), (0.75, 0.75));
    }
}
