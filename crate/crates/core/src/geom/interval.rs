use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

/// Closed interval of reals with `f64` end points.
///
/// Every operation widens its result by one ulp on each side, which covers
/// the half-ulp error of round-to-nearest. The enclosure is therefore valid
/// without switching the FPU rounding mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    /// Enclosure of a value whose nearest `f64` is `v`.
    pub fn around(v: f64) -> Self {
        Self {
            lo: v.next_down(),
            hi: v.next_up(),
        }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan());
        Self { lo, hi }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Sign of every value in the interval, if they all agree.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo > 0.0 {
            Some(Ordering::Greater)
        } else if self.hi < 0.0 {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn min(self, o: Self) -> Self {
        Self::new(self.lo.min(o.lo), self.hi.min(o.hi))
    }

    pub fn max(self, o: Self) -> Self {
        Self::new(self.lo.max(o.lo), self.hi.max(o.hi))
    }

    pub fn sqrt_upper(&self) -> f64 {
        self.hi.max(0.0).sqrt().next_up()
    }

    pub fn sqrt_lower(&self) -> f64 {
        self.lo.max(0.0).sqrt().next_down().max(0.0)
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Self) -> Self {
        Self::new((self.lo + o.lo).next_down(), (self.hi + o.hi).next_up())
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Self) -> Self {
        Self::new((self.lo - o.hi).next_down(), (self.hi - o.lo).next_up())
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Self) -> Self {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        if p.iter().any(|v| v.is_nan()) {
            return Self::new(f64::NEG_INFINITY, f64::INFINITY);
        }
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(lo.next_down(), hi.next_up())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widening_encloses_exact_sum() {
        // 0.1 + 0.2 is not exactly 0.3 in binary; the enclosure must still hold 0.3's rational value.
        let s = Interval::point(0.1) + Interval::point(0.2);
        assert!(s.lo <= 0.30000000000000004 && s.hi >= 0.30000000000000004);
        assert!(s.lo < s.hi);
    }

    #[test]
    fn sign_is_undetermined_across_zero() {
        assert_eq!(Interval::new(-1e-300, 1.0).sign(), None);
        assert_eq!(Interval::new(1e-300, 1.0).sign(), Some(Ordering::Greater));
        assert_eq!(Interval::new(-2.0, -1.0).sign(), Some(Ordering::Less));
    }

    #[test]
    fn product_of_mixed_signs() {
        let p = Interval::new(-2.0, 3.0) * Interval::new(-1.0, 4.0);
        assert!(p.lo <= -8.0 && p.hi >= 12.0);
    }
}
