use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::interval::Interval;
use super::scalar::{rat_from_f64, rat_interval, rat_to_f64, FieldScalar, Rational, Scalar};

/// Three components of any scalar type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct V3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

pub type ExactPoint = V3<Rational>;
pub type IVec3 = V3<Interval>;
pub type Vec3f = V3<f64>;

impl<T> V3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn comps(&self) -> [&T; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> V3<U> {
        V3::new(f(&self.x), f(&self.y), f(&self.z))
    }
}

impl<T: Scalar> V3<T> {
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.x.add(&o.x), self.y.add(&o.y), self.z.add(&o.z))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.x.sub(&o.x), self.y.sub(&o.y), self.z.sub(&o.z))
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.x.mul(s), self.y.mul(s), self.z.mul(s))
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x.mul(&o.x).add(&self.y.mul(&o.y)).add(&self.z.mul(&o.z))
    }

    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y.mul(&o.z).sub(&self.z.mul(&o.y)),
            self.z.mul(&o.x).sub(&self.x.mul(&o.z)),
            self.x.mul(&o.y).sub(&self.y.mul(&o.x)),
        )
    }

    pub fn norm2(&self) -> T {
        self.dot(self)
    }

    /// `Some(true)` if every component is zero, `None` if undecidable.
    pub fn is_zero(&self) -> Option<bool> {
        let mut undecided = false;
        for c in self.comps() {
            match c.sign() {
                Some(Ordering::Equal) => {}
                Some(_) => return Some(false),
                None => undecided = true,
            }
        }
        if undecided {
            None
        } else {
            Some(true)
        }
    }
}

impl<T: FieldScalar> V3<T> {
    /// Lexicographic comparison, used for deterministic tie-breaking.
    pub fn lex_cmp(&self, o: &Self) -> Ordering {
        let c = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(Ordering::Equal);
        c(&self.x, &o.x)
            .then_with(|| c(&self.y, &o.y))
            .then_with(|| c(&self.z, &o.z))
    }

    /// `self + (o - self) * t`
    pub fn lerp(&self, o: &Self, t: &T) -> Self {
        self.add(&o.sub(self).scale(t))
    }
}

impl V3<f64> {
    pub fn length(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let l = self.length();
        Self::new(self.x / l, self.y / l, self.z / l)
    }

    pub fn max_abs(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl ExactPoint {
    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(rat_from_f64(x), rat_from_f64(y), rat_from_f64(z))
    }

    pub fn from_ints(x: i64, y: i64, z: i64) -> Self {
        Self::from_f64(x as f64, y as f64, z as f64)
    }

    /// Nearest `f64` per coordinate (ties to even); panics on overflow.
    pub fn to_f64(&self) -> Vec3f {
        self.map(|c| rat_to_f64(c).expect("coordinate overflows binary64"))
    }

    pub fn interval(&self) -> IVec3 {
        self.map(rat_interval)
    }
}

impl IVec3 {
    pub fn from_f64(v: &Vec3f) -> Self {
        v.map(|c| Interval::point(*c))
    }
}
