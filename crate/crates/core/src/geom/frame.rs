use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::scalar::{rat_to_f64, Rational};
use super::vec3::{ExactPoint, Vec3f};
use super::GeomError;

/// Right-handed orthonormal frame with `u` along the closest-point direction.
///
/// Stored in binary64. `exact` is set when the frame is axis aligned, in
/// which case every component is exactly 0 or ±1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub u: Vec3f,
    pub v: Vec3f,
    pub w: Vec3f,
    pub exact: bool,
}

impl Frame {
    /// Largest deviation from orthonormality over all six conditions.
    pub fn residual(&self) -> f64 {
        let (u, v, w) = (&self.u, &self.v, &self.w);
        [
            (u.norm2() - 1.0).abs(),
            (v.norm2() - 1.0).abs(),
            (w.norm2() - 1.0).abs(),
            u.dot(v).abs(),
            u.dot(w).abs(),
            v.dot(w).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Unit direction of `d`, computed after an exact rescale so that tiny or
/// huge differences do not underflow.
pub fn unit_direction(d: &ExactPoint) -> Option<Vec3f> {
    let m = d.comps().into_iter().map(|c| c.abs()).max()?;
    if m.is_zero() {
        return None;
    }
    let s: Vec3f = d.map(|c| rat_to_f64(&(c / &m)).expect("scaled into [-1, 1]"));
    Some(s.normalized())
}

pub fn closest_frame(p: &ExactPoint, q: &ExactPoint) -> Result<Frame, GeomError> {
    let diff = q.sub(p);
    let u = unit_direction(&diff).ok_or(GeomError::CoincidentPoints)?;
    let zeros = diff.comps().iter().filter(|c| c.is_zero()).count();
    // Complete with the coordinate axis least aligned with u.
    let a = u.to_array().map(f64::abs);
    let k = if a[0] <= a[1] && a[0] <= a[2] {
        0
    } else if a[1] <= a[2] {
        1
    } else {
        2
    };
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let e = Vec3f::new(e[0], e[1], e[2]);
    let v = e.sub(&u.scale(&e.dot(&u))).normalized();
    let w = u.cross(&v);
    Ok(Frame {
        u,
        v,
        w,
        exact: zeros == 2,
    })
}

/// Exact value of `dir · x` for a binary64 direction.
pub fn exact_dot(dir: &Vec3f, x: &ExactPoint) -> Rational {
    use super::scalar::rat_from_f64;
    rat_from_f64(dir.x) * &x.x + rat_from_f64(dir.y) * &x.y + rat_from_f64(dir.z) * &x.z
}
