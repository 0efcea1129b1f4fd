//! Small f64 vector and quaternion types.
//!
//! Quaternions are scalar-first `(w, x, y, z)` and represent rotations when
//! unit length. Everything here is `Copy` and allocation free.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Norm drift tolerated before an input quaternion is renormalized.
pub const UNIT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).length()
    }

    /// Linear interpolation; `w == 0` and `w == 1` return the endpoints bitwise.
    pub fn lerp(self, o: Vec3, w: f64) -> Vec3 {
        if w == 0.0 {
            self
        } else if w == 1.0 {
            o
        } else {
            self + (o - self) * w
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quat {
    fn default() -> Self {
        Quat::IDENTITY
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Quat {
        let len = axis.length();
        if len == 0.0 {
            return Quat::IDENTITY;
        }
        let (s, c) = (angle * 0.5).sin_cos();
        let k = s / len;
        Quat::new(c, axis.x * k, axis.y * k, axis.z * k)
    }

    pub fn dot(self, o: Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalize(self) -> Quat {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Quat::IDENTITY;
        }
        self.scale(1.0 / n)
    }

    /// Renormalizes only when the norm has drifted past [`UNIT_EPSILON`].
    pub fn renormalized(self) -> Quat {
        if (self.norm() - 1.0).abs() > UNIT_EPSILON {
            self.normalize()
        } else {
            self
        }
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn conjugate(self) -> Quat {
        Quat::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn scale(self, s: f64) -> Quat {
        Quat::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Sign-flipped so that `w >= 0`; same rotation.
    pub fn canonical(self) -> Quat {
        if self.w < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn vector(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        // v' = v + 2w(u x v) + 2u x (u x v)
        let u = self.vector();
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// Geodesic distance between the rotations, in radians, in `[0, pi]`.
    pub fn angle_to(self, o: Quat) -> f64 {
        let d = self.conjugate() * o;
        2.0 * d.vector().length().atan2(d.w.abs())
    }

    /// Row-major 3x3 rotation matrix.
    pub fn to_matrix(self) -> [[f64; 3]; 3] {
        let Quat { w, x, y, z } = self;
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        Quat::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// Shortest-arc spherical interpolation.
///
/// `w == 0` returns `a` and `w == 1` returns `b` bitwise. Inputs whose norm
/// drifted are renormalized; nearly parallel inputs fall back to normalized
/// linear interpolation.
pub fn slerp(a: Quat, b: Quat, w: f64) -> Quat {
    if w == 0.0 {
        return a;
    }
    if w == 1.0 {
        return b;
    }
    let a = a.renormalized();
    let mut b = b.renormalized();
    if a.dot(b) < 0.0 {
        b = -b;
    }
    // Angle between the 4-vectors, accurate at both ends of the range.
    let diff = Quat::new(a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z).norm();
    let sum = Quat::new(a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z).norm();
    let theta = 2.0 * diff.atan2(sum);
    let sin_theta = theta.sin();
    if sin_theta < 1e-6 {
        let q = Quat::new(
            a.w + (b.w - a.w) * w,
            a.x + (b.x - a.x) * w,
            a.y + (b.y - a.y) * w,
            a.z + (b.z - a.z) * w,
        );
        return q.normalize();
    }
    let s0 = ((1.0 - w) * theta).sin() / sin_theta;
    let s1 = (w * theta).sin() / sin_theta;
    Quat::new(
        a.w * s0 + b.w * s1,
        a.x * s0 + b.x * s1,
        a.y * s0 + b.y * s1,
        a.z * s0 + b.z * s1,
    )
    .normalize()
}
