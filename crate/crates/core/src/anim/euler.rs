//! Euler angle conversion for the six Tait-Bryan orders.
//!
//! An order lists axes in the sequence the rotations are composed, which is
//! also the order BVH lists rotation channels: `ZXY` means `Rz * Rx * Ry`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::math::{Quat, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::X,
            Axis::Y => Vec3::Y,
            Axis::Z => Vec3::Z,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum RotationOrder {
    #[default]
    XYZ,
    XZY,
    YXZ,
    YZX,
    ZXY,
    ZYX,
}

impl RotationOrder {
    pub const ALL: [RotationOrder; 6] = [
        RotationOrder::XYZ,
        RotationOrder::XZY,
        RotationOrder::YXZ,
        RotationOrder::YZX,
        RotationOrder::ZXY,
        RotationOrder::ZYX,
    ];

    pub fn axes(self) -> [Axis; 3] {
        use Axis::*;
        match self {
            RotationOrder::XYZ => [X, Y, Z],
            RotationOrder::XZY => [X, Z, Y],
            RotationOrder::YXZ => [Y, X, Z],
            RotationOrder::YZX => [Y, Z, X],
            RotationOrder::ZXY => [Z, X, Y],
            RotationOrder::ZYX => [Z, Y, X],
        }
    }

    pub fn from_axes(axes: [Axis; 3]) -> Option<RotationOrder> {
        RotationOrder::ALL.into_iter().find(|o| o.axes() == axes)
    }

    /// +1 for cyclic orders (XYZ, YZX, ZXY), -1 otherwise.
    fn parity(self) -> f64 {
        match self {
            RotationOrder::XYZ | RotationOrder::YZX | RotationOrder::ZXY => 1.0,
            _ => -1.0,
        }
    }
}

impl fmt::Display for RotationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.axes() {
            write!(f, "{}", a.letter())?;
        }
        Ok(())
    }
}

impl FromStr for RotationOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RotationOrder::ALL
            .into_iter()
            .find(|o| o.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown rotation order `{s}`"))
    }
}

/// Composes three angles (radians, listed in `order`) into a quaternion.
pub fn euler_to_quat(order: RotationOrder, angles: [f64; 3]) -> Quat {
    let [a0, a1, a2] = order.axes();
    Quat::from_axis_angle(a0.unit(), angles[0])
        * Quat::from_axis_angle(a1.unit(), angles[1])
        * Quat::from_axis_angle(a2.unit(), angles[2])
}

/// Inverse of [`euler_to_quat`]; the middle angle lies in `[-pi/2, pi/2]`.
///
/// At gimbal lock the last angle is pinned to zero.
pub fn quat_to_euler(order: RotationOrder, q: Quat) -> [f64; 3] {
    let m = q.normalize().to_matrix();
    let [i, j, k] = order.axes().map(Axis::index);
    let s = order.parity();
    let sin_b = s * m[i][k];
    let cos_b = (m[i][i] * m[i][i] + m[i][j] * m[i][j]).sqrt();
    let b = sin_b.atan2(cos_b);
    if cos_b > 1e-9 {
        let a = (-s * m[j][k]).atan2(m[k][k]);
        let c = (-s * m[i][j]).atan2(m[i][i]);
        [a, b, c]
    } else {
        let a = (s * m[k][j]).atan2(m[j][j]);
        [a, b, 0.0]
    }
}
