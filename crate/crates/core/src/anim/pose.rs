use serde::{Deserialize, Serialize};

use super::math::{slerp, Quat, Vec3};
use super::skeleton::Skeleton;
use super::AnimError;

/// Root translation plus one local rotation per joint, in skeleton order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub root_translation: Vec3,
    pub rotations: Vec<Quat>,
}

impl Pose {
    pub fn new(root_translation: Vec3, rotations: Vec<Quat>) -> Self {
        Pose { root_translation, rotations }
    }

    /// Identity rotations with the root standing at its rest offset.
    pub fn rest(skeleton: &Skeleton) -> Pose {
        Pose {
            root_translation: skeleton.root().rest_offset,
            rotations: vec![Quat::IDENTITY; skeleton.len()],
        }
    }

    pub fn joint_count(&self) -> usize {
        self.rotations.len()
    }

    /// Checks joint count and that every rotation is unit within 1e-6.
    pub fn validate(&self, skeleton: &Skeleton) -> Result<(), AnimError> {
        if self.rotations.len() != skeleton.len() {
            return Err(AnimError::JointCountMismatch {
                expected: skeleton.len(),
                found: self.rotations.len(),
            });
        }
        if !self.root_translation.is_finite() {
            return Err(AnimError::NonFinite { what: "root translation".into() });
        }
        for (q, j) in self.rotations.iter().zip(skeleton.joints()) {
            if !q.is_finite() || !q.is_unit(1e-6) {
                return Err(AnimError::NonUnitRotation { joint: j.name.clone(), norm: q.norm() });
            }
        }
        Ok(())
    }

    /// Largest per-joint geodesic angle between two poses.
    pub fn max_angle_to(&self, other: &Pose) -> f64 {
        self.rotations
            .iter()
            .zip(&other.rotations)
            .map(|(a, b)| a.angle_to(*b))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub position: Vec3,
    pub rotation: Quat,
}

/// Per-joint world transforms, in skeleton order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldPose {
    pub transforms: Vec<Transform>,
}

impl WorldPose {
    pub fn positions(&self) -> Vec<Vec3> {
        self.transforms.iter().map(|t| t.position).collect()
    }
}

/// Per-joint slerp and root lerp. `w == 0` gives `a` and `w == 1` gives `b`
/// exactly.
pub fn blend_poses(a: &Pose, b: &Pose, w: f64) -> Result<Pose, AnimError> {
    if a.rotations.len() != b.rotations.len() {
        return Err(AnimError::JointCountMismatch {
            expected: a.rotations.len(),
            found: b.rotations.len(),
        });
    }
    if w == 0.0 {
        return Ok(a.clone());
    }
    if w == 1.0 {
        return Ok(b.clone());
    }
    Ok(Pose {
        root_translation: a.root_translation.lerp(b.root_translation, w),
        rotations: a.rotations.iter().zip(&b.rotations).map(|(p, q)| slerp(*p, *q, w)).collect(),
    })
}

pub fn forward_kinematics(skeleton: &Skeleton, pose: &Pose) -> Result<WorldPose, AnimError> {
    if pose.rotations.len() != skeleton.len() {
        return Err(AnimError::JointCountMismatch {
            expected: skeleton.len(),
            found: pose.rotations.len(),
        });
    }
    let mut out: Vec<Transform> = Vec::with_capacity(skeleton.len());
    for (joint, local) in skeleton.joints().iter().zip(&pose.rotations) {
        let t = match joint.parent {
            None => Transform { position: pose.root_translation, rotation: *local },
            Some(p) => {
                let parent = out[p];
                Transform {
                    position: parent.position + parent.rotation.rotate(joint.rest_offset),
                    rotation: parent.rotation * *local,
                }
            }
        };
        out.push(t);
    }
    Ok(WorldPose { transforms: out })
}
