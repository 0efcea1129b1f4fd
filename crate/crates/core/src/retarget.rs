//! Pose transfer between differently proportioned skeletons, and planar
//! projection for flat "shadow" rendering.
//!
//! Retargeting copies local rotations joint for joint and scales the root
//! translation by the ratio of hip heights. Proportions of the target
//! skeleton are what distort the motion; rotations are never edited.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anim::{forward_kinematics, Pose, Quat, Skeleton, Vec3, WorldPose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetargetError {
    #[error("cannot pair root `{dst_root}` of `{dst}` with root `{src_root}` of `{src}`")]
    RootsUnpaired { src: String, dst: String, src_root: String, dst_root: String },
    #[error("skeleton `{0}` has zero hip height, height ratio undefined")]
    ZeroHipHeight(String),
    #[error("alias `{src_joint}` -> `{dst_joint}` names a joint that does not exist")]
    UnknownAliasJoint { src_joint: String, dst_joint: String },
    #[error("alias `{src_joint}` -> `{dst_joint}` targets a joint that is already mapped")]
    AliasConflict { src_joint: String, dst_joint: String },
    #[error("pose has {found} joints, skeleton `{skeleton}` has {expected}")]
    Mismatch { skeleton: String, expected: usize, found: usize },
    #[error("shadow plane normal must be non-zero and finite")]
    BadPlane,
}

/// Source to destination joint correspondence for one skeleton pair.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMap {
    /// Indexed by destination joint.
    sources: Vec<Option<usize>>,
    src_len: usize,
    root_height_ratio: f64,
}

impl JointMap {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sources.iter().enumerate().filter_map(|(d, s)| s.map(|s| (s, d)))
    }

    pub fn source_of(&self, dst: usize) -> Option<usize> {
        self.sources.get(dst).copied().flatten()
    }

    /// Destination joints with no source; they stay at rest.
    pub fn unmapped(&self) -> Vec<usize> {
        self.sources.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(d, _)| d).collect()
    }

    pub fn root_height_ratio(&self) -> f64 {
        self.root_height_ratio
    }

    pub fn is_identity(&self) -> bool {
        self.src_len == self.sources.len()
            && self.sources.iter().enumerate().all(|(d, s)| *s == Some(d))
            && self.root_height_ratio == 1.0
    }
}

/// Height of the root above the lowest joint of the rest pose, along +Y.
pub fn hip_height(skeleton: &Skeleton) -> f64 {
    let rest = Pose::rest(skeleton);
    let world = forward_kinematics(skeleton, &rest).expect("rest pose matches its skeleton");
    let root_y = world.transforms[0].position.y;
    let floor = world.transforms.iter().map(|t| t.position.y).fold(root_y, f64::min);
    root_y - floor
}

/// Pairs joints by exact name, then by `(src, dst)` aliases for destination
/// joints still unpaired.
pub fn build_joint_map(
    src: &Skeleton,
    dst: &Skeleton,
    aliases: &[(String, String)],
) -> Result<JointMap, RetargetError> {
    let mut sources: Vec<Option<usize>> =
        dst.joints().iter().map(|j| src.index_of(&j.name)).collect();
    let exact = sources.clone();
    for (s, d) in aliases {
        let unknown =
            || RetargetError::UnknownAliasJoint { src_joint: s.clone(), dst_joint: d.clone() };
        let si = src.index_of(s).ok_or_else(unknown)?;
        let di = dst.index_of(d).ok_or_else(unknown)?;
        if exact[di].is_some() || sources[di].is_some_and(|prev| prev != si) {
            return Err(RetargetError::AliasConflict { src_joint: s.clone(), dst_joint: d.clone() });
        }
        sources[di] = Some(si);
    }
    if sources[0] != Some(0) {
        return Err(RetargetError::RootsUnpaired {
            src: src.name().into(),
            dst: dst.name().into(),
            src_root: src.root().name.clone(),
            dst_root: dst.root().name.clone(),
        });
    }
    let src_h = hip_height(src);
    if src_h <= 0.0 {
        return Err(RetargetError::ZeroHipHeight(src.name().into()));
    }
    let dst_h = hip_height(dst);
    if dst_h <= 0.0 {
        return Err(RetargetError::ZeroHipHeight(dst.name().into()));
    }
    let root_height_ratio = dst_h / src_h;
    Ok(JointMap { sources, src_len: src.len(), root_height_ratio })
}

pub fn retarget_pose(
    pose: &Pose,
    map: &JointMap,
    src: &Skeleton,
    dst: &Skeleton,
) -> Result<Pose, RetargetError> {
    if pose.rotations.len() != src.len() || map.src_len != src.len() {
        return Err(RetargetError::Mismatch {
            skeleton: src.name().into(),
            expected: src.len(),
            found: pose.rotations.len(),
        });
    }
    if map.sources.len() != dst.len() {
        return Err(RetargetError::Mismatch {
            skeleton: dst.name().into(),
            expected: dst.len(),
            found: map.sources.len(),
        });
    }
    let rotations = map
        .sources
        .iter()
        .map(|s| s.map_or(Quat::IDENTITY, |s| pose.rotations[s]))
        .collect();
    Ok(Pose::new(pose.root_translation * map.root_height_ratio, rotations))
}

/// Plane that flat shadow bodies live on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlaneSpec", into = "PlaneSpec")]
pub struct ShadowPlane {
    origin: Vec3,
    normal: Vec3,
}

#[derive(Serialize, Deserialize)]
struct PlaneSpec {
    origin: [f64; 3],
    normal: [f64; 3],
}

impl TryFrom<PlaneSpec> for ShadowPlane {
    type Error = RetargetError;
    fn try_from(p: PlaneSpec) -> Result<Self, Self::Error> {
        ShadowPlane::new(p.origin.into(), p.normal.into())
    }
}

impl From<ShadowPlane> for PlaneSpec {
    fn from(p: ShadowPlane) -> Self {
        PlaneSpec { origin: p.origin.to_array(), normal: p.normal.to_array() }
    }
}

impl ShadowPlane {
    /// Normalizes `normal`; rejects zero or non-finite normals.
    pub fn new(origin: Vec3, normal: Vec3) -> Result<Self, RetargetError> {
        let len = normal.length();
        if !(len.is_finite() && len > 0.0 && origin.is_finite()) {
            return Err(RetargetError::BadPlane);
        }
        let normal = if (len - 1.0).abs() <= 1e-12 { normal } else { normal * (1.0 / len) };
        Ok(ShadowPlane { origin, normal })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn project(&self, p: Vec3) -> Vec3 {
        p - self.normal * (p - self.origin).dot(self.normal)
    }
}

/// Orthogonal projection of every joint position, in joint order.
pub fn project_to_plane(wp: &WorldPose, plane: &ShadowPlane) -> Vec<Vec3> {
    wp.transforms.iter().map(|t| plane.project(t.position)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anim::{Joint, Transform};

    fn biped(name: &str, hip: f64, extra: bool) -> Skeleton {
        let half = hip / 2.0;
        let mut joints = vec![
            Joint::new("Hips", None, Vec3::new(0.0, hip, 0.0)),
            Joint::new("Spine", Some(0), Vec3::new(0.0, 0.2, 0.0)),
            Joint::new("Leg", Some(0), Vec3::new(0.1, 0.0, 0.0)),
            Joint::new("Knee", Some(2), Vec3::new(0.0, -half, 0.0)),
            Joint::new("Foot", Some(3), Vec3::new(0.0, -half, 0.0)).end_site(),
        ];
        if extra {
            joints.push(Joint::new("Cape", Some(1), Vec3::new(0.0, 0.0, -0.1)));
        }
        Skeleton::new(name, joints).unwrap()
    }

    #[test]
    fn identical_skeletons_map_to_identity() {
        let s = biped("a", 1.0, false);
        let m = build_joint_map(&s, &s, &[]).unwrap();
        assert!(m.is_identity());
        assert_eq!(m.root_height_ratio(), 1.0);
    }

    #[test]
    fn extra_destination_joint_is_unmapped() {
        let m = build_joint_map(&biped("a", 1.0, false), &biped("b", 1.0, true), &[]).unwrap();
        assert_eq!(m.unmapped(), vec![5]);
    }

    #[test]
    fn height_ratio_halves() {
        let m = build_joint_map(&biped("a", 1.0, false), &biped("b", 0.5, false), &[]).unwrap();
        assert_eq!(m.root_height_ratio(), 0.5);
        assert_eq!(hip_height(&biped("a", 1.0, false)), 1.0);
    }

    #[test]
    fn roots_must_pair() {
        let src = biped("a", 1.0, false);
        let dst = Skeleton::new("p", vec![Joint::new("pelvis", None, Vec3::ZERO)]).unwrap();
        assert!(matches!(build_joint_map(&src, &dst, &[]), Err(RetargetError::RootsUnpaired { .. })));
    }

    #[test]
    fn aliases_pair_renamed_joints() {
        let src = biped("a", 1.0, false);
        let dst = Skeleton::new(
            "p",
            vec![
                Joint::new("pelvis", None, Vec3::ZERO),
                Joint::new("thigh", Some(0), Vec3::new(0.0, -0.9, 0.0)),
            ],
        )
        .unwrap();
        let aliases = vec![("Hips".to_string(), "pelvis".to_string()), ("Leg".into(), "thigh".into())];
        let m = build_joint_map(&src, &dst, &aliases).unwrap();
        assert_eq!(m.source_of(0), Some(0));
        assert_eq!(m.source_of(1), Some(2));
        assert!((m.root_height_ratio() - 0.9).abs() < 1e-15);
        let bad = vec![("Hips".to_string(), "nope".to_string())];
        assert!(matches!(
            build_joint_map(&src, &dst, &bad),
            Err(RetargetError::UnknownAliasJoint { .. })
        ));
    }

    #[test]
    fn zero_source_hip_height_is_an_error() {
        let flat = Skeleton::new(
            "flat",
            vec![Joint::new("Hips", None, Vec3::ZERO), Joint::new("Spine", Some(0), Vec3::Y)],
        )
        .unwrap();
        assert!(matches!(
            build_joint_map(&flat, &biped("b", 1.0, false), &[]),
            Err(RetargetError::ZeroHipHeight(_))
        ));
    }

    #[test]
    fn retarget_scales_root_and_pins_unmapped() {
        let src = biped("a", 1.0, false);
        let dst = biped("b", 0.5, true);
        let m = build_joint_map(&src, &dst, &[]).unwrap();
        let q = Quat::from_axis_angle(Vec3::X, 0.4);
        let pose = Pose::new(Vec3::new(0.0, 1.0, 2.0), vec![q; 5]);
        let out = retarget_pose(&pose, &m, &src, &dst).unwrap();
        assert_eq!(out.root_translation, Vec3::new(0.0, 0.5, 1.0));
        assert_eq!(&out.rotations[..5], &pose.rotations[..]);
        assert_eq!(out.rotations[5], Quat::IDENTITY);
        let wrong = Pose::new(Vec3::ZERO, vec![q; 3]);
        assert!(retarget_pose(&wrong, &m, &src, &dst).is_err());
    }

    #[test]
    fn projection_drops_normal_component() {
        let plane = ShadowPlane::new(Vec3::ZERO, Vec3::Z).unwrap();
        let wp = WorldPose {
            transforms: vec![
                Transform { position: Vec3::new(1.0, 2.0, 3.0), rotation: Quat::IDENTITY },
                Transform { position: Vec3::new(4.0, 5.0, 0.0), rotation: Quat::IDENTITY },
            ],
        };
        let pts = project_to_plane(&wp, &plane);
        assert_eq!(pts, vec![Vec3::new(1.0, 2.0, 0.0), Vec3::new(4.0, 5.0, 0.0)]);
        assert!(ShadowPlane::new(Vec3::ZERO, Vec3::ZERO).is_err());
    }
}
