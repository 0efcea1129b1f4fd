//! Skeletons, poses, clips and the rotation math the rest of the crate
//! builds on. Everything here is immutable data and pure functions.

mod clip;
mod euler;
mod math;
mod pose;
mod skeleton;

pub use clip::{clip_stats, sample_clip, Clip, ClipStats, Segment, SegmentKind, TIME_SLACK};
pub use euler::{euler_to_quat, quat_to_euler, Axis, RotationOrder};
pub use math::{slerp, Quat, Vec3, UNIT_EPSILON};
pub use pose::{blend_poses, forward_kinematics, Pose, Transform, WorldPose};
pub use skeleton::{Joint, Skeleton};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnimError {
    #[error("invalid skeleton `{skeleton}`: {message}")]
    InvalidSkeleton { skeleton: String, message: String },
    #[error("invalid clip `{clip}`: {message}")]
    InvalidClip { clip: String, message: String },
    #[error("joint count mismatch: expected {expected}, found {found}")]
    JointCountMismatch { expected: usize, found: usize },
    #[error("rotation of joint `{joint}` is not unit (norm {norm})")]
    NonUnitRotation { joint: String, norm: f64 },
    #[error("{what} is not finite")]
    NonFinite { what: String },
    #[error("time {t} s is outside clip `{clip}` (duration {duration} s)")]
    TimeOutOfRange { clip: String, t: f64, duration: f64 },
}
