use std::fmt;

use serde::{Deserialize, Serialize};

use super::pose::{blend_poses, Pose};
use super::skeleton::Skeleton;
use super::AnimError;

/// Sample positions within this many frames of an integer frame return
/// that frame untouched.
const FRAME_SNAP: f64 = 1e-9;

/// Slack allowed when a sample time overshoots the clip range through
/// rounding.
pub const TIME_SLACK: f64 = 1e-9;

/// A uniformly sampled pose track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    name: String,
    skeleton_ref: String,
    frame_rate: f64,
    frames: Vec<Pose>,
}

impl Clip {
    pub fn new(
        name: impl Into<String>,
        skeleton: &Skeleton,
        frame_rate: f64,
        frames: Vec<Pose>,
    ) -> Result<Self, AnimError> {
        let name = name.into();
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(AnimError::InvalidClip {
                clip: name,
                message: format!("frame rate {frame_rate} is not finite and positive"),
            });
        }
        if frames.is_empty() {
            return Err(AnimError::InvalidClip { clip: name, message: "no frames".into() });
        }
        for (i, f) in frames.iter().enumerate() {
            f.validate(skeleton).map_err(|e| AnimError::InvalidClip {
                clip: name.clone(),
                message: format!("frame {i}: {e}"),
            })?;
        }
        Ok(Clip { name, skeleton_ref: skeleton.name().to_string(), frame_rate, frames })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn skeleton_ref(&self) -> &str {
        &self.skeleton_ref
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn frames(&self) -> &[Pose] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// `(frame_count - 1) / frame_rate` seconds.
    pub fn duration(&self) -> f64 {
        (self.frames.len() - 1) as f64 / self.frame_rate
    }

    pub fn joint_count(&self) -> usize {
        self.frames[0].rotations.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    Salient,
    Idle,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentKind::Salient => "salient",
            SegmentKind::Idle => "idle",
        })
    }
}

/// A typed time window into a named clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub clip_ref: String,
    pub start_s: f64,
    pub end_s: f64,
    pub kind: SegmentKind,
}

impl Segment {
    pub fn new(clip_ref: impl Into<String>, start_s: f64, end_s: f64, kind: SegmentKind) -> Self {
        Segment { clip_ref: clip_ref.into(), start_s, end_s, kind }
    }

    pub fn salient(clip_ref: impl Into<String>, start_s: f64, end_s: f64) -> Self {
        Segment::new(clip_ref, start_s, end_s, SegmentKind::Salient)
    }

    pub fn idle(clip_ref: impl Into<String>, start_s: f64, end_s: f64) -> Self {
        Segment::new(clip_ref, start_s, end_s, SegmentKind::Idle)
    }

    pub fn length(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Checks ordering and containment in a clip of the given duration.
    pub fn check_range(&self, clip_duration: f64) -> Result<(), String> {
        if !(self.start_s.is_finite() && self.end_s.is_finite()) {
            return Err("segment bounds must be finite".into());
        }
        if self.start_s < 0.0 {
            return Err(format!("segment starts before 0 ({})", self.start_s));
        }
        if self.end_s < self.start_s {
            return Err(format!("segment end {} is before start {}", self.end_s, self.start_s));
        }
        if self.end_s > clip_duration + TIME_SLACK {
            return Err(format!(
                "segment end {} is past the clip duration {}",
                self.end_s, clip_duration
            ));
        }
        Ok(())
    }
}

/// Samples a clip at `t` seconds: exact frames at frame times, otherwise
/// slerp between the surrounding frames with a linear root.
pub fn sample_clip(clip: &Clip, t: f64) -> Result<Pose, AnimError> {
    let duration = clip.duration();
    if !t.is_finite() || t < -TIME_SLACK || t > duration + TIME_SLACK {
        return Err(AnimError::TimeOutOfRange { clip: clip.name.clone(), t, duration });
    }
    let last = clip.frames.len() - 1;
    let pos = (t * clip.frame_rate).max(0.0);
    let nearest = pos.round();
    if (pos - nearest).abs() < FRAME_SNAP {
        return Ok(clip.frames[(nearest as usize).min(last)].clone());
    }
    let i = (pos.floor() as usize).min(last.saturating_sub(1));
    if i >= last {
        return Ok(clip.frames[last].clone());
    }
    let frac = (pos - i as f64).clamp(0.0, 1.0);
    blend_poses(&clip.frames[i], &clip.frames[i + 1], frac)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipStats {
    /// Per joint, radians per second.
    pub angular_velocity: Vec<f64>,
    /// Meters per second.
    pub root_speed: f64,
}

impl ClipStats {
    pub fn max_angular_velocity(&self) -> f64 {
        self.angular_velocity.iter().copied().fold(0.0, f64::max)
    }
}

/// Maximum angular velocity per joint and maximum root speed over
/// consecutive frame pairs. A single-frame clip reports zeros.
pub fn clip_stats(clip: &Clip) -> ClipStats {
    let joints = clip.joint_count();
    let mut angular_velocity = vec![0.0_f64; joints];
    let mut root_speed: f64 = 0.0;
    for pair in clip.frames.windows(2) {
        for (j, w) in angular_velocity.iter_mut().enumerate() {
            let v = pair[0].rotations[j].angle_to(pair[1].rotations[j]) * clip.frame_rate;
            *w = w.max(v);
        }
        let d = pair[0].root_translation.distance(pair[1].root_translation) * clip.frame_rate;
        root_speed = root_speed.max(d);
    }
    ClipStats { angular_velocity, root_speed }
}
