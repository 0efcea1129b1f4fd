//! The salient/idle player.
//!
//! Each character owns a [`PlayerState`]. Firing a [`SalientIdleCue`]
//! crossfades from whatever the character was doing into the first frame of
//! the salient segment, plays the salient once at its play rate, crossfades
//! into the idle segment and then loops the idle forward and backward until
//! the next cue arrives. Cues may arrive at any time, including in the middle
//! of a salient or of another crossfade.
//!
//! States are plain values. [`PlayerState::evaluate`] is a pure function of
//! the state and the time, so evaluating twice at the same instant yields
//! bitwise identical poses.

mod phase;
mod time;

pub use phase::idle_phase;
pub use time::ShowTime;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anim::{blend_poses, sample_clip, AnimError, Pose, Segment, SegmentKind, Skeleton};
use crate::motion_io::ClipLibrary;
use crate::retarget::RetargetError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SipError {
    #[error("unknown clip `{0}`")]
    UnknownClip(String),
    #[error(transparent)]
    Anim(#[from] AnimError),
    #[error(transparent)]
    Retarget(#[from] RetargetError),
    #[error("invalid cue for `{character}`: {message}")]
    InvalidCue { character: String, message: String },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
}

/// Weight curve applied to every crossfade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlendCurve {
    #[default]
    Linear,
    Smoothstep,
}

impl BlendCurve {
    pub fn apply(self, w: f64) -> f64 {
        let w = w.clamp(0.0, 1.0);
        match self {
            BlendCurve::Linear => w,
            BlendCurve::Smoothstep => w * w * (3.0 - 2.0 * w),
        }
    }
}

/// One `SetSalientIdle` instruction for a single character.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalientIdleCue {
    pub character: String,
    pub salient: Segment,
    pub idle: Segment,
    pub rate_salient: f64,
    pub rate_idle: f64,
    /// Crossfade from the current output into the salient's first frame.
    pub xfade_in: f64,
    /// Crossfade from the salient's tail into the idle loop.
    pub xfade_salient_to_idle: f64,
    /// Easing window around each turning point of the idle loop.
    pub xfade_turnaround: f64,
}

/// A parameter clamped to fit the segment it applies to.
#[derive(Debug, Clone, PartialEq)]
pub struct Clamped {
    pub param: &'static str,
    pub requested: f64,
    pub clamped_to: f64,
}

impl SalientIdleCue {
    pub fn salient_wall_duration(&self) -> f64 {
        self.salient.length() / self.rate_salient
    }

    pub fn idle_leg_duration(&self) -> f64 {
        self.idle.length() / self.rate_idle
    }

    /// Shape checks that need no clip data.
    pub fn check(&self) -> Result<(), SipError> {
        let bad = |m: String| SipError::InvalidCue { character: self.character.clone(), message: m };
        if self.salient.kind != SegmentKind::Salient {
            return Err(bad("salient segment is not of kind salient".into()));
        }
        if self.idle.kind != SegmentKind::Idle {
            return Err(bad("idle segment is not of kind idle".into()));
        }
        for (name, v) in [("rate", self.rate_salient), ("irate", self.rate_idle)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [
            ("in", self.xfade_in),
            ("xfade", self.xfade_salient_to_idle),
            ("loopxfade", self.xfade_turnaround),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(format!("{name} must be non-negative and finite, got {v}")));
            }
        }
        for seg in [&self.salient, &self.idle] {
            if !(seg.start_s.is_finite() && seg.end_s.is_finite()) || seg.end_s < seg.start_s {
                return Err(bad(format!(
                    "{} segment [{}:{}] ends before it starts",
                    seg.kind, seg.start_s, seg.end_s
                )));
            }
        }
        Ok(())
    }

    /// Clamps the salient-to-idle crossfade to the salient's wall duration and
    /// the turnaround window to the idle leg duration.
    pub fn clamped(&self) -> (SalientIdleCue, Vec<Clamped>) {
        let mut out = self.clone();
        let mut notes = Vec::new();
        let wall = self.salient_wall_duration();
        if self.xfade_salient_to_idle > wall {
            out.xfade_salient_to_idle = wall;
            notes.push(Clamped { param: "xfade", requested: self.xfade_salient_to_idle, clamped_to: wall });
        }
        let leg = self.idle_leg_duration();
        if self.xfade_turnaround > leg {
            out.xfade_turnaround = leg;
            notes.push(Clamped { param: "loopxfade", requested: self.xfade_turnaround, clamped_to: leg });
        }
        (out, notes)
    }
}

/// Cuts a salient into a shorter salient, an idle and a second salient.
pub fn split_salient(
    seg: &Segment,
    cut_in: f64,
    cut_out: f64,
) -> Result<(Segment, Segment, Segment), SipError> {
    if seg.kind != SegmentKind::Salient {
        return Err(SipError::InvalidSplit("only salient segments can be split".into()));
    }
    if !(cut_in.is_finite() && cut_out.is_finite()) {
        return Err(SipError::InvalidSplit("cut points must be finite".into()));
    }
    if !(seg.start_s <= cut_in && cut_in <= cut_out && cut_out <= seg.end_s) {
        return Err(SipError::InvalidSplit(format!(
            "cuts {cut_in}:{cut_out} must be ordered within [{}:{}]",
            seg.start_s, seg.end_s
        )));
    }
    Ok((
        Segment::salient(&seg.clip_ref, seg.start_s, cut_in),
        Segment::idle(&seg.clip_ref, cut_in, cut_out),
        Segment::salient(&seg.clip_ref, cut_out, seg.end_s),
    ))
}

/// Where a player gets poses from, already expressed on the skeleton the
/// player outputs.
pub trait PoseSource {
    fn sample(&self, clip: &str, t: f64) -> Result<Pose, SipError>;
    fn rest(&self) -> Pose;
}

/// Samples a library directly, without retargeting.
pub struct LibrarySource<'a> {
    library: &'a ClipLibrary,
    rest: Pose,
}

impl<'a> LibrarySource<'a> {
    pub fn new(library: &'a ClipLibrary, skeleton: &Skeleton) -> Self {
        LibrarySource { library, rest: Pose::rest(skeleton) }
    }
}

impl PoseSource for LibrarySource<'_> {
    fn sample(&self, clip: &str, t: f64) -> Result<Pose, SipError> {
        let c = self.library.clip(clip).ok_or_else(|| SipError::UnknownClip(clip.into()))?;
        Ok(sample_clip(c, t)?)
    }

    fn rest(&self) -> Pose {
        self.rest.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlayerMode {
    Empty,
    TransferIn,
    Salient,
    IdleLoop,
}

impl PlayerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PlayerMode::Empty => "empty",
            PlayerMode::TransferIn => "transfer",
            PlayerMode::Salient => "salient",
            PlayerMode::IdleLoop => "idle",
        }
    }
}

impl fmt::Display for PlayerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum PlayerState {
    /// Nothing fired yet: rest pose.
    #[default]
    Empty,
    /// Blending from `previous` (still running) into the salient's first frame.
    TransferIn { cue: Arc<SalientIdleCue>, started_at: ShowTime, previous: Box<PlayerState> },
    /// Salient playback; `started_at` is when the salient's first frame shows.
    Salient { cue: Arc<SalientIdleCue>, started_at: ShowTime },
    IdleLoop { cue: Arc<SalientIdleCue>, loop_started_at: ShowTime },
}

impl PlayerState {
    pub fn mode(&self) -> PlayerMode {
        match self {
            PlayerState::Empty => PlayerMode::Empty,
            PlayerState::TransferIn { .. } => PlayerMode::TransferIn,
            PlayerState::Salient { .. } => PlayerMode::Salient,
            PlayerState::IdleLoop { .. } => PlayerMode::IdleLoop,
        }
    }

    pub fn cue(&self) -> Option<&Arc<SalientIdleCue>> {
        match self {
            PlayerState::Empty => None,
            PlayerState::TransferIn { cue, .. }
            | PlayerState::Salient { cue, .. }
            | PlayerState::IdleLoop { cue, .. } => Some(cue),
        }
    }

    /// Fires `cue` at `now`. The outgoing program keeps running underneath the
    /// transfer; a zero `xfade_in` cuts straight to the salient.
    pub fn apply_cue(self, cue: Arc<SalientIdleCue>, now: ShowTime) -> PlayerState {
        if cue.xfade_in <= 0.0 {
            return PlayerState::Salient { cue, started_at: now };
        }
        PlayerState::TransferIn { cue, started_at: now, previous: Box::new(self.settle(now)) }
    }

    /// Advances through any transitions due by `t`. Evaluation does not
    /// depend on this; it only keeps `mode()` current and drops finished
    /// transfers.
    pub fn settle(self, t: ShowTime) -> PlayerState {
        match self {
            PlayerState::TransferIn { cue, started_at, previous } => {
                let salient_start = started_at.add_secs(cue.xfade_in);
                if t >= salient_start {
                    PlayerState::Salient { cue, started_at: salient_start }.settle(t)
                } else {
                    PlayerState::TransferIn { cue, started_at, previous: Box::new(previous.settle(t)) }
                }
            }
            PlayerState::Salient { cue, started_at } => {
                let end = started_at.add_secs(cue.salient_wall_duration());
                if t >= end {
                    PlayerState::IdleLoop { cue, loop_started_at: end }
                } else {
                    PlayerState::Salient { cue, started_at }
                }
            }
            s => s,
        }
    }

    pub fn evaluate<S: PoseSource + ?Sized>(
        &self,
        t: ShowTime,
        src: &S,
        curve: BlendCurve,
    ) -> Result<Pose, SipError> {
        match self {
            PlayerState::Empty => Ok(src.rest()),
            PlayerState::TransferIn { cue, started_at, previous } => {
                let salient_start = started_at.add_secs(cue.xfade_in);
                if t >= salient_start {
                    return eval_salient(cue, salient_start, t, src, curve);
                }
                let w = curve.apply(t.secs_since(*started_at) / cue.xfade_in);
                let from = previous.evaluate(t, src, curve)?;
                let to = src.sample(&cue.salient.clip_ref, cue.salient.start_s)?;
                Ok(blend_poses(&from, &to, w)?)
            }
            PlayerState::Salient { cue, started_at } => eval_salient(cue, *started_at, t, src, curve),
            PlayerState::IdleLoop { cue, loop_started_at } => eval_idle(cue, *loop_started_at, t, src),
        }
    }
}

fn eval_salient<S: PoseSource + ?Sized>(
    cue: &SalientIdleCue,
    started_at: ShowTime,
    t: ShowTime,
    src: &S,
    curve: BlendCurve,
) -> Result<Pose, SipError> {
    let wall = cue.salient_wall_duration();
    let end = started_at.add_secs(wall);
    if t >= end {
        return eval_idle(cue, end, t, src);
    }
    let seg = &cue.salient;
    let elapsed = t.secs_since(started_at).max(0.0);
    let clip_time = (seg.start_s + cue.rate_salient * elapsed).clamp(seg.start_s, seg.end_s);
    let pose = src.sample(&seg.clip_ref, clip_time)?;
    let xfade = cue.xfade_salient_to_idle.min(wall);
    if xfade > 0.0 {
        let remaining = end.secs_since(t);
        if remaining < xfade {
            let idle = eval_idle(cue, end, t, src)?;
            let w = curve.apply(1.0 - remaining / xfade);
            return Ok(blend_poses(&pose, &idle, w)?);
        }
    }
    Ok(pose)
}

fn eval_idle<S: PoseSource + ?Sized>(
    cue: &SalientIdleCue,
    loop_started_at: ShowTime,
    t: ShowTime,
    src: &S,
) -> Result<Pose, SipError> {
    let seg = &cue.idle;
    let leg = cue.idle_leg_duration();
    let turnaround = cue.xfade_turnaround.min(leg);
    let u = t.loop_secs_since(loop_started_at, 2.0 * leg);
    let clip_time = idle_phase(u, seg, cue.rate_idle, turnaround);
    src.sample(&seg.clip_ref, clip_time)
}
