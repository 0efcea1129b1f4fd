//! Cue-driven avatar performance engine.
//!
//! Recorded clips are cut into salient gestures and idle segments, arranged
//! on a cue sheet and fired live. Each character's player plays its salient
//! once, then holds an endless forward/reverse idle loop until the next cue.
//! The engine runs on a fixed integer tick clock, retargets every pose onto
//! the character's avatar skeleton and emits one [`engine::Frame`] per tick.

pub mod anim;
pub mod canon;
pub mod cuesheet;
pub mod engine;
pub mod motion_io;
pub mod retarget;
pub mod sip;
