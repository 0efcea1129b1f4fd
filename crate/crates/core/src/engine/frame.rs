use std::fmt::Write;

use crate::anim::{Pose, Vec3};
use crate::canon::push_float;
use crate::sip::PlayerMode;

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterFrame {
    pub name: String,
    pub mode: PlayerMode,
    /// On the character's avatar skeleton.
    pub pose: Pose,
    /// World joint positions, projected onto the shadow plane when one is
    /// configured.
    pub points: Option<Vec<Vec3>>,
}

/// One tick of output: every declared character, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub tick: i64,
    pub time_s: f64,
    pub characters: Vec<CharacterFrame>,
}

impl Frame {
    pub fn character(&self, name: &str) -> Option<&CharacterFrame> {
        self.characters.iter().find(|c| c.name == name)
    }

    /// One line, no trailing newline:
    ///
    /// `F <tick> <time> | <name> <mode> tx ty tz w x y z ... [P x y z ...] | ...`
    pub fn write_canonical(&self, out: &mut String) {
        let _ = write!(out, "F {} ", self.tick);
        push_float(out, self.time_s);
        for c in &self.characters {
            let _ = write!(out, " | {} {}", c.name, c.mode);
            for v in c.pose.root_translation.to_array() {
                out.push(' ');
                push_float(out, v);
            }
            for q in &c.pose.rotations {
                for v in [q.w, q.x, q.y, q.z] {
                    out.push(' ');
                    push_float(out, v);
                }
            }
            if let Some(points) = &c.points {
                out.push_str(" P");
                for p in points {
                    for v in p.to_array() {
                        out.push(' ');
                        push_float(out, v);
                    }
                }
            }
        }
    }

    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        self.write_canonical(&mut s);
        s
    }
}
