//! BVH 1.0 reading and writing.
//!
//! Offsets and positions are taken as meters. `End Site` blocks become
//! channel-less leaf joints named `<parent>_End`. Position channels are only
//! accepted on the root, and each joint carries either no rotation channels
//! or all three axes in some order.

use std::fmt::{self, Write};

use thiserror::Error;

use crate::anim::{
    euler_to_quat, quat_to_euler, Axis, Clip, Joint, Pose, Quat, RotationOrder, Skeleton, Vec3,
};

use super::MotionFile;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct BvhError {
    pub line: usize,
    pub kind: BvhErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BvhErrorKind {
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEof(String),
    #[error("unbalanced braces: {0}")]
    UnbalancedBraces(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("unsupported channel layout on joint `{joint}`: {message}")]
    UnsupportedChannels { joint: String, message: String },
    #[error("invalid number `{0}`")]
    BadNumber(String),
    #[error("duplicate joint name `{0}`")]
    DuplicateJoint(String),
    #[error("frame row has {found} values, expected {expected}")]
    RowValueCount { expected: usize, found: usize },
    #[error("MOTION section declares {declared} frames but has {actual} rows")]
    FrameCountMismatch { declared: usize, actual: usize },
    #[error("frame time must be positive, got {0}")]
    BadFrameTime(f64),
    #[error("invalid motion data: {0}")]
    InvalidMotion(String),
}

fn err(line: usize, kind: BvhErrorKind) -> BvhError {
    BvhError { line, kind }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Position(Axis),
    Rotation(Axis),
}

impl Channel {
    fn parse(s: &str) -> Option<Channel> {
        let lower = s.to_ascii_lowercase();
        let mut chars = lower.chars();
        let axis = match chars.next() {
            Some('x') => Axis::X,
            Some('y') => Axis::Y,
            Some('z') => Axis::Z,
            _ => return None,
        };
        let rest = chars.as_str();
        match rest {
            "position" => Some(Channel::Position(axis)),
            "rotation" => Some(Channel::Rotation(axis)),
            _ => None,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Position(a) => write!(f, "{}position", a.letter()),
            Channel::Rotation(a) => write!(f, "{}rotation", a.letter()),
        }
    }
}

struct Token<'a> {
    line: usize,
    text: &'a str,
}

struct Tokens<'a> {
    items: Vec<Token<'a>>,
    pos: usize,
    eof_line: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, expected: &str) -> Result<&Token<'a>, BvhError> {
        match self.items.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(err(self.eof_line, BvhErrorKind::UnexpectedEof(expected.into()))),
        }
    }

    fn expect(&mut self, word: &str) -> Result<usize, BvhError> {
        let t = self.next(&format!("`{word}`"))?;
        if t.text == word {
            Ok(t.line)
        } else {
            Err(err(
                t.line,
                BvhErrorKind::Expected { expected: format!("`{word}`"), found: t.text.into() },
            ))
        }
    }

    fn number(&mut self) -> Result<f64, BvhError> {
        let t = self.next("a number")?;
        parse_number(t.text, t.line)
    }
}

fn parse_number(s: &str, line: usize) -> Result<f64, BvhError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err(line, BvhErrorKind::BadNumber(s.into()))),
    }
}

/// Splits on whitespace, keeping braces as their own tokens.
fn split_tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split_whitespace().flat_map(|w| {
        let mut parts = Vec::new();
        let mut start = 0;
        for (i, c) in w.char_indices() {
            if c == '{' || c == '}' {
                if start < i {
                    parts.push(&w[start..i]);
                }
                parts.push(&w[i..i + 1]);
                start = i + 1;
            }
        }
        if start < w.len() {
            parts.push(&w[start..]);
        }
        parts
    })
}

struct ParsedJoint {
    joint: Joint,
    channels: Vec<Channel>,
    line: usize,
}

/// Parses BVH text. `name` becomes both the skeleton and the clip name.
pub fn parse_bvh(text: &str, name: &str) -> Result<MotionFile, BvhError> {
    let lines: Vec<&str> = text.lines().collect();
    let motion_idx = lines.iter().position(|l| l.split_whitespace().next() == Some("MOTION"));
    let hierarchy_end = motion_idx.unwrap_or(lines.len());

    let mut items = Vec::new();
    for (i, l) in lines[..hierarchy_end].iter().enumerate() {
        items.extend(split_tokens(l).map(|text| Token { line: i + 1, text }));
    }
    let mut toks = Tokens { items, pos: 0, eof_line: hierarchy_end + 1 };
    let mut joints = parse_hierarchy(&mut toks)?;
    if let Some(extra) = toks.items.get(toks.pos) {
        let kind = if extra.text == "}" {
            BvhErrorKind::UnbalancedBraces("`}` without a matching `{`".into())
        } else {
            BvhErrorKind::Expected { expected: "`MOTION`".into(), found: extra.text.into() }
        };
        return Err(err(extra.line, kind));
    }
    let Some(motion_idx) = motion_idx else {
        return Err(err(lines.len() + 1, BvhErrorKind::UnexpectedEof("`MOTION`".into())));
    };

    let (rotation_slots, position_slots) = channel_layout(&mut joints)?;
    let channel_total: usize = joints.iter().map(|j| j.channels.len()).sum();
    let skeleton = Skeleton::new(name, joints.iter().map(|p| p.joint.clone()).collect())
        .map_err(|e| err(1, BvhErrorKind::InvalidMotion(e.to_string())))?;

    // MOTION section, line oriented.
    let mut rest = lines.iter().enumerate().skip(motion_idx + 1).filter(|(_, l)| !l.trim().is_empty());
    let (frames_line, declared) = {
        let (i, l) = rest
            .next()
            .ok_or_else(|| err(motion_idx + 2, BvhErrorKind::UnexpectedEof("`Frames:`".into())))?;
        let v = l.trim().strip_prefix("Frames:").ok_or_else(|| {
            err(i + 1, BvhErrorKind::Expected { expected: "`Frames:`".into(), found: l.trim().into() })
        })?;
        let v = v.trim();
        let n = v.parse::<usize>().map_err(|_| err(i + 1, BvhErrorKind::BadNumber(v.into())))?;
        (i + 1, n)
    };
    let frame_time = {
        let (i, l) = rest
            .next()
            .ok_or_else(|| err(frames_line + 1, BvhErrorKind::UnexpectedEof("`Frame Time:`".into())))?;
        let v = l.trim().strip_prefix("Frame Time:").ok_or_else(|| {
            err(i + 1, BvhErrorKind::Expected { expected: "`Frame Time:`".into(), found: l.trim().into() })
        })?;
        let ft = parse_number(v.trim(), i + 1)?;
        if ft <= 0.0 {
            return Err(err(i + 1, BvhErrorKind::BadFrameTime(ft)));
        }
        ft
    };

    let mut frames = Vec::with_capacity(declared.min(1 << 16));
    let root_offset = skeleton.root().rest_offset;
    let mut values = Vec::with_capacity(channel_total);
    for (i, l) in rest {
        values.clear();
        for w in l.split_whitespace() {
            values.push(parse_number(w, i + 1)?);
        }
        if values.len() != channel_total {
            return Err(err(
                i + 1,
                BvhErrorKind::RowValueCount { expected: channel_total, found: values.len() },
            ));
        }
        let root_translation = match position_slots {
            Some(p) => Vec3::new(values[p[0]], values[p[1]], values[p[2]]),
            None => root_offset,
        };
        let rotations = joints
            .iter()
            .zip(&rotation_slots)
            .map(|(j, slots)| match slots {
                Some(s) => euler_to_quat(
                    j.joint.rotation_order,
                    [values[s[0]].to_radians(), values[s[1]].to_radians(), values[s[2]].to_radians()],
                )
                .canonical(),
                None => Quat::IDENTITY,
            })
            .collect();
        frames.push(Pose::new(root_translation, rotations));
    }
    if frames.len() != declared {
        return Err(err(
            frames_line,
            BvhErrorKind::FrameCountMismatch { declared, actual: frames.len() },
        ));
    }
    let clip = Clip::new(name, &skeleton, frame_rate(frame_time), frames)
        .map_err(|e| err(frames_line, BvhErrorKind::InvalidMotion(e.to_string())))?;
    Ok(MotionFile { skeleton, clip, source_path: String::new() })
}

/// Exporters print frame times to a handful of digits (`0.0333333`); rates
/// that land within ten parts per million of a whole number are taken as exact.
fn frame_rate(frame_time: f64) -> f64 {
    let rate = 1.0 / frame_time;
    let whole = rate.round();
    if whole >= 1.0 && (rate - whole).abs() <= 1e-5 * whole {
        whole
    } else {
        rate
    }
}

fn parse_hierarchy(toks: &mut Tokens<'_>) -> Result<Vec<ParsedJoint>, BvhError> {
    toks.expect("HIERARCHY")?;
    let line = toks.expect("ROOT")?;
    let name = toks.next("a joint name")?.text.to_string();
    toks.expect("{")?;
    let mut joints = vec![ParsedJoint { joint: Joint::new(name, None, Vec3::ZERO), channels: vec![], line }];
    let mut open: Vec<usize> = vec![0];

    while let Some(&top) = open.last() {
        let t = toks.next("`}`").map_err(|e| {
            err(e.line, BvhErrorKind::UnbalancedBraces(format!("{} block(s) left open", open.len())))
        })?;
        let line = t.line;
        match t.text {
            "OFFSET" => {
                let v = Vec3::new(toks.number()?, toks.number()?, toks.number()?);
                joints[top].joint.rest_offset = v;
            }
            "CHANNELS" => {
                let c = toks.next("a channel count")?;
                let n: usize =
                    c.text.parse().map_err(|_| err(c.line, BvhErrorKind::BadNumber(c.text.into())))?;
                if joints[top].joint.end_site {
                    return Err(err(
                        line,
                        BvhErrorKind::UnsupportedChannels {
                            joint: joints[top].joint.name.clone(),
                            message: "End Site cannot carry channels".into(),
                        },
                    ));
                }
                let mut chans = Vec::with_capacity(n.min(6));
                for _ in 0..n {
                    let c = toks.next("a channel name")?;
                    let ch = Channel::parse(c.text)
                        .ok_or_else(|| err(c.line, BvhErrorKind::UnknownChannel(c.text.into())))?;
                    chans.push(ch);
                }
                joints[top].channels = chans;
            }
            "JOINT" => {
                let name = toks.next("a joint name")?.text.to_string();
                toks.expect("{")?;
                push_joint(&mut joints, Joint::new(name, Some(top), Vec3::ZERO), line)?;
                open.push(joints.len() - 1);
            }
            "End" => {
                toks.expect("Site")?;
                toks.expect("{")?;
                let base = format!("{}_End", joints[top].joint.name);
                let mut name = base.clone();
                let mut k = 2;
                while joints.iter().any(|j| j.joint.name == name) {
                    name = format!("{base}{k}");
                    k += 1;
                }
                push_joint(&mut joints, Joint::new(name, Some(top), Vec3::ZERO).end_site(), line)?;
                open.push(joints.len() - 1);
            }
            "}" => {
                open.pop();
            }
            "{" => {
                return Err(err(line, BvhErrorKind::UnbalancedBraces("`{` without a joint".into())))
            }
            other => {
                return Err(err(
                    line,
                    BvhErrorKind::Expected {
                        expected: "`OFFSET`, `CHANNELS`, `JOINT`, `End Site` or `}`".into(),
                        found: other.into(),
                    },
                ))
            }
        }
    }
    Ok(joints)
}

fn push_joint(joints: &mut Vec<ParsedJoint>, joint: Joint, line: usize) -> Result<(), BvhError> {
    if joints.iter().any(|j| j.joint.name == joint.name) {
        return Err(err(line, BvhErrorKind::DuplicateJoint(joint.name)));
    }
    joints.push(ParsedJoint { joint, channels: vec![], line });
    Ok(())
}

type Slots = [usize; 3];

/// Resolves every joint's rotation channels into a rotation order and the
/// row indices of its three angles; also the root's position indices.
fn channel_layout(
    joints: &mut [ParsedJoint],
) -> Result<(Vec<Option<Slots>>, Option<Slots>), BvhError> {
    let mut rotation_slots = Vec::with_capacity(joints.len());
    let mut position_slots = None;
    let mut offset = 0;
    for (idx, pj) in joints.iter_mut().enumerate() {
        let unsupported = |message: &str| {
            err(
                pj.line,
                BvhErrorKind::UnsupportedChannels {
                    joint: pj.joint.name.clone(),
                    message: message.into(),
                },
            )
        };
        let mut rot: Vec<(Axis, usize)> = Vec::new();
        let mut pos: Vec<(Axis, usize)> = Vec::new();
        for (k, c) in pj.channels.iter().enumerate() {
            match c {
                Channel::Rotation(a) => rot.push((*a, offset + k)),
                Channel::Position(a) => pos.push((*a, offset + k)),
            }
        }
        offset += pj.channels.len();

        if !pos.is_empty() {
            if idx != 0 {
                return Err(unsupported("position channels are only supported on the root"));
            }
            position_slots = Some(axis_slots(&pos).ok_or_else(|| {
                unsupported("root position channels must name X, Y and Z exactly once")
            })?);
        }
        if rot.is_empty() {
            rotation_slots.push(None);
            continue;
        }
        let order = RotationOrder::from_axes(
            <[Axis; 3]>::try_from(rot.iter().map(|r| r.0).collect::<Vec<_>>())
                .map_err(|_| unsupported("rotation channels must name X, Y and Z exactly once"))?,
        )
        .ok_or_else(|| unsupported("rotation channels must name X, Y and Z exactly once"))?;
        pj.joint.rotation_order = order;
        rotation_slots.push(Some([rot[0].1, rot[1].1, rot[2].1]));
    }
    Ok((rotation_slots, position_slots))
}

fn axis_slots(items: &[(Axis, usize)]) -> Option<Slots> {
    if items.len() != 3 {
        return None;
    }
    let mut out = [usize::MAX; 3];
    for (a, i) in items {
        if out[a.index()] != usize::MAX {
            return None;
        }
        out[a.index()] = *i;
    }
    Some(out)
}

/// Canonical BVH text: root with six channels, three rotation channels per
/// joint in its rotation order, shortest round-trip number formatting.
pub fn write_bvh(mf: &MotionFile) -> String {
    let skel = &mf.skeleton;
    let n = skel.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j) in skel.joints().iter().enumerate() {
        if let Some(p) = j.parent {
            children[p].push(i);
        }
    }
    let is_end = |i: usize| i != 0 && skel.joints()[i].end_site && children[i].is_empty();

    let mut out = String::from("HIERARCHY\n");
    let mut order = Vec::with_capacity(n);
    // (joint, depth, closing)
    let mut stack: Vec<(usize, usize, bool)> = vec![(0, 0, false)];
    while let Some((i, depth, closing)) = stack.pop() {
        let pad = "\t".repeat(depth);
        if closing {
            let _ = writeln!(out, "{pad}}}");
            continue;
        }
        let j = &skel.joints()[i];
        let o = j.rest_offset;
        if is_end(i) {
            let _ = writeln!(out, "{pad}End Site\n{pad}{{");
            let _ = writeln!(out, "{pad}\tOFFSET {} {} {}", o.x, o.y, o.z);
            let _ = writeln!(out, "{pad}}}");
            continue;
        }
        order.push(i);
        let kw = if i == 0 { "ROOT" } else { "JOINT" };
        let _ = writeln!(out, "{pad}{kw} {}\n{pad}{{", j.name);
        let _ = writeln!(out, "{pad}\tOFFSET {} {} {}", o.x, o.y, o.z);
        let rot: Vec<String> = j
            .rotation_order
            .axes()
            .iter()
            .map(|a| Channel::Rotation(*a).to_string())
            .collect();
        if i == 0 {
            let _ = writeln!(out, "{pad}\tCHANNELS 6 Xposition Yposition Zposition {}", rot.join(" "));
        } else {
            let _ = writeln!(out, "{pad}\tCHANNELS 3 {}", rot.join(" "));
        }
        stack.push((i, depth, true));
        for &c in children[i].iter().rev() {
            stack.push((c, depth + 1, false));
        }
    }

    let frames = mf.clip.frames();
    let _ = writeln!(out, "MOTION\nFrames: {}\nFrame Time: {}", frames.len(), 1.0 / mf.clip.frame_rate());
    for f in frames {
        let t = f.root_translation;
        let mut row = format!("{} {} {}", t.x, t.y, t.z);
        for &i in &order {
            let ord = skel.joints()[i].rotation_order;
            for a in quat_to_euler(ord, f.rotations[i]) {
                let _ = write!(row, " {}", a.to_degrees());
            }
        }
        out.push_str(&row);
        out.push('\n');
    }
    out
}
