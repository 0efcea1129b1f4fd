//! OSC 1.0 messages with `i`, `f` and `s` arguments. No bundles, no
//! timetags.

use std::fmt;

use shadowstage_core::engine::{Frame, StreamMode};
use thiserror::Error;

#[derive(Debug, Clone)]
pub enum OscArg {
    Int(i32),
    Float(f32),
    Str(String),
}

/// Floats compare by bit pattern so that decode(encode(m)) == m holds for
/// every value, NaN payloads included.
impl PartialEq for OscArg {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (OscArg::Int(a), OscArg::Int(b)) => a == b,
            (OscArg::Float(a), OscArg::Float(b)) => a.to_bits() == b.to_bits(),
            (OscArg::Str(a), OscArg::Str(b)) => a == b,
            _ => false,
        }
    }
}

impl OscArg {
    fn tag(&self) -> u8 {
        match self {
            OscArg::Int(_) => b'i',
            OscArg::Float(_) => b'f',
            OscArg::Str(_) => b's',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscMessage {
    pub address: String,
    pub args: Vec<OscArg>,
}

impl OscMessage {
    pub fn new(address: impl Into<String>, args: Vec<OscArg>) -> Self {
        OscMessage { address: address.into(), args }
    }
}

impl fmt::Display for OscMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.address)?;
        for a in &self.args {
            match a {
                OscArg::Int(v) => write!(f, " {v}")?,
                OscArg::Float(v) => write!(f, " {v:?}")?,
                OscArg::Str(v) => write!(f, " {v:?}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OscError {
    #[error("address must start with '/', got {0:?}")]
    BadAddress(String),
    #[error("string contains a NUL byte")]
    EmbeddedNul,
    #[error("truncated")]
    Truncated,
    #[error("bad padding")]
    BadPadding,
    #[error("missing type tag string")]
    MissingTypeTags,
    #[error("unsupported tag '{0}'")]
    UnsupportedTag(char),
    #[error("bundles are not supported")]
    Bundle,
    #[error("string is not UTF-8")]
    NotUtf8,
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
}

fn push_padded_str(out: &mut Vec<u8>, s: &[u8]) {
    out.extend_from_slice(s);
    let pad = 4 - s.len() % 4;
    out.extend(std::iter::repeat_n(0, pad));
}

pub fn encode_osc(msg: &OscMessage) -> Result<Vec<u8>, OscError> {
    if !msg.address.starts_with('/') {
        return Err(OscError::BadAddress(msg.address.clone()));
    }
    if msg.address.contains('\0') {
        return Err(OscError::EmbeddedNul);
    }
    let mut out = Vec::with_capacity(msg.address.len() + 8 + msg.args.len() * 5);
    push_padded_str(&mut out, msg.address.as_bytes());
    let mut tags = Vec::with_capacity(msg.args.len() + 1);
    tags.push(b',');
    tags.extend(msg.args.iter().map(OscArg::tag));
    push_padded_str(&mut out, &tags);
    for a in &msg.args {
        match a {
            OscArg::Int(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Float(v) => out.extend_from_slice(&v.to_bits().to_be_bytes()),
            OscArg::Str(s) => {
                if s.contains('\0') {
                    return Err(OscError::EmbeddedNul);
                }
                push_padded_str(&mut out, s.as_bytes());
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn string(&mut self) -> Result<&'a [u8], OscError> {
        let rest = &self.buf[self.pos..];
        let len = rest.iter().position(|&b| b == 0).ok_or(OscError::Truncated)?;
        let padded = (len / 4 + 1) * 4;
        let block = rest.get(..padded).ok_or(OscError::Truncated)?;
        if block[len..].iter().any(|&b| b != 0) {
            return Err(OscError::BadPadding);
        }
        self.pos += padded;
        Ok(&block[..len])
    }

    fn word(&mut self) -> Result<[u8; 4], OscError> {
        let w = self.buf.get(self.pos..self.pos + 4).ok_or(OscError::Truncated)?;
        self.pos += 4;
        Ok([w[0], w[1], w[2], w[3]])
    }
}

/// Total: any byte sequence gives a message or an error.
pub fn decode_osc(bytes: &[u8]) -> Result<OscMessage, OscError> {
    if bytes.is_empty() {
        return Err(OscError::Truncated);
    }
    if bytes.len() % 4 != 0 {
        return Err(if bytes.len() < 4 { OscError::Truncated } else { OscError::BadPadding });
    }
    if bytes.starts_with(b"#bundle\0") {
        return Err(OscError::Bundle);
    }
    let mut r = Reader { buf: bytes, pos: 0 };
    let address = r.string()?;
    if address.first() != Some(&b'/') {
        return Err(OscError::BadAddress(String::from_utf8_lossy(address).into_owned()));
    }
    let address = std::str::from_utf8(address).map_err(|_| OscError::NotUtf8)?.to_string();
    if r.pos == bytes.len() {
        return Err(OscError::MissingTypeTags);
    }
    let tags = r.string()?;
    let Some((b',', tags)) = tags.split_first() else {
        return Err(OscError::MissingTypeTags);
    };
    let mut args = Vec::with_capacity(tags.len());
    for &t in tags {
        args.push(match t {
            b'i' => OscArg::Int(i32::from_be_bytes(r.word()?)),
            b'f' => OscArg::Float(f32::from_bits(u32::from_be_bytes(r.word()?))),
            b's' => {
                let s = r.string()?;
                OscArg::Str(std::str::from_utf8(s).map_err(|_| OscError::NotUtf8)?.to_string())
            }
            other => return Err(OscError::UnsupportedTag(other as char)),
        });
    }
    if r.pos != bytes.len() {
        return Err(OscError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(OscMessage { address, args })
}

/// Messages for one frame: `/avatar/<name>/pose` carries
/// `[tick, tx, ty, tz, w x y z per joint]`; `/avatar/<name>/points` carries
/// `[tick, x y z per joint]` and is only sent when the frame has points.
pub fn frame_to_messages(frame: &Frame, mode: StreamMode) -> Vec<OscMessage> {
    let tick = frame.tick as i32;
    let mut out = Vec::with_capacity(frame.characters.len() * 2);
    for c in &frame.characters {
        if mode.wants_pose() {
            let r = c.pose.root_translation;
            let mut args = Vec::with_capacity(4 + 4 * c.pose.rotations.len());
            args.push(OscArg::Int(tick));
            args.extend([r.x, r.y, r.z].map(|v| OscArg::Float(v as f32)));
            for q in &c.pose.rotations {
                args.extend([q.w, q.x, q.y, q.z].map(|v| OscArg::Float(v as f32)));
            }
            out.push(OscMessage::new(format!("/avatar/{}/pose", c.name), args));
        }
        if mode.wants_points() {
            if let Some(points) = &c.points {
                let mut args = Vec::with_capacity(1 + 3 * points.len());
                args.push(OscArg::Int(tick));
                for p in points {
                    args.extend([p.x, p.y, p.z].map(|v| OscArg::Float(v as f32)));
                }
                out.push(OscMessage::new(format!("/avatar/{}/points", c.name), args));
            }
        }
    }
    out
}
