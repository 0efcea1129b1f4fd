//! Cue sheets: the text score an operator steps through during a show.
//!
//! ```text
//! # comments run to end of line
//! character Scholar skeleton=scholar texture=grey
//! character Shadow skeleton=shadow texture=black
//!
//! cue 1 "The scholar wakes"
//!   Scholar salient=greet[0.0:2.5] idle=greet[2.5:4.0] rate=1.0 in=0.5
//!   Shadow salient=bow[0.5:2.0] idle=bow[2.0:3.0] \
//!       xfade=0.4 loopxfade=0.3
//! ```
//!
//! Instruction lines are indented and belong to the most recent `cue`.
//! A trailing backslash continues a line. Parameters left out take the
//! defaults in [`Defaults`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::anim::{Segment, SegmentKind, Skeleton};
use crate::canon;
use crate::motion_io::ClipLibrary;
use crate::retarget::build_joint_map;
use crate::sip::SalientIdleCue;

pub struct Defaults;

impl Defaults {
    pub const RATE: f64 = 1.0;
    pub const XFADE: f64 = 0.3;
}

/// Alias tables keyed by character name, each mapping source joint names to
/// avatar joint names.
pub type AliasTable = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterDecl {
    pub name: String,
    pub skeleton_ref: String,
    pub texture_tag: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CueRow {
    /// 1-based.
    pub index: usize,
    pub label: String,
    pub instructions: Vec<SalientIdleCue>,
}

impl CueRow {
    pub fn instruction(&self, character: &str) -> Option<&SalientIdleCue> {
        self.instructions.iter().find(|c| c.character == character)
    }

    pub fn instruction_mut(&mut self, character: &str) -> Option<&mut SalientIdleCue> {
        self.instructions.iter_mut().find(|c| c.character == character)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CueSheet {
    pub characters: Vec<CharacterDecl>,
    pub rows: Vec<CueRow>,
}

impl CueSheet {
    pub fn character(&self, name: &str) -> Option<&CharacterDecl> {
        self.characters.iter().find(|c| c.name == name)
    }

    pub fn row(&self, index: usize) -> Option<&CueRow> {
        index.checked_sub(1).and_then(|i| self.rows.get(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    line: usize,
    column: usize,
    quoted: bool,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, column, message: message.into() }
}

fn tok_err(t: &Token, message: impl Into<String>) -> ParseError {
    err(t.line, t.column, message)
}

/// Splits one physical line into tokens, dropping comments. Returns the
/// tokens and whether the line ends in a continuation backslash.
fn tokenize(line: &str, lineno: usize) -> Result<(Vec<Token>, bool), ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    let mut continued = false;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let column = i + 1;
        if c == '"' {
            let mut text = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err(lineno, column, "unterminated string")),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some(&e @ ('"' | '\\')) => text.push(e),
                            _ => return Err(err(lineno, i + 1, "bad escape in string")),
                        }
                        i += 2;
                    }
                    Some(&ch) => {
                        text.push(ch);
                        i += 1;
                    }
                }
            }
            tokens.push(Token { text, line: lineno, column, quoted: true });
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '#' {
            if chars[i] == '"' {
                return Err(err(lineno, i + 1, "unexpected quote"));
            }
            i += 1;
        }
        let text: String = chars[start..i].iter().collect();
        if text == "\\" {
            let rest: String = chars[i..].iter().collect();
            let rest = rest.trim_start();
            if !(rest.is_empty() || rest.starts_with('#')) {
                return Err(err(lineno, column, "continuation backslash must end the line"));
            }
            continued = true;
            break;
        }
        tokens.push(Token { text, line: lineno, column, quoted: false });
    }
    Ok((tokens, continued))
}

struct LogicalLine {
    indented: bool,
    tokens: Vec<Token>,
    line: usize,
}

fn logical_lines(text: &str) -> Result<Vec<LogicalLine>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Option<LogicalLine> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let (tokens, continued) = tokenize(raw, lineno)?;
        let current = match pending.take() {
            Some(mut l) => {
                l.tokens.extend(tokens);
                l
            }
            None => {
                if tokens.is_empty() && !continued {
                    continue;
                }
                let indented = raw.starts_with(|c: char| c.is_whitespace());
                LogicalLine { indented, tokens, line: lineno }
            }
        };
        if continued {
            pending = Some(current);
        } else if !current.tokens.is_empty() {
            out.push(current);
        }
    }
    if pending.is_some() {
        return Err(err(last_line, 1, "continuation at end of file"));
    }
    Ok(out)
}

fn key_value(t: &Token) -> Result<(&str, &str), ParseError> {
    if t.quoted {
        return Err(tok_err(t, "expected key=value"));
    }
    t.text
        .split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| tok_err(t, format!("expected key=value, found `{}`", t.text)))
}

fn number(t: &Token, key: &str, v: &str) -> Result<f64, ParseError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(tok_err(t, format!("`{key}` expects a finite number, found `{v}`"))),
    }
}

/// `clip[start:end]`
fn segment(t: &Token, key: &str, v: &str, kind: SegmentKind) -> Result<Segment, ParseError> {
    let bad = || tok_err(t, format!("`{key}` expects clip[start:end], found `{v}`"));
    let (clip, rest) = v.split_once('[').ok_or_else(bad)?;
    let inner = rest.strip_suffix(']').ok_or_else(bad)?;
    let (a, b) = inner.split_once(':').ok_or_else(bad)?;
    if clip.is_empty() {
        return Err(bad());
    }
    let a = number(t, key, a)?;
    let b = number(t, key, b)?;
    Ok(Segment::new(clip, a, b, kind))
}

fn parse_character(line: &LogicalLine) -> Result<CharacterDecl, ParseError> {
    let head = &line.tokens[0];
    let name = line
        .tokens
        .get(1)
        .filter(|t| !t.quoted && !t.text.contains('='))
        .ok_or_else(|| tok_err(head, "`character` needs a name"))?;
    let mut skeleton = None;
    let mut texture = None;
    for t in &line.tokens[2..] {
        let (k, v) = key_value(t)?;
        let slot = match k {
            "skeleton" => &mut skeleton,
            "texture" => &mut texture,
            _ => return Err(tok_err(t, format!("unknown key `{k}` for character"))),
        };
        if slot.is_some() {
            return Err(tok_err(t, format!("`{k}` given twice")));
        }
        if v.is_empty() {
            return Err(tok_err(t, format!("`{k}` needs a value")));
        }
        *slot = Some(v.to_string());
    }
    let missing = |k: &str| tok_err(head, format!("character `{}` is missing `{k}=`", name.text));
    Ok(CharacterDecl {
        name: name.text.clone(),
        skeleton_ref: skeleton.ok_or_else(|| missing("skeleton"))?,
        texture_tag: texture.ok_or_else(|| missing("texture"))?,
    })
}

fn parse_cue_header(line: &LogicalLine, expected: usize) -> Result<CueRow, ParseError> {
    let head = &line.tokens[0];
    let idx_tok = line.tokens.get(1).ok_or_else(|| tok_err(head, "`cue` needs an index"))?;
    let index: usize = idx_tok
        .text
        .parse()
        .ok()
        .filter(|_| !idx_tok.quoted)
        .ok_or_else(|| tok_err(idx_tok, format!("bad cue index `{}`", idx_tok.text)))?;
    if index != expected {
        return Err(tok_err(idx_tok, format!("cue index {index} out of sequence, expected {expected}")));
    }
    let label = match line.tokens.get(2) {
        Some(t) if t.quoted => t.text.clone(),
        Some(t) => return Err(tok_err(t, "cue label must be quoted")),
        None => String::new(),
    };
    if let Some(t) = line.tokens.get(3) {
        return Err(tok_err(t, format!("unexpected `{}` after cue label", t.text)));
    }
    Ok(CueRow { index, label, instructions: Vec::new() })
}

fn parse_instruction(line: &LogicalLine) -> Result<SalientIdleCue, ParseError> {
    let name = &line.tokens[0];
    if name.quoted || name.text.contains('=') {
        return Err(tok_err(name, "instruction must start with a character name"));
    }
    let mut salient = None;
    let mut idle = None;
    let mut params: BTreeMap<&str, f64> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for t in &line.tokens[1..] {
        let (k, v) = key_value(t)?;
        if !seen.insert(k) {
            return Err(tok_err(t, format!("`{k}` given twice")));
        }
        match k {
            "salient" => salient = Some(segment(t, k, v, SegmentKind::Salient)?),
            "idle" => idle = Some(segment(t, k, v, SegmentKind::Idle)?),
            "rate" | "irate" | "in" | "xfade" | "loopxfade" => {
                params.insert(k, number(t, k, v)?);
            }
            _ => return Err(tok_err(t, format!("unknown key `{k}`"))),
        }
    }
    let missing = |k: &str| tok_err(name, format!("instruction for `{}` is missing `{k}=`", name.text));
    let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    Ok(SalientIdleCue {
        character: name.text.clone(),
        salient: salient.ok_or_else(|| missing("salient"))?,
        idle: idle.ok_or_else(|| missing("idle"))?,
        rate_salient: get("rate", Defaults::RATE),
        rate_idle: get("irate", Defaults::RATE),
        xfade_in: get("in", Defaults::XFADE),
        xfade_salient_to_idle: get("xfade", Defaults::XFADE),
        xfade_turnaround: get("loopxfade", Defaults::XFADE),
    })
}

pub fn parse_cuesheet(text: &str) -> Result<CueSheet, ParseError> {
    let mut sheet = CueSheet::default();
    for line in logical_lines(text)? {
        let head = &line.tokens[0];
        if line.indented {
            let row = sheet
                .rows
                .last_mut()
                .ok_or_else(|| tok_err(head, "instruction before the first cue"))?;
            let cue = parse_instruction(&line)?;
            if row.instruction(&cue.character).is_some() {
                return Err(tok_err(
                    head,
                    format!("cue {} addresses `{}` more than once", row.index, cue.character),
                ));
            }
            row.instructions.push(cue);
            continue;
        }
        match (head.quoted, head.text.as_str()) {
            (false, "character") => {
                let decl = parse_character(&line)?;
                if sheet.character(&decl.name).is_some() {
                    return Err(tok_err(&line.tokens[1], format!("character `{}` declared twice", decl.name)));
                }
                sheet.characters.push(decl);
            }
            (false, "cue") => {
                if let Some(prev) = sheet.rows.last() {
                    if prev.instructions.is_empty() {
                        return Err(err(line.line, 1, format!("cue {} has no instructions", prev.index)));
                    }
                }
                let row = parse_cue_header(&line, sheet.rows.len() + 1)?;
                sheet.rows.push(row);
            }
            _ => return Err(tok_err(head, format!("unknown directive `{}`", head.text))),
        }
    }
    if let Some(prev) = sheet.rows.last() {
        if prev.instructions.is_empty() {
            let last = text.lines().count().max(1);
            return Err(err(last, 1, format!("cue {} has no instructions", prev.index)));
        }
    }
    Ok(sheet)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn push_segment(out: &mut String, key: &str, seg: &Segment) {
    out.push_str(key);
    out.push('=');
    out.push_str(&seg.clip_ref);
    out.push('[');
    canon::push_float(out, seg.start_s);
    out.push(':');
    canon::push_float(out, seg.end_s);
    out.push(']');
}

/// Canonical text: every parameter spelled out, shortest round-trip floats.
pub fn print_cuesheet(sheet: &CueSheet) -> String {
    let mut out = String::new();
    for c in &sheet.characters {
        out.push_str(&format!("character {} skeleton={} texture={}\n", c.name, c.skeleton_ref, c.texture_tag));
    }
    for row in &sheet.rows {
        out.push('\n');
        out.push_str(&format!("cue {} {}\n", row.index, quote(&row.label)));
        for cue in &row.instructions {
            out.push_str("  ");
            out.push_str(&cue.character);
            out.push(' ');
            push_segment(&mut out, "salient", &cue.salient);
            out.push(' ');
            push_segment(&mut out, "idle", &cue.idle);
            for (k, v) in [
                ("rate", cue.rate_salient),
                ("irate", cue.rate_idle),
                ("in", cue.xfade_in),
                ("xfade", cue.xfade_salient_to_idle),
                ("loopxfade", cue.xfade_turnaround),
            ] {
                out.push(' ');
                out.push_str(k);
                out.push('=');
                canon::push_float(&mut out, v);
            }
            out.push('\n');
        }
    }
    out
}

impl fmt::Display for CueSheet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_cuesheet(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub row: Option<usize>,
    pub character: Option<String>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.row, &self.character) {
            (Some(r), Some(c)) => write!(f, "row {r}, {c}: {}", self.message),
            (Some(r), None) => write!(f, "row {r}: {}", self.message),
            (None, Some(c)) => write!(f, "{c}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_runnable(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        write!(f, "{} errors, {} warnings", self.errors.len(), self.warnings.len())
    }
}

pub fn alias_pairs(aliases: &AliasTable, character: &str) -> Vec<(String, String)> {
    aliases
        .get(character)
        .map(|m| m.iter().map(|(s, d)| (s.clone(), d.clone())).collect())
        .unwrap_or_default()
}

/// Checks every instruction against the library. Never fails; findings go
/// in the report.
pub fn validate_cuesheet(sheet: &CueSheet, lib: &ClipLibrary, aliases: &AliasTable) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut avatar: BTreeMap<&str, Option<&Skeleton>> = BTreeMap::new();
    for c in &sheet.characters {
        let skel = lib.skeleton(&c.skeleton_ref);
        if skel.is_none() {
            report.errors.push(Finding {
                row: None,
                character: Some(c.name.clone()),
                message: format!("unknown skeleton `{}`", c.skeleton_ref),
            });
        }
        avatar.insert(&c.name, skel);
    }
    for name in aliases.keys() {
        if sheet.character(name).is_none() {
            report.warnings.push(Finding {
                row: None,
                character: Some(name.clone()),
                message: "aliases given for an undeclared character".into(),
            });
        }
    }
    // (character, clip skeleton) pairs already checked, with their outcome.
    let mut maps: BTreeMap<(String, String), Option<String>> = BTreeMap::new();
    for row in &sheet.rows {
        for cue in &row.instructions {
            let mut push = |errors: bool, message: String| {
                let f = Finding { row: Some(row.index), character: Some(cue.character.clone()), message };
                if errors {
                    report.errors.push(f)
                } else {
                    report.warnings.push(f)
                }
            };
            let Some(&dst) = avatar.get(cue.character.as_str()) else {
                push(true, format!("unknown character `{}`", cue.character));
                continue;
            };
            if let Err(e) = cue.check() {
                push(true, strip_cue_prefix(&e.to_string()));
            }
            for seg in [&cue.salient, &cue.idle] {
                let Some(clip) = lib.clip(&seg.clip_ref) else {
                    push(true, format!("unknown clip `{}`", seg.clip_ref));
                    continue;
                };
                // A reversed segment was already reported by `check`.
                if seg.end_s >= seg.start_s {
                    if let Err(m) = seg.check_range(clip.duration()) {
                        push(true, m);
                    }
                }
                let (Some(dst), Some(src)) = (dst, lib.clip_skeleton(&seg.clip_ref)) else {
                    continue;
                };
                if std::ptr::eq(seg, &cue.idle) && seg.clip_ref == cue.salient.clip_ref {
                    continue;
                }
                let key = (cue.character.clone(), src.name().to_string());
                let outcome = maps.entry(key).or_insert_with(|| {
                    build_joint_map(src, dst, &alias_pairs(aliases, &cue.character)).err().map(|e| e.to_string())
                });
                if let Some(m) = outcome {
                    push(true, format!("clip `{}` does not map onto `{}`: {m}", seg.clip_ref, dst.name()));
                }
            }
            if cue.salient.length() == 0.0 {
                push(false, "zero-length salient".into());
            }
            if cue.rate_salient > 0.0 && cue.rate_idle > 0.0 {
                for c in cue.clamped().1 {
                    push(
                        false,
                        format!(
                            "{} {} exceeds the segment, clamped to {}",
                            c.param,
                            canon::float(c.requested),
                            canon::float(c.clamped_to)
                        ),
                    );
                }
            }
        }
    }
    report
}

fn strip_cue_prefix(msg: &str) -> String {
    msg.split_once("`: ").map_or(msg, |(_, m)| m).to_string()
}

/// The sheet with every instruction's crossfades clamped to fit.
pub fn clamp_sheet(sheet: &CueSheet) -> CueSheet {
    let mut out = sheet.clone();
    for row in &mut out.rows {
        for cue in &mut row.instructions {
            *cue = cue.clamped().0;
        }
    }
    out
}
