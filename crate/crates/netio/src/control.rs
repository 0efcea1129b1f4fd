//! JSON-lines control protocol.
//!
//! Client to server, one object per line:
//!
//! ```text
//! {"cmd":"go"}
//! {"cmd":"goto","row":3}
//! {"cmd":"pause"}            {"cmd":"resume"}
//! {"cmd":"set","row":5,"character":"Shadow","param":"rate","value":0.8}
//! ```
//!
//! Any request may carry an `"id"`, echoed in its reply. Server to client:
//! `hello` once on connect, `ok`/`err` per request, `state` whenever the
//! show state changes and `frame` every tick.

use std::fmt;

use serde_json::{json, Map, Value};
use shadowstage_core::cuesheet::CueSheet;
use shadowstage_core::engine::{CueParam, Frame, Outcome, Show, ShowState, TriggerCommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    MalformedJson,
    UnknownCmd,
    MissingField,
    BadField,
    /// The engine refused a well-formed command.
    Engine,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::MalformedJson => "malformed_json",
            ErrorCode::UnknownCmd => "unknown_cmd",
            ErrorCode::MissingField => "missing_field",
            ErrorCode::BadField => "bad_field",
            ErrorCode::Engine => "engine",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlError {
    pub code: ErrorCode,
    pub message: String,
}

impl fmt::Display for ControlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ControlError {}

fn fail(code: ErrorCode, message: impl Into<String>) -> ControlError {
    ControlError { code, message: message.into() }
}

/// One parsed request line.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: Option<Value>,
    pub command: Result<TriggerCommand, ControlError>,
}

pub fn parse_control(line: &str) -> Result<TriggerCommand, ControlError> {
    parse_request(line).command
}

pub fn parse_request(line: &str) -> Request {
    let value: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return Request { id: None, command: Err(fail(ErrorCode::MalformedJson, e.to_string())) },
    };
    let Value::Object(obj) = value else {
        return Request { id: None, command: Err(fail(ErrorCode::MalformedJson, "expected a JSON object")) };
    };
    Request { id: obj.get("id").cloned(), command: command(&obj) }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, ControlError> {
    obj.get(key).ok_or_else(|| fail(ErrorCode::MissingField, format!("missing field `{key}`")))
}

fn row(obj: &Map<String, Value>) -> Result<usize, ControlError> {
    let v = field(obj, "row")?;
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| fail(ErrorCode::BadField, format!("`row` must be a non-negative integer, got {v}")))
}

fn command(obj: &Map<String, Value>) -> Result<TriggerCommand, ControlError> {
    let cmd = field(obj, "cmd")?;
    let cmd = cmd.as_str().ok_or_else(|| fail(ErrorCode::BadField, format!("`cmd` must be a string, got {cmd}")))?;
    match cmd {
        "go" => Ok(TriggerCommand::Go),
        "pause" => Ok(TriggerCommand::Pause),
        "resume" => Ok(TriggerCommand::Resume),
        "goto" => Ok(TriggerCommand::Goto(row(obj)?)),
        "set" => {
            let row = row(obj)?;
            let character = field(obj, "character")?;
            let character = character
                .as_str()
                .ok_or_else(|| fail(ErrorCode::BadField, "`character` must be a string"))?
                .to_string();
            let param = field(obj, "param")?;
            let param: CueParam = param
                .as_str()
                .ok_or_else(|| fail(ErrorCode::BadField, "`param` must be a string"))?
                .parse()
                .map_err(|m: String| fail(ErrorCode::BadField, m))?;
            let value = field(obj, "value")?;
            let value = value.as_f64().ok_or_else(|| fail(ErrorCode::BadField, "`value` must be a number"))?;
            Ok(TriggerCommand::SetParam { row, character, param, value })
        }
        other => Err(fail(ErrorCode::UnknownCmd, format!("unknown cmd `{other}`"))),
    }
}

/// The JSON spelling of a command, as a client would send it.
pub fn command_json(cmd: &TriggerCommand) -> Value {
    match cmd {
        TriggerCommand::Go => json!({"cmd": "go"}),
        TriggerCommand::Goto(row) => json!({"cmd": "goto", "row": row}),
        TriggerCommand::Pause => json!({"cmd": "pause"}),
        TriggerCommand::Resume => json!({"cmd": "resume"}),
        TriggerCommand::SetParam { row, character, param, value } => json!({
            "cmd": "set", "row": row, "character": character, "param": param.name(), "value": value,
        }),
    }
}

fn with_id(mut v: Value, id: Option<&Value>) -> String {
    if let (Some(id), Value::Object(m)) = (id, &mut v) {
        m.insert("id".into(), id.clone());
    }
    v.to_string()
}

pub fn error_reply(err: &ControlError, id: Option<&Value>) -> String {
    with_id(json!({"type": "err", "code": err.code.as_str(), "message": err.message}), id)
}

/// `ok` or `err` for a command the engine has applied.
pub fn outcome_reply(outcome: &Outcome, id: Option<&Value>) -> String {
    let cmd = command_json(&outcome.command)["cmd"].clone();
    let v = match &outcome.result {
        Ok(()) => json!({"type": "ok", "cmd": cmd, "tick": outcome.tick}),
        Err(e) => json!({
            "type": "err", "cmd": cmd, "tick": outcome.tick,
            "code": ErrorCode::Engine.as_str(), "message": e.to_string(),
        }),
    };
    with_id(v, id)
}

pub fn state_json(state: &ShowState, sheet: &CueSheet) -> String {
    json!({
        "type": "state",
        "tick": state.tick,
        "next_row": state.next_row,
        "rows": state.rows,
        "row_labels": sheet.rows.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(),
        "paused": state.paused,
        "fired": state.fired,
        "characters": state.characters.iter().map(|c| json!({
            "name": c.name, "mode": c.mode.as_str(), "texture": c.texture_tag,
        })).collect::<Vec<_>>(),
    })
    .to_string()
}

/// Static description of the show sent once per connection: rows and, for
/// each character, its joints and their parents so clients can draw bones.
pub fn hello_json(show: &Show) -> String {
    let sheet = show.sheet();
    json!({
        "type": "hello",
        "tick_rate": show.tick_rate(),
        "rows": sheet.rows.iter().map(|r| json!({
            "index": r.index,
            "label": r.label,
            "characters": r.instructions.iter().map(|c| c.character.as_str()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "characters": show.avatars().map(|(decl, skel)| json!({
            "name": decl.name,
            "texture": decl.texture_tag,
            "skeleton": decl.skeleton_ref,
            "joints": skel.joints().iter().map(|j| j.name.as_str()).collect::<Vec<_>>(),
            "parents": skel.joints().iter().map(|j| j.parent).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
    .to_string()
}

/// Preview frame: joint points when the frame has them, otherwise the root
/// translation and joint rotations (w, x, y, z).
pub fn frame_json(frame: &Frame) -> String {
    json!({
        "type": "frame",
        "tick": frame.tick,
        "time": frame.time_s,
        "characters": frame.characters.iter().map(|c| {
            let mut v = json!({"name": c.name, "mode": c.mode.as_str()});
            match &c.points {
                Some(p) => v["points"] = json!(p.iter().map(|p| p.to_array()).collect::<Vec<_>>()),
                None => {
                    v["root"] = json!(c.pose.root_translation.to_array());
                    v["rotations"] = json!(c.pose.rotations.iter().map(|q| [q.w, q.x, q.y, q.z]).collect::<Vec<_>>());
                }
            }
            v
        }).collect::<Vec<_>>(),
    })
    .to_string()
}
