//! The show runtime.
//!
//! A [`Show`] owns one player per character and a fixed-rate integer clock.
//! Trigger commands are queued and applied in arrival order at the next tick
//! boundary; [`Show::step`] then advances the clock by one tick, evaluates
//! every player, retargets each pose onto its avatar and returns a
//! [`Frame`]. Nothing reads the wall clock, so an offline run driven by a
//! schedule is fully reproducible.

mod command;
mod config;
mod frame;
mod schedule;

pub use command::{CueParam, TriggerCommand};
pub use config::{
    CharacterConfig, NetworkConfig, ShowConfig, StreamMode, DEFAULT_TICK_RATE, MAX_TICK_RATE,
    MIN_TICK_RATE,
};
pub use frame::{CharacterFrame, Frame};
pub use schedule::{
    parse_schedule, simulate, write_stream, ScheduleError, Scheduled, Simulation, StreamError,
    StreamSummary,
};

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::anim::{forward_kinematics, sample_clip, Pose, Skeleton};
use crate::cuesheet::{
    alias_pairs, parse_cuesheet, validate_cuesheet, CharacterDecl, CueSheet, ParseError,
    ValidationReport,
};
use crate::motion_io::{load_library, ClipLibrary, LibraryError};
use crate::retarget::{build_joint_map, project_to_plane, retarget_pose, JointMap, ShadowPlane};
use crate::sip::{BlendCurve, PlayerMode, PlayerState, PoseSource, ShowTime, SipError};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error("cue sheet {}: {error}", path.display())]
    Parse { path: PathBuf, error: ParseError },
    #[error("cue sheet does not validate:\n{0}")]
    Validation(ValidationReport),
    #[error("{character}: {error}")]
    Retarget { character: String, error: SipError },
}

impl BuildError {
    /// Malformed or invalid input, as opposed to unreadable input.
    pub fn is_validation(&self) -> bool {
        match self {
            BuildError::Io { .. } => false,
            BuildError::Library(LibraryError::Io { .. }) => false,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("end of sheet")]
    EndOfSheet,
    #[error("row {row} out of range 1..={rows}")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("row already fired")]
    RowAlreadyFired,
    #[error("row {row} has no instruction for `{character}`")]
    NoInstruction { row: usize, character: String },
    #[error("bad value {value} for `{param}`: {reason}")]
    BadValue { param: CueParam, value: f64, reason: &'static str },
    #[error("evaluating `{character}` at tick {tick}: {error}")]
    Evaluation { character: String, tick: i64, error: SipError },
}

/// Poses for one character, sampled from the library and retargeted onto
/// its avatar.
pub struct RetargetSource {
    library: Arc<ClipLibrary>,
    avatar: Skeleton,
    rest: Pose,
    /// Per clip name: the clip's skeleton and its map onto the avatar.
    maps: BTreeMap<String, (Skeleton, JointMap)>,
}

impl RetargetSource {
    pub fn new(
        library: Arc<ClipLibrary>,
        avatar: Skeleton,
        clips: impl IntoIterator<Item = String>,
        aliases: &[(String, String)],
    ) -> Result<RetargetSource, SipError> {
        let mut maps = BTreeMap::new();
        for clip in clips {
            if maps.contains_key(&clip) {
                continue;
            }
            let src = library.clip_skeleton(&clip).ok_or_else(|| SipError::UnknownClip(clip.clone()))?;
            let map = build_joint_map(src, &avatar, aliases)?;
            maps.insert(clip, (src.clone(), map));
        }
        let rest = Pose::rest(&avatar);
        Ok(RetargetSource { library, avatar, rest, maps })
    }

    pub fn avatar(&self) -> &Skeleton {
        &self.avatar
    }
}

impl PoseSource for RetargetSource {
    fn sample(&self, clip: &str, t: f64) -> Result<Pose, SipError> {
        let (src, map) = self.maps.get(clip).ok_or_else(|| SipError::UnknownClip(clip.into()))?;
        let c = self.library.clip(clip).ok_or_else(|| SipError::UnknownClip(clip.into()))?;
        let pose = sample_clip(c, t)?;
        Ok(retarget_pose(&pose, map, src, &self.avatar)?)
    }

    fn rest(&self) -> Pose {
        self.rest.clone()
    }
}

struct Character {
    decl: CharacterDecl,
    source: RetargetSource,
    state: PlayerState,
}

/// Result of one queued command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u64,
    /// Clock tick at which the command was applied.
    pub tick: i64,
    pub command: TriggerCommand,
    pub result: Result<(), EngineError>,
}

/// What one call to [`Show::step`] produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    /// `None` while paused.
    pub frame: Option<Frame>,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterState {
    pub name: String,
    pub mode: PlayerMode,
    pub texture_tag: String,
}

/// Snapshot for operators and consoles.
#[derive(Debug, Clone, PartialEq)]
pub struct ShowState {
    pub tick: i64,
    pub next_row: usize,
    pub rows: usize,
    pub paused: bool,
    pub fired: Vec<usize>,
    pub characters: Vec<CharacterState>,
}

pub struct Show {
    rate: u32,
    curve: BlendCurve,
    plane: Option<ShadowPlane>,
    emit_points: bool,
    sheet: CueSheet,
    characters: Vec<Character>,
    next_row: usize,
    clock: i64,
    paused: bool,
    fired: BTreeSet<usize>,
    queue: VecDeque<(u64, TriggerCommand)>,
    next_id: u64,
}

/// Loads the library and sheet named in `config` and builds the show.
pub fn build_show(config: &ShowConfig) -> Result<Show, BuildError> {
    let clips = config.clips.as_ref().ok_or_else(|| BuildError::Config("no clip directory given".into()))?;
    let sheet_path =
        config.cuesheet.as_ref().ok_or_else(|| BuildError::Config("no cue sheet given".into()))?;
    let library = load_library(clips)?;
    let text = std::fs::read_to_string(sheet_path)
        .map_err(|e| BuildError::Io { path: sheet_path.clone(), message: e.to_string() })?;
    let sheet =
        parse_cuesheet(&text).map_err(|error| BuildError::Parse { path: sheet_path.clone(), error })?;
    Show::new(config, Arc::new(library), sheet)
}

impl Show {
    /// Validates `sheet` against `library` and sets every player to rest.
    pub fn new(config: &ShowConfig, library: Arc<ClipLibrary>, sheet: CueSheet) -> Result<Show, BuildError> {
        config.check()?;
        let aliases = config.aliases();
        let report = validate_cuesheet(&sheet, &library, &aliases);
        if !report.is_runnable() {
            return Err(BuildError::Validation(report));
        }
        let mut characters = Vec::with_capacity(sheet.characters.len());
        for decl in &sheet.characters {
            let avatar = library
                .skeleton(&decl.skeleton_ref)
                .cloned()
                .expect("validated sheet names known skeletons");
            let clips = sheet
                .rows
                .iter()
                .filter_map(|r| r.instruction(&decl.name))
                .flat_map(|c| [c.salient.clip_ref.clone(), c.idle.clip_ref.clone()]);
            let source = RetargetSource::new(library.clone(), avatar, clips, &alias_pairs(&aliases, &decl.name))
                .map_err(|error| BuildError::Retarget { character: decl.name.clone(), error })?;
            characters.push(Character { decl: decl.clone(), source, state: PlayerState::Empty });
        }
        Ok(Show {
            rate: config.tick_rate,
            curve: config.blend_curve,
            plane: config.shadow_plane,
            emit_points: config.emit_points,
            sheet,
            characters,
            next_row: 1,
            clock: 0,
            paused: false,
            fired: BTreeSet::new(),
            queue: VecDeque::new(),
            next_id: 0,
        })
    }

    pub fn tick_rate(&self) -> u32 {
        self.rate
    }

    /// Ticks since start.
    pub fn clock(&self) -> i64 {
        self.clock
    }

    pub fn next_row(&self) -> usize {
        self.next_row
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn sheet(&self) -> &CueSheet {
        &self.sheet
    }

    pub fn now(&self) -> ShowTime {
        ShowTime::from_ticks(self.clock, self.rate)
    }

    pub fn player(&self, character: &str) -> Option<&PlayerState> {
        self.characters.iter().find(|c| c.decl.name == character).map(|c| &c.state)
    }

    /// Declared characters with their avatar skeletons, in declaration order.
    pub fn avatars(&self) -> impl Iterator<Item = (&CharacterDecl, &Skeleton)> {
        self.characters.iter().map(|c| (&c.decl, c.source.avatar()))
    }

    pub fn state(&self) -> ShowState {
        ShowState {
            tick: self.clock,
            next_row: self.next_row,
            rows: self.sheet.rows.len(),
            paused: self.paused,
            fired: self.fired.iter().copied().collect(),
            characters: self
                .characters
                .iter()
                .map(|c| CharacterState {
                    name: c.decl.name.clone(),
                    mode: c.state.mode(),
                    texture_tag: c.decl.texture_tag.clone(),
                })
                .collect(),
        }
    }

    /// Queues a command for the next tick boundary. The returned id tags its
    /// [`Outcome`].
    pub fn enqueue(&mut self, cmd: TriggerCommand) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.queue.push_back((id, cmd));
        id
    }

    /// Applies queued commands, then, unless paused, advances one tick and
    /// evaluates every character.
    pub fn step(&mut self) -> Result<Tick, EngineError> {
        let outcomes = self.drain();
        if self.paused {
            return Ok(Tick { frame: None, outcomes });
        }
        self.clock += 1;
        let frame = self.evaluate()?;
        Ok(Tick { frame: Some(frame), outcomes })
    }

    fn drain(&mut self) -> Vec<Outcome> {
        let mut out = Vec::with_capacity(self.queue.len());
        while let Some((id, command)) = self.queue.pop_front() {
            let result = self.apply(&command);
            out.push(Outcome { id, tick: self.clock, command, result });
        }
        out
    }

    fn apply(&mut self, cmd: &TriggerCommand) -> Result<(), EngineError> {
        let rows = self.sheet.rows.len();
        match cmd {
            TriggerCommand::Go => {
                let row = self.next_row;
                let Some(r) = self.sheet.row(row) else {
                    return Err(EngineError::EndOfSheet);
                };
                let now = self.now();
                for cue in &r.instructions {
                    let ch = self
                        .characters
                        .iter_mut()
                        .find(|c| c.decl.name == cue.character)
                        .expect("validated sheet names declared characters");
                    let state = std::mem::take(&mut ch.state);
                    ch.state = state.apply_cue(Arc::new(cue.clamped().0), now);
                }
                self.fired.insert(row);
                self.next_row += 1;
                Ok(())
            }
            &TriggerCommand::Goto(row) => {
                if row == 0 || row > rows {
                    return Err(EngineError::RowOutOfRange { row, rows });
                }
                self.next_row = row;
                Ok(())
            }
            TriggerCommand::Pause => {
                self.paused = true;
                Ok(())
            }
            TriggerCommand::Resume => {
                self.paused = false;
                Ok(())
            }
            TriggerCommand::SetParam { row, character, param, value } => {
                let row = *row;
                if row == 0 || row > rows {
                    return Err(EngineError::RowOutOfRange { row, rows });
                }
                if self.fired.contains(&row) {
                    return Err(EngineError::RowAlreadyFired);
                }
                param.check(*value)?;
                let cue = self.sheet.rows[row - 1]
                    .instruction_mut(character)
                    .ok_or_else(|| EngineError::NoInstruction { row, character: character.clone() })?;
                param.set(cue, *value);
                Ok(())
            }
        }
    }

    fn evaluate(&mut self) -> Result<Frame, EngineError> {
        let now = self.now();
        let mut characters = Vec::with_capacity(self.characters.len());
        for ch in &mut self.characters {
            let state = std::mem::take(&mut ch.state);
            ch.state = state.settle(now);
            let pose = ch.state.evaluate(now, &ch.source, self.curve).map_err(|error| EngineError::Evaluation {
                character: ch.decl.name.clone(),
                tick: self.clock,
                error,
            })?;
            let points = if self.plane.is_some() || self.emit_points {
                let world = forward_kinematics(ch.source.avatar(), &pose).map_err(|e| EngineError::Evaluation {
                    character: ch.decl.name.clone(),
                    tick: self.clock,
                    error: e.into(),
                })?;
                Some(match &self.plane {
                    Some(plane) => project_to_plane(&world, plane),
                    None => world.positions(),
                })
            } else {
                None
            };
            characters.push(CharacterFrame { name: ch.decl.name.clone(), mode: ch.state.mode(), pose, points });
        }
        Ok(Frame { tick: self.clock, time_s: self.clock as f64 / self.rate as f64, characters })
    }
}
