use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BuildError;
use crate::cuesheet::AliasTable;
use crate::retarget::ShadowPlane;
use crate::sip::BlendCurve;

pub const MIN_TICK_RATE: u32 = 10;
pub const MAX_TICK_RATE: u32 = 240;
pub const DEFAULT_TICK_RATE: u32 = 60;

/// What goes out on the pose stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    #[default]
    Pose,
    Points,
    Both,
}

impl StreamMode {
    pub fn wants_points(self) -> bool {
        matches!(self, StreamMode::Points | StreamMode::Both)
    }

    pub fn wants_pose(self) -> bool {
        matches!(self, StreamMode::Pose | StreamMode::Both)
    }
}

impl FromStr for StreamMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pose" => Ok(StreamMode::Pose),
            "points" => Ok(StreamMode::Points),
            "both" => Ok(StreamMode::Both),
            _ => Err(format!("unknown stream mode `{s}` (pose, points, both)")),
        }
    }
}

impl fmt::Display for StreamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StreamMode::Pose => "pose",
            StreamMode::Points => "points",
            StreamMode::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// `host:port` the pose stream is sent to.
    pub send_osc: Option<String>,
    /// UDP port accepting `/cue/go` and `/cue/goto`.
    pub listen_osc: Option<u16>,
    /// TCP port of the JSON control channel.
    pub control_port: Option<u16>,
    pub stream: StreamMode,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterConfig {
    /// Source joint name to avatar joint name.
    pub aliases: BTreeMap<String, String>,
}

/// Show configuration, read from TOML:
///
/// ```toml
/// tick_rate = 60
/// cuesheet = "show.cue"
/// clips = "clips"
///
/// [shadow_plane]
/// origin = [0.0, 0.0, 0.0]
/// normal = [0.0, 0.0, 1.0]
///
/// [network]
/// send_osc = "127.0.0.1:9000"
/// control_port = 9100
///
/// [characters.Scholar.aliases]
/// Hips = "pelvis"
/// ```
///
/// Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShowConfig {
    pub tick_rate: u32,
    pub cuesheet: Option<PathBuf>,
    pub clips: Option<PathBuf>,
    pub blend_curve: BlendCurve,
    /// Put world-space joint positions in frames even without a shadow plane.
    pub emit_points: bool,
    pub shadow_plane: Option<ShadowPlane>,
    pub network: NetworkConfig,
    pub characters: BTreeMap<String, CharacterConfig>,
}

impl Default for ShowConfig {
    fn default() -> Self {
        ShowConfig {
            tick_rate: DEFAULT_TICK_RATE,
            cuesheet: None,
            clips: None,
            blend_curve: BlendCurve::default(),
            emit_points: false,
            shadow_plane: None,
            network: NetworkConfig::default(),
            characters: BTreeMap::new(),
        }
    }
}

impl ShowConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<ShowConfig, BuildError> {
        let mut cfg: ShowConfig = toml::from_str(text).map_err(|e| BuildError::Config(e.to_string()))?;
        for p in [&mut cfg.cuesheet, &mut cfg.clips].into_iter().flatten() {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ShowConfig, BuildError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BuildError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        ShowConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
            .map_err(|e| match e {
                BuildError::Config(m) => BuildError::Config(format!("{}: {m}", path.display())),
                e => e,
            })
    }

    pub fn check(&self) -> Result<(), BuildError> {
        if !(MIN_TICK_RATE..=MAX_TICK_RATE).contains(&self.tick_rate) {
            return Err(BuildError::Config(format!(
                "tick_rate {} outside {MIN_TICK_RATE}..={MAX_TICK_RATE}",
                self.tick_rate
            )));
        }
        Ok(())
    }

    pub fn aliases(&self) -> AliasTable {
        self.characters.iter().map(|(k, v)| (k.clone(), v.aliases.clone())).collect()
    }
}
