use std::fmt;
use std::str::FromStr;

use super::EngineError;
use crate::canon;
use crate::sip::SalientIdleCue;

/// Instruction parameters that may be changed on a row that has not fired.
/// Names match the cue sheet keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CueParam {
    Rate,
    IdleRate,
    In,
    Xfade,
    LoopXfade,
}

impl CueParam {
    pub const ALL: [CueParam; 5] =
        [CueParam::Rate, CueParam::IdleRate, CueParam::In, CueParam::Xfade, CueParam::LoopXfade];

    pub fn name(self) -> &'static str {
        match self {
            CueParam::Rate => "rate",
            CueParam::IdleRate => "irate",
            CueParam::In => "in",
            CueParam::Xfade => "xfade",
            CueParam::LoopXfade => "loopxfade",
        }
    }

    pub(crate) fn check(self, value: f64) -> Result<(), EngineError> {
        let bad = |reason| Err(EngineError::BadValue { param: self, value, reason });
        if !value.is_finite() {
            return bad("not finite");
        }
        match self {
            CueParam::Rate | CueParam::IdleRate if value <= 0.0 => bad("rates must be positive"),
            CueParam::In | CueParam::Xfade | CueParam::LoopXfade if value < 0.0 => {
                bad("durations must not be negative")
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn set(self, cue: &mut SalientIdleCue, value: f64) {
        let slot = match self {
            CueParam::Rate => &mut cue.rate_salient,
            CueParam::IdleRate => &mut cue.rate_idle,
            CueParam::In => &mut cue.xfade_in,
            CueParam::Xfade => &mut cue.xfade_salient_to_idle,
            CueParam::LoopXfade => &mut cue.xfade_turnaround,
        };
        *slot = value;
    }
}

impl fmt::Display for CueParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CueParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        CueParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown parameter `{s}` (rate, irate, in, xfade, loopxfade)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TriggerCommand {
    Go,
    Goto(usize),
    Pause,
    Resume,
    SetParam { row: usize, character: String, param: CueParam, value: f64 },
}

/// Schedule-file spelling: `GO`, `GOTO 3`, `PAUSE`, `RESUME`,
/// `SET 5 Shadow rate 0.8`.
impl fmt::Display for TriggerCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TriggerCommand::Go => f.write_str("GO"),
            TriggerCommand::Goto(n) => write!(f, "GOTO {n}"),
            TriggerCommand::Pause => f.write_str("PAUSE"),
            TriggerCommand::Resume => f.write_str("RESUME"),
            TriggerCommand::SetParam { row, character, param, value } => {
                write!(f, "SET {row} {character} {param} {}", canon::float(*value))
            }
        }
    }
}

impl FromStr for TriggerCommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let Some((head, args)) = words.split_first() else {
            return Err("empty command".into());
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("{} takes {n} argument(s), got {}", head.to_ascii_uppercase(), args.len()))
            }
        };
        let row = |s: &str| s.parse::<usize>().map_err(|_| format!("bad row `{s}`"));
        match head.to_ascii_uppercase().as_str() {
            "GO" => arity(0).map(|_| TriggerCommand::Go),
            "PAUSE" => arity(0).map(|_| TriggerCommand::Pause),
            "RESUME" => arity(0).map(|_| TriggerCommand::Resume),
            "GOTO" => {
                arity(1)?;
                Ok(TriggerCommand::Goto(row(args[0])?))
            }
            "SET" => {
                arity(4)?;
                let value: f64 = args[3].parse().map_err(|_| format!("bad value `{}`", args[3]))?;
                Ok(TriggerCommand::SetParam {
                    row: row(args[0])?,
                    character: args[1].to_string(),
                    param: args[2].parse()?,
                    value,
                })
            }
            other => Err(format!("unknown command `{other}`")),
        }
    }
}
