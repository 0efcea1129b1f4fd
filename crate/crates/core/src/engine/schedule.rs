use std::io::{self, Write};

use thiserror::Error;

use super::{EngineError, Show, Tick, TriggerCommand};

/// A command injected before the step of iteration `at_tick`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheduled {
    pub at_tick: u64,
    pub command: TriggerCommand,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schedule line {line}: {message}")]
pub struct ScheduleError {
    pub line: usize,
    pub message: String,
}

/// One command per line, `<tick> <command>`, ticks non-decreasing. `#`
/// starts a comment.
pub fn parse_schedule(text: &str) -> Result<Vec<Scheduled>, ScheduleError> {
    let mut out: Vec<Scheduled> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| ScheduleError { line, message };
        let (tick, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let at_tick: u64 = tick.parse().map_err(|_| err(format!("bad tick `{tick}`")))?;
        let command: TriggerCommand = rest.parse().map_err(err)?;
        if let Some(prev) = out.last() {
            if at_tick < prev.at_tick {
                return Err(err(format!("tick {at_tick} comes before tick {}", prev.at_tick)));
            }
        }
        out.push(Scheduled { at_tick, command });
    }
    Ok(out)
}

/// Runs `iterations` steps, feeding each scheduled command in just before
/// the step of its iteration. While paused an iteration produces no frame,
/// so the final tick equals `iterations` only for a show never paused.
pub struct Simulation<'a> {
    show: &'a mut Show,
    schedule: &'a [Scheduled],
    pos: usize,
    iteration: u64,
    iterations: u64,
}

pub fn simulate<'a>(show: &'a mut Show, schedule: &'a [Scheduled], iterations: u64) -> Simulation<'a> {
    Simulation { show, schedule, pos: 0, iteration: 0, iterations }
}

impl Iterator for Simulation<'_> {
    type Item = Result<Tick, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.iteration >= self.iterations {
            return None;
        }
        while let Some(s) = self.schedule.get(self.pos) {
            if s.at_tick > self.iteration {
                break;
            }
            self.show.enqueue(s.command.clone());
            self.pos += 1;
        }
        self.iteration += 1;
        Some(self.show.step())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StreamSummary {
    pub frames: u64,
    pub last_tick: i64,
    pub command_errors: u64,
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Simulates and writes the frame stream: one canonical frame line per
/// tick, preceded by `E <tick> <command> "<message>"` for each command that
/// failed at that boundary.
pub fn write_stream<W: Write>(
    show: &mut Show,
    schedule: &[Scheduled],
    iterations: u64,
    out: &mut W,
) -> Result<StreamSummary, StreamError> {
    let mut summary = StreamSummary { last_tick: show.clock(), ..Default::default() };
    let mut line = String::new();
    for tick in simulate(show, schedule, iterations) {
        let tick = tick?;
        for o in &tick.outcomes {
            if let Err(e) = &o.result {
                summary.command_errors += 1;
                writeln!(out, "E {} {} {:?}", o.tick, o.command, e.to_string())?;
            }
        }
        if let Some(frame) = tick.frame {
            line.clear();
            frame.write_canonical(&mut line);
            line.push('\n');
            out.write_all(line.as_bytes())?;
            summary.frames += 1;
            summary.last_tick = frame.tick;
        }
    }
    out.flush()?;
    Ok(summary)
}
