//! `shadowstage`: validate, inspect, split, simulate and run cue-sheet shows.
//!
//! Exit codes: 0 success, 1 validation or parse failure, 2 I/O failure,
//! 3 runtime failure.

mod keys;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{ArgGroup, Parser, Subcommand};
use shadowstage_core::anim::{clip_stats, Segment};
use shadowstage_core::canon;
use shadowstage_core::cuesheet::{parse_cuesheet, validate_cuesheet};
use shadowstage_core::engine::{
    build_show, parse_schedule, write_stream, BuildError, ShowConfig, StreamError, StreamMode, TriggerCommand,
};
use shadowstage_core::motion_io::{load_library, LibraryError, MotionFile};
use shadowstage_core::sip::split_salient;
use shadowstage_net::{LiveError, LiveOptions};

#[derive(Parser)]
#[command(name = "shadowstage", version, about = "Cue-sheet driven avatar animation for live shadow theatre")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a cue sheet against a clip library.
    Validate {
        sheet: PathBuf,
        #[arg(long)]
        clips: Option<PathBuf>,
        /// Show config (TOML) supplying joint aliases.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print skeleton and motion statistics for one BVH file.
    Inspect { file: PathBuf },
    /// Cut a salient segment into salient, idle and salient.
    Split {
        clip: String,
        /// Segment to split, `start:end` in seconds.
        #[arg(long, value_name = "A:B")]
        segment: String,
        /// Idle part, `start:end` in seconds.
        #[arg(long, value_name = "C:D")]
        cut: String,
    },
    /// Run a scheduled show offline and write its frame stream.
    Simulate {
        sheet: PathBuf,
        #[arg(long)]
        clips: Option<PathBuf>,
        #[arg(long)]
        schedule: PathBuf,
        /// Tick-loop iterations. Defaults to the last scheduled tick plus
        /// ten seconds.
        #[arg(long)]
        ticks: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a show live: stream frames, listen for triggers, map space to GO.
    #[command(group(ArgGroup::new("stream").args(["points", "pose", "both"])))]
    Run {
        sheet: PathBuf,
        #[arg(long)]
        clips: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Tick rate, overriding the config.
        #[arg(long)]
        fps: Option<u32>,
        #[arg(long, value_name = "HOST:PORT")]
        send_osc: Option<String>,
        #[arg(long, value_name = "PORT")]
        listen_osc: Option<u16>,
        #[arg(long, value_name = "PORT")]
        control_port: Option<u16>,
        #[arg(long)]
        points: bool,
        #[arg(long)]
        pose: bool,
        #[arg(long)]
        both: bool,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<BuildError> for Failure {
    fn from(e: BuildError) -> Self {
        let code = if e.is_validation() { 1 } else { 2 };
        Failure { code, message: e.to_string() }
    }
}

impl From<LibraryError> for Failure {
    fn from(e: LibraryError) -> Self {
        match e {
            LibraryError::Io { .. } => Failure::io(e.to_string()),
            _ => Failure::invalid(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let default_level = if matches!(cli.command, Command::Run { .. }) { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SHADOWSTAGE_LOG", default_level))
        .format_timestamp_millis()
        .init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Validate { sheet, clips, config } => validate(&sheet, clips, config),
        Command::Inspect { file } => inspect(&file),
        Command::Split { clip, segment, cut } => split(&clip, &segment, &cut),
        Command::Simulate { sheet, clips, schedule, ticks, out, config } => {
            simulate(sheet, clips, config, &schedule, ticks, out)
        }
        Command::Run { sheet, clips, config, fps, send_osc, listen_osc, control_port, points, pose, both } => {
            let stream = if both {
                Some(StreamMode::Both)
            } else if points {
                Some(StreamMode::Points)
            } else if pose {
                Some(StreamMode::Pose)
            } else {
                None
            };
            run(sheet, clips, config, fps, send_osc, listen_osc, control_port, stream)
        }
    }
}

/// The config file if given, with the sheet and clip directory from the
/// command line taking precedence.
fn show_config(sheet: PathBuf, clips: Option<PathBuf>, config: Option<PathBuf>) -> Result<ShowConfig, Failure> {
    let mut cfg = match config {
        Some(p) => ShowConfig::load(&p)?,
        None => ShowConfig::default(),
    };
    cfg.cuesheet = Some(sheet);
    if clips.is_some() {
        cfg.clips = clips;
    }
    if cfg.clips.is_none() {
        return Err(Failure::invalid("no clip directory: pass --clips or set `clips` in the config"));
    }
    Ok(cfg)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn validate(sheet: &Path, clips: Option<PathBuf>, config: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = show_config(sheet.to_path_buf(), clips, config)?;
    let text = read(sheet)?;
    let parsed = parse_cuesheet(&text).map_err(|e| Failure::invalid(format!("{}: {e}", sheet.display())))?;
    let lib = load_library(cfg.clips.as_deref().expect("checked by show_config"))?;
    let report = validate_cuesheet(&parsed, &lib, &cfg.aliases());
    println!("{report}");
    if report.is_runnable() {
        Ok(())
    } else {
        Err(Failure::invalid(format!("{} is not runnable", sheet.display())))
    }
}

fn inspect(file: &Path) -> Result<(), Failure> {
    let mf = MotionFile::load(file)?;
    let stats = clip_stats(&mf.clip);
    let skel = &mf.skeleton;
    let mut out = String::new();
    out.push_str(&format!("clip {}\n", mf.clip.name()));
    out.push_str(&format!("joints {}\n", skel.len()));
    out.push_str(&format!("frames {}\n", mf.clip.frame_count()));
    out.push_str(&format!("frame_rate {}\n", canon::float(mf.clip.frame_rate())));
    out.push_str(&format!("duration {}\n", canon::float(mf.clip.duration())));
    out.push_str(&format!("root_speed_max {:.6}\n", stats.root_speed));
    out.push_str("joint parent omega_max_rad_s\n");
    for (j, w) in skel.joints().iter().zip(&stats.angular_velocity) {
        let parent = j.parent.map_or("-", |p| skel.joints()[p].name.as_str());
        out.push_str(&format!("{} {} {:.6}\n", j.name, parent, w));
    }
    print!("{out}");
    Ok(())
}

fn range(s: &str, flag: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::invalid(format!("--{flag} expects start:end in seconds, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn split(clip: &str, segment: &str, cut: &str) -> Result<(), Failure> {
    let (a, b) = range(segment, "segment")?;
    let (c, d) = range(cut, "cut")?;
    let (first, idle, second) =
        split_salient(&Segment::salient(clip, a, b), c, d).map_err(|e| Failure::invalid(e.to_string()))?;
    let seg = |s: &Segment| format!("{}[{}:{}]", s.clip_ref, canon::float(s.start_s), canon::float(s.end_s));
    println!("salient={}", seg(&first));
    println!("idle={}", seg(&idle));
    println!("salient={}", seg(&second));
    Ok(())
}

fn simulate(
    sheet: PathBuf,
    clips: Option<PathBuf>,
    config: Option<PathBuf>,
    schedule: &Path,
    ticks: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = show_config(sheet, clips, config)?;
    let sched = parse_schedule(&read(schedule)?)
        .map_err(|e| Failure::invalid(format!("{}: {e}", schedule.display())))?;
    let mut show = build_show(&cfg)?;
    let iterations = ticks.unwrap_or_else(|| {
        sched.last().map_or(0, |s| s.at_tick + 1) + 10 * u64::from(show.tick_rate())
    });
    let mut sink: Box<dyn Write> = match &out {
        Some(p) => Box::new(BufWriter::with_capacity(
            1 << 20,
            File::create(p).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::with_capacity(1 << 20, io::stdout().lock())),
    };
    let started = Instant::now();
    let summary = write_stream(&mut show, &sched, iterations, &mut sink).map_err(|e| match e {
        StreamError::Io(e) => Failure::io(e.to_string()),
        StreamError::Engine(e) => Failure::runtime(e.to_string()),
    })?;
    eprintln!(
        "{} frames, last tick {}, {} command errors, {:.2} s",
        summary.frames,
        summary.last_tick,
        summary.command_errors,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    sheet: PathBuf,
    clips: Option<PathBuf>,
    config: Option<PathBuf>,
    fps: Option<u32>,
    send_osc: Option<String>,
    listen_osc: Option<u16>,
    control_port: Option<u16>,
    stream: Option<StreamMode>,
) -> Result<(), Failure> {
    let mut cfg = show_config(sheet, clips, config)?;
    if let Some(fps) = fps {
        cfg.tick_rate = fps;
    }
    let net = &mut cfg.network;
    net.send_osc = send_osc.or(net.send_osc.take());
    net.listen_osc = listen_osc.or(net.listen_osc);
    net.control_port = control_port.or(net.control_port);
    net.stream = stream.unwrap_or(net.stream);
    // Points are computed by the engine; turn them on when they are streamed.
    cfg.emit_points |= cfg.network.stream.wants_points();

    let show = build_show(&cfg)?;
    let opts = LiveOptions {
        send_osc: cfg.network.send_osc.clone(),
        listen_osc: cfg.network.listen_osc,
        control_port: cfg.network.control_port,
        stream: cfg.network.stream,
        ..LiveOptions::default()
    };
    let handle = shadowstage_net::start(show, &opts).map_err(|e| match e {
        LiveError::Bind { .. } | LiveError::Resolve(_) => Failure::io(e.to_string()),
        LiveError::Panicked => Failure::runtime(e.to_string()),
    })?;
    eprintln!("running at {} Hz; space = GO, q = quit", cfg.tick_rate);

    let keys = keys::spawn();
    while handle.is_running() {
        match keys.recv_timeout(Duration::from_millis(100)) {
            Ok(keys::Key::Go) => {
                // Wait for the engine so a following quit cannot overtake it.
                match handle.request(TriggerCommand::Go).recv_timeout(Duration::from_secs(1)) {
                    Ok(reply) => log::info!("GO: {reply}"),
                    Err(_) => log::warn!("GO: no reply from the tick loop"),
                }
            }
            Ok(keys::Key::Quit) => break,
            Err(_) => {}
        }
    }
    keys::restore();
    let show = handle.stop().map_err(|e| Failure::runtime(e.to_string()))?;
    eprintln!("stopped at tick {}, next row {}", show.clock(), show.next_row());
    Ok(())
}
