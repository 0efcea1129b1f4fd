mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use shadowstage_core::anim::{Pose, Vec3};
use shadowstage_core::cuesheet::parse_cuesheet;
use shadowstage_core::engine::{
    build_show, parse_schedule, write_stream, BuildError, CueParam, EngineError, Show, ShowConfig,
    TriggerCommand,
};
use shadowstage_core::retarget::ShadowPlane;
use shadowstage_core::sip::PlayerMode;

use common::*;

const SMALL: &str = r#"
character Scholar skeleton=scholar texture=grey
character Shadow skeleton=shadow texture=black
character Princess skeleton=princess texture=white

cue 1 "one"
  Scholar salient=greet[1.0:4.0] idle=greet[4.0:5.5] in=0.5
cue 2 "two"
  Shadow salient=bow[0.8:3.3] idle=bow[3.3:4.6]
cue 3 "three"
  Princess salient=point[0.6:3.0] idle=point[3.0:4.4]
  Scholar salient=breathe[0.5:2.5] idle=breathe[2.5:6.5]
cue 4 "four"
  Shadow salient=walk[0.8:3.8] idle=walk[3.8:5.6]
cue 5 "five"
  Shadow salient=greet[1.0:4.0] idle=greet[4.0:5.5] in=0
"#;

fn small() -> Show {
    show_from_text(SMALL)
}

fn go(show: &mut Show) -> Result<(), EngineError> {
    show.enqueue(TriggerCommand::Go);
    let tick = show.step().unwrap();
    tick.outcomes.into_iter().next().unwrap().result
}

#[test]
fn fixture_show_builds_with_every_player_empty() {
    let mut cfg = show_config();
    assert!(cfg.cuesheet.is_some());
    let show = build_show(&cfg).unwrap();
    assert_eq!(show.next_row(), 1);
    assert_eq!(show.clock(), 0);
    let state = show.state();
    assert_eq!(state.characters.len(), 5);
    assert!(state.characters.iter().all(|c| c.mode == PlayerMode::Empty));
    assert!(state.rows >= 45);

    cfg.tick_rate = 500;
    assert!(matches!(build_show(&cfg), Err(BuildError::Config(_))));
}

#[test]
fn small_sheet_with_three_characters() {
    let show = small();
    let names: Vec<_> = show.state().characters.into_iter().map(|c| (c.name, c.texture_tag)).collect();
    assert_eq!(
        names,
        vec![
            ("Scholar".to_string(), "grey".to_string()),
            ("Shadow".to_string(), "black".to_string()),
            ("Princess".to_string(), "white".to_string())
        ]
    );
}

#[test]
fn build_refuses_a_sheet_with_errors() {
    let sheet = parse_cuesheet(&SMALL.replace("bow[0.8:3.3]", "clip99[0.8:3.3]")).unwrap();
    match Show::new(&show_config(), Arc::new(library()), sheet) {
        Err(BuildError::Validation(report)) => {
            assert_eq!(report.errors.len(), 1, "{report}");
            assert!(report.errors[0].message.contains("clip99"));
        }
        other => panic!("expected validation failure, got {:?}", other.err()),
    }
}

#[test]
fn build_reports_missing_files() {
    let cfg = ShowConfig { cuesheet: Some("/nonexistent/show.cue".into()), clips: Some(fixtures().join("clips")), ..Default::default() };
    let e = build_show(&cfg).err().unwrap();
    assert!(!e.is_validation());
}

#[test]
fn empty_sheet_go_is_end_of_sheet() {
    let mut show = show_from_text("character A skeleton=scholar texture=grey\n");
    assert_eq!(go(&mut show), Err(EngineError::EndOfSheet));
    assert_eq!(go(&mut show).unwrap_err().to_string(), "end of sheet");
}

#[test]
fn rest_pose_before_any_go_and_integer_time() {
    let mut show = small();
    let lib = library();
    let rests: Vec<Pose> = ["scholar", "shadow", "princess"].iter().map(|s| Pose::rest(lib.skeleton(s).unwrap())).collect();
    for n in 1..=600_i64 {
        let frame = show.step().unwrap().frame.unwrap();
        assert_eq!(frame.tick, n);
        assert_eq!(frame.time_s, n as f64 / 60.0);
        for (c, rest) in frame.characters.iter().zip(&rests) {
            assert_eq!(c.mode, PlayerMode::Empty);
            assert_eq!(&c.pose, rest);
            assert!(c.points.is_none());
        }
    }
    assert_eq!(show.clock(), 600);
}

#[test]
fn one_go_walks_through_transfer_salient_idle() {
    let mut show = small();
    show.enqueue(TriggerCommand::Go);
    let mut modes = Vec::new();
    for _ in 0..400 {
        let f = show.step().unwrap().frame.unwrap();
        modes.push((f.tick, f.character("Scholar").unwrap().mode));
    }
    // in=0.5 s, salient 3 s at rate 1.
    let mode_at = |t: i64| modes.iter().find(|(k, _)| *k == t).unwrap().1;
    assert_eq!(mode_at(1), PlayerMode::TransferIn);
    assert_eq!(mode_at(29), PlayerMode::TransferIn);
    assert_eq!(mode_at(30), PlayerMode::Salient);
    assert_eq!(mode_at(209), PlayerMode::Salient);
    assert_eq!(mode_at(210), PlayerMode::IdleLoop);
    assert_eq!(mode_at(400), PlayerMode::IdleLoop);
    // Others untouched.
    assert_eq!(show.player("Shadow").unwrap().mode(), PlayerMode::Empty);
}

#[test]
fn two_gos_in_one_tick_fire_in_order() {
    let mut show = small();
    let a = show.enqueue(TriggerCommand::Go);
    let b = show.enqueue(TriggerCommand::Go);
    let tick = show.step().unwrap();
    assert_eq!(tick.outcomes.iter().map(|o| o.id).collect::<Vec<_>>(), vec![a, b]);
    assert!(tick.outcomes.iter().all(|o| o.result.is_ok() && o.tick == 0));
    assert_eq!(show.next_row(), 3);
    assert_eq!(show.state().fired, vec![1, 2]);
    let f = tick.frame.unwrap();
    assert_eq!(f.character("Scholar").unwrap().mode, PlayerMode::TransferIn);
    assert_eq!(f.character("Shadow").unwrap().mode, PlayerMode::TransferIn);
    assert_eq!(f.character("Princess").unwrap().mode, PlayerMode::Empty);
}

#[test]
fn goto_rewinds_for_rehearsal() {
    let mut show = small();
    for _ in 0..3 {
        go(&mut show).unwrap();
    }
    assert_eq!(show.next_row(), 4);
    show.enqueue(TriggerCommand::Goto(1));
    show.step().unwrap();
    assert_eq!(show.next_row(), 1);
    go(&mut show).unwrap();
    assert_eq!(show.next_row(), 2);
    let cue = show.player("Scholar").unwrap().cue().unwrap();
    assert_eq!(cue.salient.clip_ref, "greet");

    for row in [0, 6] {
        show.enqueue(TriggerCommand::Goto(row));
        let o = show.step().unwrap().outcomes.remove(0);
        assert_eq!(o.result, Err(EngineError::RowOutOfRange { row, rows: 5 }));
    }
}

#[test]
fn set_param_changes_an_unfired_row() {
    let mut show = small();
    let set = |row, character: &str, param, value| TriggerCommand::SetParam {
        row,
        character: character.into(),
        param,
        value,
    };
    show.enqueue(set(5, "Shadow", CueParam::Rate, 0.8));
    show.enqueue(TriggerCommand::Goto(5));
    show.enqueue(TriggerCommand::Go);
    let tick = show.step().unwrap();
    assert!(tick.outcomes.iter().all(|o| o.result.is_ok()), "{:?}", tick.outcomes);
    let cue = show.player("Shadow").unwrap().cue().unwrap().clone();
    assert_eq!(cue.rate_salient, 0.8);
    // 3 s of clip at 0.8x lasts 3.75 s = 225 ticks, starting at tick 0.
    let mut first_idle = None;
    for _ in 0..300 {
        let f = show.step().unwrap().frame.unwrap();
        if first_idle.is_none() && f.character("Shadow").unwrap().mode == PlayerMode::IdleLoop {
            first_idle = Some(f.tick);
        }
    }
    assert_eq!(first_idle, Some(225));

    show.enqueue(set(5, "Shadow", CueParam::Rate, 2.0));
    show.enqueue(set(1, "Nobody", CueParam::In, 0.1));
    show.enqueue(set(2, "Shadow", CueParam::Rate, 0.0));
    show.enqueue(set(9, "Shadow", CueParam::Rate, 1.0));
    let r: Vec<_> = show.step().unwrap().outcomes.into_iter().map(|o| o.result).collect();
    assert_eq!(r[0], Err(EngineError::RowAlreadyFired));
    assert_eq!(r[0].as_ref().unwrap_err().to_string(), "row already fired");
    assert!(matches!(r[1], Err(EngineError::NoInstruction { .. })));
    assert!(matches!(r[2], Err(EngineError::BadValue { .. })));
    assert!(matches!(r[3], Err(EngineError::RowOutOfRange { .. })));
}

#[test]
fn pause_freezes_the_clock_and_pose() {
    let mut show = small();
    show.enqueue(TriggerCommand::Go);
    for _ in 0..50 {
        show.step().unwrap();
    }
    let before = show.clock();
    show.enqueue(TriggerCommand::Pause);
    for _ in 0..20 {
        let t = show.step().unwrap();
        assert!(t.frame.is_none());
    }
    assert!(show.is_paused());
    assert_eq!(show.clock(), before);
    show.enqueue(TriggerCommand::Resume);
    let f = show.step().unwrap().frame.unwrap();
    assert_eq!(f.tick, before + 1);
}

#[test]
fn points_are_projected_onto_the_shadow_plane() {
    let mut cfg = show_config();
    cfg.shadow_plane = Some(ShadowPlane::new(Vec3::ZERO, Vec3::Z).unwrap());
    let sheet = parse_cuesheet(SMALL).unwrap();
    let mut show = Show::new(&cfg, Arc::new(library()), sheet).unwrap();
    show.enqueue(TriggerCommand::Go);
    show.enqueue(TriggerCommand::Go);
    for _ in 0..90 {
        let f = show.step().unwrap().frame.unwrap();
        for c in &f.characters {
            let pts = c.points.as_ref().unwrap();
            assert_eq!(pts.len(), c.pose.rotations.len());
            assert!(pts.iter().all(|p| p.z == 0.0));
        }
    }

    // Without a plane, emit_points gives world positions; the root sits at
    // the root translation.
    cfg.shadow_plane = None;
    cfg.emit_points = true;
    let mut show = Show::new(&cfg, Arc::new(library()), parse_cuesheet(SMALL).unwrap()).unwrap();
    let f = show.step().unwrap().frame.unwrap();
    for c in &f.characters {
        assert_eq!(c.points.as_ref().unwrap()[0], c.pose.root_translation);
    }
}

#[derive(Debug, Clone)]
enum Cmd {
    Go,
    Goto(usize),
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Commands queued within one tick take effect in arrival order, exactly
    /// as if applied one by one.
    #[test]
    fn queue_is_fifo(cmds in prop::collection::vec(prop_oneof![Just(Cmd::Go), (0usize..7).prop_map(Cmd::Goto)], 1..12)) {
        let mut show = small();
        for c in &cmds {
            show.enqueue(match c { Cmd::Go => TriggerCommand::Go, Cmd::Goto(n) => TriggerCommand::Goto(*n) });
        }
        let tick = show.step().unwrap();

        let mut next = 1usize;
        let mut fired = BTreeSet::new();
        let mut expect = Vec::new();
        for c in &cmds {
            match c {
                Cmd::Go if next <= 5 => { fired.insert(next); next += 1; expect.push(true) }
                Cmd::Go => expect.push(false),
                Cmd::Goto(n) if (1..=5).contains(n) => { next = *n; expect.push(true) }
                Cmd::Goto(_) => expect.push(false),
            }
        }
        let ids: Vec<u64> = tick.outcomes.iter().map(|o| o.id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        prop_assert_eq!(ids, sorted);
        prop_assert_eq!(tick.outcomes.iter().map(|o| o.result.is_ok()).collect::<Vec<_>>(), expect);
        prop_assert_eq!(show.next_row(), next);
        prop_assert_eq!(show.state().fired, fired.into_iter().collect::<Vec<_>>());
    }
}

/// Every row of the fixture sheet fires, some interrupting others; a sheet
/// that validates never fails to evaluate, and characters wait in their idle
/// loops between cues.
#[test]
fn fixture_sheet_runs_to_completion_and_idles_between_cues() {
    let mut show = build_show(&show_config()).unwrap();
    let rows = show.sheet().rows.len();
    for row in 0..rows {
        show.enqueue(TriggerCommand::Go);
        // Alternate long and short gaps so some cues interrupt salients.
        let gap = if row % 3 == 2 { 40 } else { 400 };
        for _ in 0..gap {
            show.step().unwrap();
        }
        if gap == 400 {
            for c in show.state().characters {
                assert!(matches!(c.mode, PlayerMode::Empty | PlayerMode::IdleLoop), "row {} {}: {}", row + 1, c.name, c.mode);
            }
        }
    }
    assert_eq!(go(&mut show), Err(EngineError::EndOfSheet));
    assert!(show.state().characters.iter().all(|c| c.mode != PlayerMode::Empty));
}

fn run_stream(sched: &str, ticks: u64) -> Vec<u8> {
    let mut show = build_show(&show_config()).unwrap();
    let schedule = parse_schedule(sched).unwrap();
    let mut out = Vec::new();
    write_stream(&mut show, &schedule, ticks, &mut out).unwrap();
    out
}

#[test]
fn simulate_is_deterministic_and_records_errors() {
    let sched = "0 GO\n10 GOTO 99\n20 GO\n20 SET 1 Shadow rate 2.0\n";
    let a = run_stream(sched, 120);
    let b = run_stream(sched, 120);
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let errors: Vec<&str> = text.lines().filter(|l| l.starts_with('E')).collect();
    assert_eq!(errors.len(), 2, "{errors:?}");
    assert!(errors[0].starts_with("E 10 GOTO 99 "));
    assert!(errors[1].contains("row already fired"));
    assert_eq!(text.lines().filter(|l| l.starts_with('F')).count(), 120);
    assert!(text.lines().last().unwrap().starts_with("F 120 2.0 "));
}

#[test]
fn empty_schedule_gives_rest_frames() {
    let text = String::from_utf8(run_stream("", 100)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 100);
    assert!(lines.iter().all(|l| l.matches(" empty ").count() == 5));
}

#[test]
fn golden_frames() {
    let sched = std::fs::read_to_string(fixtures().join("golden.sched")).unwrap();
    let got = run_stream(&sched, 100);
    let path = fixtures().join("golden.frames");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read(&path).expect("golden.frames missing; run with UPDATE_GOLDEN=1");
    if got != want {
        let g = String::from_utf8_lossy(&got);
        let w = String::from_utf8_lossy(&want);
        let (n, (gl, wl)) = g.lines().zip(w.lines()).enumerate().find(|(_, (a, b))| a != b).unwrap_or((0, ("", "")));
        panic!("frame stream differs from golden at line {}:\n got: {:.200}\nwant: {:.200}", n + 1, gl, wl);
    }
}
