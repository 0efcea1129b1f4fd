mod common;

use std::sync::Arc;

use proptest::prelude::*;
use shadowstage_core::anim::{clip_stats, sample_clip, Pose, Segment};
use shadowstage_core::motion_io::ClipLibrary;
use shadowstage_core::sip::{
    idle_phase, split_salient, BlendCurve, LibrarySource, PlayerMode, PlayerState, SalientIdleCue,
    ShowTime, SipError,
};

const RATE: u32 = 60;

fn cue(clip: &str, salient: (f64, f64), idle: (f64, f64)) -> SalientIdleCue {
    SalientIdleCue {
        character: "A".into(),
        salient: Segment::salient(clip, salient.0, salient.1),
        idle: Segment::idle(clip, idle.0, idle.1),
        rate_salient: 1.0,
        rate_idle: 1.0,
        xfade_in: 0.0,
        xfade_salient_to_idle: 0.0,
        xfade_turnaround: 0.0,
    }
}

fn tick(k: i64) -> ShowTime {
    ShowTime::from_ticks(k, RATE)
}

fn max_joint_delta(a: &Pose, b: &Pose) -> f64 {
    a.rotations.iter().zip(&b.rotations).map(|(p, q)| p.angle_to(*q)).fold(0.0, f64::max)
}

fn omega_max(lib: &ClipLibrary, clips: &[&str]) -> f64 {
    clips.iter().map(|c| clip_stats(lib.clip(c).unwrap()).max_angular_velocity()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn idle_phase_stays_inside_the_segment(
        u in -1e4f64..1e4,
        start in 0.0f64..10.0,
        len in 0.0f64..5.0,
        rate in 0.05f64..4.0,
        turnaround in 0.0f64..3.0,
    ) {
        let seg = Segment::idle("c", start, start + len);
        let p = idle_phase(u, &seg, rate, turnaround);
        prop_assert!(p >= seg.start_s && p <= seg.end_s, "{p} outside [{}:{}]", seg.start_s, seg.end_s);
    }

    /// Clip time never moves faster than the playback rate.
    #[test]
    fn idle_phase_speed_is_bounded(
        u in 0.0f64..100.0,
        du in 1e-6f64..0.05,
        len in 0.1f64..5.0,
        rate in 0.05f64..4.0,
        turnaround in 0.0f64..3.0,
    ) {
        let seg = Segment::idle("c", 1.0, 1.0 + len);
        let a = idle_phase(u, &seg, rate, turnaround);
        let b = idle_phase(u + du, &seg, rate, turnaround);
        prop_assert!((b - a).abs() <= rate * du * (1.0 + 1e-9) + 1e-12);
    }
}

#[test]
fn idle_phase_runs_forward_then_back() {
    let seg = Segment::idle("c", 2.0, 4.0);
    assert_eq!(idle_phase(0.0, &seg, 1.0, 0.0), 2.0);
    assert_eq!(idle_phase(1.0, &seg, 1.0, 0.0), 3.0);
    assert_eq!(idle_phase(2.0, &seg, 1.0, 0.0), 4.0);
    assert_eq!(idle_phase(3.0, &seg, 1.0, 0.0), 3.0);
    assert_eq!(idle_phase(4.0, &seg, 1.0, 0.0), 2.0);
    // The eased apex never quite reaches the end.
    assert!(idle_phase(2.0, &seg, 1.0, 0.4) < 4.0);
}

/// The breathe idle with a 0.4 s turnaround, run for a minute: every tick to
/// tick joint change stays under the clip's own angular speed.
#[test]
fn idle_loop_is_seamless_for_a_minute() {
    let lib = common::library();
    let src = LibrarySource::new(&lib, lib.clip_skeleton("breathe").unwrap());
    let mut c = cue("breathe", (0.5, 2.5), (2.5, 6.5));
    c.xfade_turnaround = 0.4;
    let state = PlayerState::IdleLoop { cue: Arc::new(c), loop_started_at: tick(0) };
    let bound = 1.0 / RATE as f64 * omega_max(&lib, &["breathe"]) * 1.05 + 1e-6;
    let mut prev = state.evaluate(tick(0), &src, BlendCurve::Linear).unwrap();
    let mut worst = 0.0f64;
    for k in 1..=60 * RATE as i64 {
        let p = state.evaluate(tick(k), &src, BlendCurve::Linear).unwrap();
        worst = worst.max(max_joint_delta(&prev, &p));
        prev = p;
    }
    assert!(worst <= bound, "worst {worst} > bound {bound}");
}

#[test]
fn idle_loop_repeats_bit_for_bit() {
    let lib = common::library();
    let src = LibrarySource::new(&lib, lib.clip_skeleton("breathe").unwrap());
    let mut c = cue("breathe", (0.5, 2.5), (2.5, 6.5));
    c.xfade_turnaround = 0.4;
    let start = tick(37);
    let state = PlayerState::IdleLoop { cue: Arc::new(c), loop_started_at: start };
    // Legs of 4 s: period 8 s, 480 ticks.
    let period = 480;
    for k in [0, 1, 59, 120, 239, 240, 241, 300, 419, 479] {
        let t = start.tick() + k;
        let base = state.evaluate(tick(t), &src, BlendCurve::Linear).unwrap();
        for n in [1, 2, 7, 1000] {
            let later = state.evaluate(tick(t + n * period), &src, BlendCurve::Linear).unwrap();
            assert_eq!(later, base, "tick offset {k}, {n} periods");
        }
    }
}

/// Three cues in a row, each fired while the previous one idles, with every
/// crossfade at least 0.2 s.
#[test]
fn cue_changes_are_continuous() {
    let lib = common::library();
    let src = LibrarySource::new(&lib, lib.clip_skeleton("greet").unwrap());
    let mut cues = vec![
        cue("greet", (1.0, 4.0), (4.0, 5.5)),
        cue("bow", (0.8, 3.3), (3.3, 4.6)),
        cue("point", (0.6, 3.0), (3.0, 4.4)),
    ];
    for (i, c) in cues.iter_mut().enumerate() {
        c.xfade_in = 0.2 + 0.1 * i as f64;
        c.xfade_salient_to_idle = 0.3;
        c.xfade_turnaround = 0.25;
        c.rate_salient = [1.0, 1.2, 0.8][i];
    }
    let fire_at = [30_i64, 400, 800];
    let bound = 1.2 / RATE as f64 * omega_max(&lib, &["greet", "bow", "point"]) * 1.05 + 1e-6;

    let mut state = PlayerState::Empty;
    let mut prev = state.evaluate(tick(0), &src, BlendCurve::Linear).unwrap();
    let mut worst = 0.0f64;
    for k in 0..1200 {
        if let Some(i) = fire_at.iter().position(|&f| f == k) {
            state = state.apply_cue(Arc::new(cues[i].clone()), tick(k));
        }
        state = state.settle(tick(k + 1));
        let p = state.evaluate(tick(k + 1), &src, BlendCurve::Linear).unwrap();
        worst = worst.max(max_joint_delta(&prev, &p));
        prev = p;
    }
    assert_eq!(state.mode(), PlayerMode::IdleLoop);
    assert!(worst <= bound, "worst {worst} > bound {bound}");
}

/// A salient split with zero dwell in the idle plays back exactly like the
/// unsplit salient.
#[test]
fn split_with_zero_dwell_matches_the_original() {
    let lib = common::library();
    let src = LibrarySource::new(&lib, lib.clip_skeleton("reach60").unwrap());
    let clip = lib.clip("reach60").unwrap();
    let whole = Segment::salient("reach60", 0.0, 3.0);
    let (a, i, b) = split_salient(&whole, 1.0, 2.0).unwrap();
    let first = SalientIdleCue { salient: a, idle: i.clone(), ..cue("reach60", (0.0, 0.0), (0.0, 0.0)) };
    let tail = Segment::idle("reach60", 3.0, 4.0);
    let second = SalientIdleCue { salient: b, idle: tail, ..first.clone() };

    let mut state = PlayerState::Empty.apply_cue(Arc::new(first), tick(0));
    // Through B and the first forward leg of its idle.
    for k in 0..=240 {
        if k == 120 {
            state = state.apply_cue(Arc::new(second.clone()), tick(k));
        }
        state = state.settle(tick(k));
        let got = state.evaluate(tick(k), &src, BlendCurve::Linear).unwrap();
        let want = sample_clip(clip, k as f64 / 60.0).unwrap();
        assert_eq!(got, want, "tick {k}");
    }
}

#[test]
fn split_rejects_bad_cuts() {
    let s = Segment::salient("c", 1.0, 3.0);
    assert!(matches!(split_salient(&s, 2.5, 2.0), Err(SipError::InvalidSplit(_))));
    assert!(split_salient(&s, 0.5, 2.0).is_err());
    assert!(split_salient(&Segment::idle("c", 1.0, 3.0), 1.5, 2.0).is_err());
    let (a, i, b) = split_salient(&s, 1.0, 1.0).unwrap();
    assert_eq!((a.length(), i.length(), b.length()), (0.0, 0.0, 2.0));
}

/// A cue fired mid-salient starts from whatever was on screen and lands on
/// the new salient's first frame when the transfer ends.
#[test]
fn interruption_blends_from_the_live_output() {
    let lib = common::library();
    let src = LibrarySource::new(&lib, lib.clip_skeleton("greet").unwrap());
    let first = cue("greet", (1.0, 4.0), (4.0, 5.5));
    let mut second = cue("walk", (0.8, 3.8), (3.8, 5.6));
    second.xfade_in = 0.5;

    let running = PlayerState::Empty.apply_cue(Arc::new(first), tick(0));
    let before = running.evaluate(tick(90), &src, BlendCurve::Linear).unwrap();
    let state = running.apply_cue(Arc::new(second), tick(90));
    assert_eq!(state.mode(), PlayerMode::TransferIn);
    assert_eq!(state.evaluate(tick(90), &src, BlendCurve::Linear).unwrap(), before);

    let landed = state.evaluate(tick(120), &src, BlendCurve::Smoothstep).unwrap();
    let first_frame = sample_clip(lib.clip("walk").unwrap(), 0.8).unwrap();
    assert_eq!(landed, first_frame);
    assert_eq!(state.settle(tick(120)).mode(), PlayerMode::Salient);
}

#[test]
fn clamping_reports_what_changed() {
    let mut c = cue("breathe", (0.5, 1.0), (2.5, 4.0));
    c.xfade_salient_to_idle = 0.8;
    c.xfade_turnaround = 2.0;
    let (fixed, notes) = c.clamped();
    assert_eq!(fixed.xfade_salient_to_idle, 0.5);
    assert_eq!(fixed.xfade_turnaround, 1.5);
    assert_eq!(notes.len(), 2);
    assert_eq!(notes[1].param, "loopxfade");
    c.rate_idle = 0.0;
    assert!(c.check().is_err());
}
