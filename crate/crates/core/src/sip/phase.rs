use crate::anim::Segment;

/// Clip time of an idle loop `u` seconds after it started.
///
/// The segment plays forward, then backward, then forward again, forever:
/// a triangle wave with period `2 * length / rate`. Within
/// `xfade_turnaround / 2` of either turning point the triangle is replaced
/// by a parabola that meets it with matching value and slope and comes to
/// rest at the apex, so playback speed changes continuously and clip time
/// never leaves the segment. Negative `u` extends the wave backwards.
pub fn idle_phase(u: f64, seg: &Segment, rate: f64, xfade_turnaround: f64) -> f64 {
    let (start, end) = (seg.start_s, seg.end_s);
    let length = end - start;
    if length <= 0.0 || !(rate > 0.0) {
        return start;
    }
    let leg = length / rate;
    let half = (xfade_turnaround.max(0.0) * 0.5).min(leg * 0.5);
    let p = u.rem_euclid(2.0 * leg);

    // Distance from the bottom (start) apex and from the top (end) apex.
    let (from_bottom, from_top) = if p < leg { (p, leg - p) } else { (2.0 * leg - p, p - leg) };
    let clip_time = if from_bottom < half {
        start + rate * half * 0.5 + rate / (2.0 * half) * from_bottom * from_bottom
    } else if from_top < half {
        end - rate * half * 0.5 - rate / (2.0 * half) * from_top * from_top
    } else if p < leg {
        start + rate * p
    } else {
        end - rate * (p - leg)
    };
    clip_time.clamp(start, end)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg() -> Segment {
        Segment::idle("c", 2.0, 4.0)
    }

    #[test]
    fn triangle_wave_over_one_period() {
        let s = seg();
        let got: Vec<f64> = [0.0, 1.0, 2.0, 3.0, 4.0].iter().map(|&u| idle_phase(u, &s, 1.0, 0.0)).collect();
        assert_eq!(got, vec![2.0, 3.0, 4.0, 3.0, 2.0]);
    }

    #[test]
    fn rate_shortens_the_leg() {
        assert_eq!(idle_phase(1.0, &seg(), 2.0, 0.0), 4.0);
        assert_eq!(idle_phase(0.5, &seg(), 2.0, 0.0), 3.0);
    }

    #[test]
    fn held_pose_for_zero_length() {
        let s = Segment::idle("c", 1.5, 1.5);
        for u in [0.0, 0.3, 10.0, 1e6] {
            assert_eq!(idle_phase(u, &s, 1.0, 0.4), 1.5);
        }
    }

    #[test]
    fn eased_turnaround_meets_the_triangle() {
        let s = seg();
        let (rate, xf) = (1.0, 0.4);
        let h = 0.2;
        // Borders of the top window.
        for u in [2.0 - h, 2.0 + h] {
            assert!((idle_phase(u, &s, rate, xf) - (4.0 - h)).abs() < 1e-12);
        }
        // Apex sits inside the segment, below the end.
        assert!((idle_phase(2.0, &s, rate, xf) - (4.0 - h / 2.0)).abs() < 1e-12);
        // Bottom apex, both sides of the wrap.
        assert!((idle_phase(0.0, &s, rate, xf) - (2.0 + h / 2.0)).abs() < 1e-12);
        assert!((idle_phase(4.0 - 1e-9, &s, rate, xf) - (2.0 + h / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn turnaround_longer_than_leg_is_clamped() {
        let s = seg();
        for i in 0..400 {
            let u = i as f64 * 0.01;
            let v = idle_phase(u, &s, 1.0, 10.0);
            assert!((2.0..=4.0).contains(&v));
        }
    }
}
