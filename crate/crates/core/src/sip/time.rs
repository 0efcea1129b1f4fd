use std::cmp::Ordering;

/// A point on a show timeline: whole ticks of a fixed-rate clock plus a
/// sub-tick remainder in seconds.
///
/// Keeping the integer part separate lets loop phases be reduced modulo a
/// whole number of ticks exactly, so an idle loop whose period is an integer
/// tick count repeats bit for bit no matter how long the show runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShowTime {
    tick: i64,
    /// Seconds past `tick`, in `[0, 1/rate)`.
    sub: f64,
    rate: u32,
}

impl ShowTime {
    pub fn from_ticks(tick: i64, rate: u32) -> Self {
        assert!(rate > 0, "tick rate must be positive");
        ShowTime { tick, sub: 0.0, rate }
    }

    pub fn from_secs(secs: f64, rate: u32) -> Self {
        ShowTime::from_ticks(0, rate).add_secs(secs)
    }

    pub fn tick(self) -> i64 {
        self.tick
    }

    pub fn sub_tick(self) -> f64 {
        self.sub
    }

    pub fn rate(self) -> u32 {
        self.rate
    }

    pub fn as_secs(self) -> f64 {
        self.tick as f64 / self.rate as f64 + self.sub
    }

    pub fn add_secs(self, secs: f64) -> ShowTime {
        if secs == 0.0 {
            return self;
        }
        let rate = self.rate as f64;
        let total = self.sub + secs;
        let whole = (total * rate).floor();
        let mut tick = self.tick + whole as i64;
        let mut sub = total - whole / rate;
        let step = 1.0 / rate;
        if sub >= step {
            sub -= step;
            tick += 1;
        }
        if sub < 0.0 {
            sub += step;
            tick -= 1;
        }
        ShowTime { tick, sub: sub.clamp(0.0, step), rate: self.rate }
    }

    /// `self - earlier` in seconds.
    pub fn secs_since(self, earlier: ShowTime) -> f64 {
        debug_assert_eq!(self.rate, earlier.rate);
        (self.tick - earlier.tick) as f64 / self.rate as f64 + (self.sub - earlier.sub)
    }

    /// Seconds since `start`, reduced modulo `period` through the whole-tick
    /// count first. When `period` spans an integer number of ticks, times one
    /// period apart map to bitwise identical values.
    pub fn loop_secs_since(self, start: ShowTime, period: f64) -> f64 {
        debug_assert_eq!(self.rate, start.rate);
        let rate = self.rate as f64;
        let ticks = (self.tick - start.tick) as f64;
        let period_ticks = period * rate;
        let reduced = if period_ticks.is_finite() && period_ticks > 0.0 {
            ticks % period_ticks
        } else {
            ticks
        };
        reduced / rate + (self.sub - start.sub)
    }
}

impl PartialOrd for ShowTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.tick.cmp(&other.tick) {
            Ordering::Equal => self.sub.partial_cmp(&other.sub),
            o => Some(o),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_difference() {
        let t = ShowTime::from_ticks(10, 60);
        let u = t.add_secs(0.25);
        assert_eq!(u.tick(), 25);
        assert!(u.sub_tick().abs() < 1e-12 || (u.sub_tick() - 1.0 / 60.0).abs() < 1e-12);
        assert!((u.secs_since(t) - 0.25).abs() < 1e-12);
        let v = t.add_secs(0.001);
        assert_eq!(v.tick(), 10);
        assert!((v.sub_tick() - 0.001).abs() < 1e-15);
        assert!(v > t && u > v);
    }

    #[test]
    fn negative_offsets_borrow_ticks() {
        let t = ShowTime::from_ticks(10, 60).add_secs(-0.001);
        assert_eq!(t.tick(), 9);
        assert!((t.as_secs() - (10.0 / 60.0 - 0.001)).abs() < 1e-12);
    }

    #[test]
    fn loop_reduction_is_exact_for_whole_tick_periods() {
        let start = ShowTime::from_secs(1.2345, 60);
        for n in [200_i64, 777, 12_345, 179_999] {
            let a = ShowTime::from_ticks(n, 60).loop_secs_since(start, 2.0);
            let b = ShowTime::from_ticks(n + 120, 60).loop_secs_since(start, 2.0);
            let c = ShowTime::from_ticks(n + 120 * 500, 60).loop_secs_since(start, 2.0);
            assert_eq!(a.to_bits(), b.to_bits());
            assert_eq!(a.to_bits(), c.to_bits());
        }
    }
}
