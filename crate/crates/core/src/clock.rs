//! Injectable monotonic clock so timing-dependent code can be tested with
//! scripted readings.

use std::sync::Mutex;
use std::time::{Duration, Instant};

/// A monotonic time source. Durations are differences between successive
/// readings.
pub trait Clock {
    fn now(&self) -> Duration;
}

/// Wall clock backed by `std::time::Instant`.
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

/// Scripted clock: each `now()` call pops the next reading. Once the script
/// is exhausted the last reading repeats, so trailing measurements collapse
/// to zero instead of panicking.
pub struct FakeClock {
    readings: Vec<Duration>,
    cursor: Mutex<usize>,
}

impl FakeClock {
    pub fn new(readings: Vec<Duration>) -> Self {
        Self {
            readings,
            cursor: Mutex::new(0),
        }
    }

    /// Convenience: builds the reading script from consecutive phase
    /// durations, assuming exactly two `now()` calls per timed phase
    /// (start and end).
    pub fn from_phase_durations(durations: &[Duration]) -> Self {
        let mut readings = Vec::with_capacity(durations.len() * 2);
        let mut t = Duration::ZERO;
        for d in durations {
            readings.push(t);
            t += *d;
            readings.push(t);
        }
        Self::new(readings)
    }
}

impl Clock for FakeClock {
    fn now(&self) -> Duration {
        let mut cursor = self.cursor.lock().unwrap();
        let reading = self
            .readings
            .get(*cursor)
            .or_else(|| self.readings.last())
            .copied()
            .unwrap_or(Duration::ZERO);
        *cursor += 1;
        reading
    }
}
