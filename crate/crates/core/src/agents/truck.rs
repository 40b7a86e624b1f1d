//! Truck baseline: one pass per day over a fixed route at a constant service
//! rate.

use serde::{Deserialize, Serialize};

use crate::agents::TrashBin;
use crate::{Milliliters, Minutes};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Truck {
    /// Bin indices in visiting order; covers every bin exactly once.
    pub route: Vec<usize>,
    pub bins_per_hour: f64,
    /// Daily active window, minutes after midnight.
    pub window_start: Minutes,
    pub window_end: Minutes,
    /// Next route position to service (resets each day).
    pub next_stop: usize,
    pub collected: Milliliters,
    /// Scheduled time of the most recent service, minutes after the current
    /// day's window start.
    pub last_service_offset: Option<Minutes>,
}

impl Truck {
    pub fn new(route: Vec<usize>, bins_per_hour: f64, window_start: Minutes, window_end: Minutes) -> Self {
        assert!(bins_per_hour > 0.0);
        Truck {
            route,
            bins_per_hour,
            window_start,
            window_end,
            next_stop: 0,
            collected: 0,
            last_service_offset: None,
        }
    }

    /// Minutes between consecutive bin services.
    pub fn service_interval(&self) -> Minutes {
        60.0 / self.bins_per_hour
    }

    pub fn start_new_day(&mut self) {
        self.next_stop = 0;
    }

    /// Service every bin whose scheduled time has been reached.
    ///
    /// Bin `i` on the route (0-based) is emptied at
    /// `window_start + (i + 1) * interval`, i.e. 240 bins/hour drains one bin
    /// every 15 seconds.
    pub fn tick(&mut self, bins: &mut [TrashBin], now: Minutes, day_start: Minutes) {
        let interval = self.service_interval();
        while self.next_stop < self.route.len() {
            let scheduled = day_start + self.window_start + (self.next_stop as f64 + 1.0) * interval;
            if scheduled > now || scheduled > day_start + self.window_end {
                break;
            }
            let bin = self.route[self.next_stop];
            self.collected += bins[bin].empty();
            self.last_service_offset = Some(scheduled - day_start - self.window_start);
            self.next_stop += 1;
        }
    }
}
