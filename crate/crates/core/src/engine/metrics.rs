//! Metric accumulation: time averages of uncollected waste and full bins.

use serde::{Deserialize, Serialize};

use crate::Milliliters;

/// Integer accumulators keep the time averages exact up to the final
/// division.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct MetricAccum {
    pub ticks: u64,
    /// Sum over ticks of instantaneous uncollected waste, milliliters.
    pub uncollected_sum: i128,
    /// Sum over ticks of the instantaneous full-bin count.
    pub full_bins_sum: u64,
}

impl MetricAccum {
    pub fn record(&mut self, uncollected: Milliliters, full_bins: u32) {
        self.ticks += 1;
        self.uncollected_sum += uncollected as i128;
        self.full_bins_sum += full_bins as u64;
    }

    /// Time-averaged uncollected waste as a fraction of total bin capacity.
    pub fn aut_fraction(&self, bin_count: usize, bin_capacity: Milliliters) -> f64 {
        if self.ticks == 0 || bin_count == 0 {
            return 0.0;
        }
        let mean_ml = self.uncollected_sum as f64 / self.ticks as f64;
        mean_ml / (bin_count as f64 * bin_capacity as f64)
    }

    /// Time-averaged full-bin count as a fraction of the bin count.
    pub fn ftb_fraction(&self, bin_count: usize) -> f64 {
        if self.ticks == 0 || bin_count == 0 {
            return 0.0;
        }
        self.full_bins_sum as f64 / self.ticks as f64 / bin_count as f64
    }
}

/// Per-run result: configuration echo lives alongside in output files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DayMetrics {
    /// Time-averaged uncollected waste over total bin capacity, in [0, 1].
    pub aut_pct: f64,
    /// Time-averaged full-bin fraction, in [0, 1].
    pub ftb_pct: f64,
    pub generated_l: f64,
    pub delivered_l: f64,
    pub picked_up_l: f64,
    pub truck_collected_l: f64,
}

/// One row of the per-tick trace CSV.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub tick: u64,
    pub uncollected_liters: f64,
    pub full_bins: u32,
    pub robots_wandering: u32,
    pub robots_carrying: u32,
    pub robots_recharging: u32,
    pub delivered_liters: f64,
}
