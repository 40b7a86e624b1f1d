//! Run configuration: one flat, documented key set shared by the engine, the
//! sweep harness, and the CLI config files.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stigmergy::PheromoneParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Multi-place foraging: the robot swarm with several deposits.
    Mpf,
    /// Central-place foraging: the same swarm with a single deposit.
    Cpf,
    /// The once-a-day collection truck, no robots.
    Truck,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Swarm size (R_n).
    pub robots: u32,
    /// Evaporation rate per minute (E_r), in [0, 1].
    pub evaporation_rate: f64,
    /// Exploitation rate (X_r), in (0, 1]. Diffusion rate is 1 - X_r.
    pub exploitation_rate: f64,
    /// Transportable unit size (C_w), liters.
    pub unit_size_l: f64,
    /// Number of deposits (D_n). Forced to 1 in CPF mode.
    pub deposits: u32,
    /// Waste parcel per citizen per day, liters.
    pub lambda_l: f64,
    /// Bin detection radius for citizens, meters.
    pub phi_m: f64,
    pub citizens: u32,
    /// Pheromone units added per liter of waste found (P_a).
    pub pheromone_per_liter: f64,
    /// Exclude the edge a robot arrived from when wandering.
    pub exclude_arrival_edge: bool,
    pub bin_capacity_l: f64,
    pub citizen_speed_m_min: f64,
    pub robot_speed_m_min: f64,
    /// Full battery range, meters.
    pub robot_range_m: f64,
    /// Recharge triggers when range <= safety_factor * nearest-deposit
    /// distance.
    pub safety_factor: f64,
    pub tick_secs: f64,
    /// Simulated day span; metrics average over the whole span.
    pub days: u32,
    pub seed: u64,
    /// Start robots at deposits (round-robin) or at seeded random crossroads.
    pub robots_start_random: bool,
    pub kmeans_max_iters: u32,
    pub truck_bins_per_hour: f64,
    /// Truck window, hours after midnight.
    pub truck_window_start_h: f64,
    pub truck_window_end_h: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Mpf,
            robots: 20,
            evaporation_rate: 0.15,
            exploitation_rate: 0.75,
            unit_size_l: 12.0,
            deposits: 3,
            lambda_l: 8.42,
            phi_m: 50.0,
            citizens: 10_000,
            pheromone_per_liter: 1.0,
            exclude_arrival_edge: true,
            bin_capacity_l: 125.0,
            citizen_speed_m_min: 80.0,
            robot_speed_m_min: 250.0,
            robot_range_m: 30_000.0,
            safety_factor: 1.1,
            tick_secs: 5.0,
            days: 1,
            seed: 0,
            robots_start_random: false,
            kmeans_max_iters: 100,
            truck_bins_per_hour: 240.0,
            truck_window_start_h: 7.0,
            truck_window_end_h: 12.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config key `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: String) -> ConfigError {
    ConfigError::Invalid { key, message }
}

impl RunConfig {
    pub fn pheromone_params(&self) -> PheromoneParams {
        PheromoneParams {
            evaporation_rate: self.evaporation_rate,
            exploitation_rate: self.exploitation_rate,
            per_liter: self.pheromone_per_liter,
            exclude_arrival_edge: self.exclude_arrival_edge,
        }
    }

    pub fn tick_minutes(&self) -> f64 {
        self.tick_secs / 60.0
    }

    pub fn ticks_per_day(&self) -> u64 {
        (24.0 * 3600.0 / self.tick_secs).round() as u64
    }

    /// Validate invariants. Returns warnings for parameter values outside the
    /// reference sweep ranges (legal, but flagged).
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        if !(0.0..=1.0).contains(&self.evaporation_rate) {
            return Err(invalid(
                "evaporation_rate",
                format!("must satisfy 0 <= E_r <= 1, got {}", self.evaporation_rate),
            ));
        }
        if !(self.exploitation_rate > 0.0 && self.exploitation_rate <= 1.0) {
            return Err(invalid(
                "exploitation_rate",
                format!("must satisfy 0 < X_r <= 1, got {}", self.exploitation_rate),
            ));
        }
        for (key, value) in [
            ("unit_size_l", self.unit_size_l),
            ("lambda_l", self.lambda_l),
            ("bin_capacity_l", self.bin_capacity_l),
            ("citizen_speed_m_min", self.citizen_speed_m_min),
            ("robot_speed_m_min", self.robot_speed_m_min),
            ("robot_range_m", self.robot_range_m),
            ("tick_secs", self.tick_secs),
            ("pheromone_per_liter", self.pheromone_per_liter),
            ("truck_bins_per_hour", self.truck_bins_per_hour),
        ] {
            if value <= 0.0 || !value.is_finite() {
                return Err(invalid(key, format!("must be positive and finite, got {value}")));
            }
        }
        if self.phi_m < 0.0 {
            return Err(invalid("phi_m", format!("must be non-negative, got {}", self.phi_m)));
        }
        if self.safety_factor < 1.0 {
            return Err(invalid(
                "safety_factor",
                format!("must be at least 1, got {}", self.safety_factor),
            ));
        }
        if self.days == 0 {
            return Err(invalid("days", "must be at least 1".into()));
        }
        if self.deposits == 0 && self.mode != Mode::Truck {
            return Err(invalid("deposits", "must be at least 1".into()));
        }
        if self.mode == Mode::Cpf && self.deposits != 1 {
            return Err(invalid(
                "deposits",
                format!("cpf mode forces a single deposit, got {}", self.deposits),
            ));
        }
        if self.mode == Mode::Truck && self.robots != 0 {
            return Err(invalid(
                "robots",
                format!("truck mode forces zero robots, got {}", self.robots),
            ));
        }
        if !(0.0..=24.0).contains(&self.truck_window_start_h)
            || !(0.0..=24.0).contains(&self.truck_window_end_h)
            || self.truck_window_start_h >= self.truck_window_end_h
        {
            return Err(invalid(
                "truck_window_start_h",
                format!(
                    "window [{}, {}] must lie within one day with start < end",
                    self.truck_window_start_h, self.truck_window_end_h
                ),
            ));
        }

        let mut warnings = Vec::new();
        let mut flag = |key: &str, shown: String, swept: &str| {
            warnings.push(format!("{key} = {shown} is outside the reference sweep set {swept}"));
        };
        if self.mode != Mode::Truck {
            if ![20, 35, 50].contains(&self.robots) {
                flag("robots", self.robots.to_string(), "{20, 35, 50}");
            }
            if ![0.05, 0.15, 0.30].contains(&self.evaporation_rate) {
                flag("evaporation_rate", self.evaporation_rate.to_string(), "{0.05, 0.15, 0.30}");
            }
            if ![0.6, 0.75, 0.9].contains(&self.exploitation_rate) {
                flag("exploitation_rate", self.exploitation_rate.to_string(), "{0.6, 0.75, 0.9}");
            }
            if ![6.0, 12.0, 18.0].contains(&self.unit_size_l) {
                flag("unit_size_l", self.unit_size_l.to_string(), "{6, 12, 18}");
            }
            if self.mode == Mode::Mpf && ![2, 3, 5].contains(&self.deposits) {
                flag("deposits", self.deposits.to_string(), "{2, 3, 5}");
            }
        }
        Ok(warnings)
    }
}
