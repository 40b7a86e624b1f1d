//! Deterministic discrete-time simulation loop.
//!
//! A run is a pure function of (config, scenario): agents execute in a fixed
//! order per tick (citizens by id, robots by id, then the truck) against a
//! single seeded RNG stream, so identical inputs replay bit-identically.

mod config;
mod metrics;

pub use config::{ConfigError, Mode, RunConfig};
pub use metrics::{DayMetrics, MetricAccum, TraceRow};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    Citizen, CitizenCtx, PlannedTrip, Robot, RobotCtx, RobotState, TrashBin, Truck,
};
use crate::scenario::{
    build_routing, kmeans::place_deposits, BuildingKind, DepositSet, RoutingTable, Scenario,
    ScenarioError,
};
use crate::stigmergy::CrossroadTag;
use crate::{liters_to_ml, ml_to_liters, Milliliters, Minutes};

const SNAPSHOT_FORMAT: &str = "urbanswarm-snapshot";
const SNAPSHOT_VERSION: u32 = 1;

// Citizen activity windows, minutes after midnight.
const MORNING: (f64, f64) = (7.0 * 60.0, 9.0 * 60.0);
const MIDDAY: (f64, f64) = (11.5 * 60.0, 13.5 * 60.0);
const EVENING: (f64, f64) = (17.0 * 60.0, 19.0 * 60.0);

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("config and scenario are incompatible: {0}")]
    Incompatible(String),
    #[error("snapshot is corrupt: {0}")]
    Corrupt(String),
    #[error("snapshot version {found} unsupported (expected {expected})")]
    Version { found: u32, expected: u32 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct Counters {
    pub generated: Milliliters,
    pub delivered: Milliliters,
    pub picked_up: Milliliters,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    state: SimState,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimState {
    pub config: RunConfig,
    pub scenario: Arc<Scenario>,
    pub deposits: DepositSet,
    pub routing: Option<RoutingTable>,
    pub tags: Vec<CrossroadTag>,
    pub bins: Vec<TrashBin>,
    pub citizens: Vec<Citizen>,
    pub robots: Vec<Robot>,
    pub truck: Option<Truck>,
    pub rng: ChaCha8Rng,
    pub tick_index: u64,
    pub accum: MetricAccum,
    pub counters: Counters,
    #[serde(skip)]
    paths: crate::agents::citizen::PathCache,
}

impl SimState {
    pub fn init(config: RunConfig, scenario: Arc<Scenario>) -> Result<Self, EngineError> {
        config.validate()?;

        // Deposits: from the scenario file when present, otherwise placed by
        // k-means over bin positions.
        let deposits = if !scenario.deposits.is_empty() {
            scenario.deposits.clone()
        } else if config.deposits > 0 {
            place_deposits(
                &scenario,
                config.deposits as usize,
                config.seed,
                config.kmeans_max_iters as usize,
            )?
        } else {
            DepositSet::default()
        };

        let routing = if deposits.is_empty() {
            if config.mode != Mode::Truck {
                return Err(EngineError::Incompatible(
                    "robot modes require at least one deposit".into(),
                ));
            }
            None
        } else {
            Some(build_routing(&scenario, &deposits)?)
        };

        let tags = match &routing {
            Some(rt) => (0..scenario.num_nodes())
                .map(|n| {
                    CrossroadTag::new(
                        n,
                        scenario.neighbors(n).iter().map(|&(e, _)| e).collect(),
                        rt.distance[n],
                        rt.next_hop[n],
                        rt.deposit_id[n],
                    )
                })
                .collect(),
            None => Vec::new(),
        };

        let capacity = liters_to_ml(config.bin_capacity_l);
        let unit = liters_to_ml(config.unit_size_l);
        let bins: Vec<TrashBin> = (0..scenario.bins.len())
            .map(|site| TrashBin::new(site, capacity, unit))
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

        let homes: Vec<usize> = anchor_nodes(&scenario, BuildingKind::Home);
        let works: Vec<usize> = anchor_nodes(&scenario, BuildingKind::Work);
        let amenities: Vec<usize> = anchor_nodes(&scenario, BuildingKind::Amenity);
        if config.citizens > 0 && (homes.is_empty() || works.is_empty() || amenities.is_empty()) {
            return Err(EngineError::Incompatible(
                "citizens require home, work and amenity buildings in the scenario".into(),
            ));
        }
        let mut citizens = Vec::with_capacity(config.citizens as usize);
        for id in 0..config.citizens {
            let home = homes[id as usize % homes.len()];
            let mut c = Citizen::new(id, home);
            c.home = home;
            c.work = works[rng.gen_range(0..works.len())];
            citizens.push(c);
        }

        let deposit_nodes: Vec<usize> = deposits
            .0
            .iter()
            .map(|d| scenario.node_idx(d.crossroad).expect("validated deposit"))
            .collect();
        let robots: Vec<Robot> = (0..config.robots)
            .map(|id| {
                let at = if config.robots_start_random {
                    rng.gen_range(0..scenario.num_nodes())
                } else {
                    deposit_nodes[id as usize % deposit_nodes.len()]
                };
                Robot::new(id, at, config.robot_range_m)
            })
            .collect();

        let truck = (config.mode == Mode::Truck).then(|| {
            Truck::new(
                (0..bins.len()).collect(),
                config.truck_bins_per_hour,
                config.truck_window_start_h * 60.0,
                config.truck_window_end_h * 60.0,
            )
        });

        let mut state = SimState {
            config,
            scenario,
            deposits,
            routing,
            tags,
            bins,
            citizens,
            robots,
            truck,
            rng,
            tick_index: 0,
            accum: MetricAccum::default(),
            counters: Counters::default(),
            paths: Default::default(),
        };
        state.plan_day(0);
        Ok(state)
    }

    fn plan_day(&mut self, day: u64) {
        let day_start = day as f64 * self.day_minutes();
        let amenities = anchor_nodes(&self.scenario, BuildingKind::Amenity);
        for c in &mut self.citizens {
            let parcel_trip = self.rng.gen_range(0..3u8);
            let amenity = amenities[self.rng.gen_range(0..amenities.len())];
            let windows = [MORNING, MIDDAY, EVENING];
            let dests = [c.work, amenity, c.home];
            c.plan = (0..3)
                .map(|i| PlannedTrip {
                    depart: day_start + self.rng.gen_range(windows[i].0..windows[i].1),
                    dest: dests[i],
                    carries_parcel: i as u8 == parcel_trip,
                })
                .collect();
            c.next_trip = 0;
        }
        if let Some(truck) = &mut self.truck {
            truck.start_new_day();
        }
    }

    pub fn tick_minutes(&self) -> Minutes {
        self.config.tick_minutes()
    }

    fn day_minutes(&self) -> Minutes {
        self.config.ticks_per_day() as f64 * self.tick_minutes()
    }

    /// Simulation time at the end of the last executed tick.
    pub fn now(&self) -> Minutes {
        self.tick_index as f64 * self.tick_minutes()
    }

    /// Advance the world by one tick.
    pub fn tick(&mut self) {
        let ticks_per_day = self.config.ticks_per_day();
        if self.tick_index > 0 && self.tick_index.is_multiple_of(ticks_per_day) {
            self.plan_day(self.tick_index / ticks_per_day);
        }
        let day_start = (self.tick_index / ticks_per_day) as f64 * self.day_minutes();
        let dt = self.tick_minutes();
        let now = (self.tick_index + 1) as f64 * dt;

        let mut citizens = std::mem::take(&mut self.citizens);
        {
            let mut ctx = CitizenCtx {
                scenario: &self.scenario,
                bins: &mut self.bins,
                now,
                dt,
                walk_speed: self.config.citizen_speed_m_min,
                phi: self.config.phi_m,
                paths: &mut self.paths,
                generated: &mut self.counters.generated,
                lambda: liters_to_ml(self.config.lambda_l),
            };
            for c in &mut citizens {
                crate::agents::citizen::citizen_tick(c, &mut ctx);
            }
        }
        self.citizens = citizens;

        let params = self.config.pheromone_params();
        let mut robots = std::mem::take(&mut self.robots);
        {
            let mut ctx = RobotCtx {
                scenario: &self.scenario,
                tags: &mut self.tags,
                bins: &mut self.bins,
                rng: &mut self.rng,
                params: &params,
                now,
                dt,
                speed: self.config.robot_speed_m_min,
                full_range: self.config.robot_range_m,
                safety_factor: self.config.safety_factor,
                delivered: &mut self.counters.delivered,
                picked_up: &mut self.counters.picked_up,
            };
            for r in &mut robots {
                crate::agents::robot::robot_tick(r, &mut ctx);
            }
        }
        self.robots = robots;

        if let Some(truck) = &mut self.truck {
            truck.tick(&mut self.bins, now, day_start);
        }

        let lambda = liters_to_ml(self.config.lambda_l);
        let uncollected: Milliliters = self.bins.iter().map(|b| b.stored()).sum();
        let full = self.bins.iter().filter(|b| b.is_full(lambda)).count() as u32;
        self.accum.record(uncollected, full);
        self.tick_index += 1;

        debug_assert!(self.conservation_holds(), "waste conservation violated at tick {}", self.tick_index);
    }

    /// Exact waste conservation: everything generated is in a bin, on a
    /// robot, delivered, collected by the truck, or still carried by a
    /// citizen.
    pub fn conservation_holds(&self) -> bool {
        let in_bins: Milliliters = self.bins.iter().map(|b| b.stored()).sum();
        let on_robots: Milliliters = self.robots.iter().filter_map(|r| r.cargo.map(|c| c.volume)).sum();
        let carried: Milliliters = self.citizens.iter().map(|c| c.carrying).sum();
        let truck_collected = self.truck.as_ref().map_or(0, |t| t.collected);
        self.counters.generated
            == in_bins + on_robots + self.counters.delivered + truck_collected + carried
    }

    pub fn metrics(&self) -> DayMetrics {
        DayMetrics {
            aut_pct: self
                .accum
                .aut_fraction(self.bins.len(), liters_to_ml(self.config.bin_capacity_l)),
            ftb_pct: self.accum.ftb_fraction(self.bins.len()),
            generated_l: ml_to_liters(self.counters.generated),
            delivered_l: ml_to_liters(self.counters.delivered),
            picked_up_l: ml_to_liters(self.counters.picked_up),
            truck_collected_l: ml_to_liters(self.truck.as_ref().map_or(0, |t| t.collected)),
        }
    }

    pub fn trace_row(&self) -> TraceRow {
        let lambda = liters_to_ml(self.config.lambda_l);
        let count = |s: RobotState| self.robots.iter().filter(|r| r.state == s).count() as u32;
        TraceRow {
            tick: self.tick_index,
            uncollected_liters: ml_to_liters(self.bins.iter().map(|b| b.stored()).sum()),
            full_bins: self.bins.iter().filter(|b| b.is_full(lambda)).count() as u32,
            robots_wandering: count(RobotState::Wander),
            robots_carrying: count(RobotState::Carry),
            robots_recharging: count(RobotState::Recharge),
            delivered_liters: ml_to_liters(self.counters.delivered),
        }
    }

    /// Serialize to the versioned snapshot container.
    pub fn snapshot(&self) -> Vec<u8> {
        // SimState is not Clone (Arc aside, the path cache is transient), so
        // serialize through a borrowing mirror of the container.
        #[derive(Serialize)]
        struct SnapshotRef<'a> {
            format: &'static str,
            version: u32,
            state: &'a SimState,
        }
        serde_json::to_vec(&SnapshotRef {
            format: SNAPSHOT_FORMAT,
            version: SNAPSHOT_VERSION,
            state: self,
        })
        .expect("snapshot serialization cannot fail")
    }

    pub fn restore(bytes: &[u8]) -> Result<Self, EngineError> {
        let snap: Snapshot =
            serde_json::from_slice(bytes).map_err(|e| EngineError::Corrupt(e.to_string()))?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(EngineError::Corrupt(format!("unknown format `{}`", snap.format)));
        }
        if snap.version != SNAPSHOT_VERSION {
            return Err(EngineError::Version { found: snap.version, expected: SNAPSHOT_VERSION });
        }
        Ok(snap.state)
    }

    pub fn total_ticks(&self) -> u64 {
        self.config.ticks_per_day() * self.config.days as u64
    }
}

fn anchor_nodes(scenario: &Scenario, kind: BuildingKind) -> Vec<usize> {
    scenario
        .buildings
        .iter()
        .filter(|b| b.kind == kind)
        .map(|b| scenario.node_idx(b.crossroad).expect("validated building"))
        .collect()
}

/// Run the configured day span and return the aggregate metrics.
pub fn run_day(config: &RunConfig, scenario: &Arc<Scenario>) -> Result<DayMetrics, EngineError> {
    run_day_traced(config, scenario, |_| {})
}

/// Like [`run_day`], invoking `on_tick` with a trace row after every tick.
pub fn run_day_traced(
    config: &RunConfig,
    scenario: &Arc<Scenario>,
    mut on_tick: impl FnMut(TraceRow),
) -> Result<DayMetrics, EngineError> {
    let mut state = SimState::init(config.clone(), Arc::clone(scenario))?;
    for _ in 0..state.total_ticks() {
        state.tick();
        on_tick(state.trace_row());
    }
    Ok(state.metrics())
}
