//! Agent-based simulator of stigmergy-coordinated waste collection on road
//! networks.
//!
//! A swarm of battery-powered robots forages packed waste units from curbside
//! trash bins and hauls them to the nearest deposit, coordinating only through
//! digital pheromones stored on per-crossroad tags (multi-place foraging).
//! Baselines: the same swarm with a single deposit (central-place foraging)
//! and a once-a-day collection truck.
//!
//! Module map:
//! - [`scenario`]: road graph, buildings, bins, deposit placement (k-means),
//!   nearest-deposit routing.
//! - [`stigmergy`]: crossroad tags, pheromone update (marking / evaporation /
//!   diffusion) and pheromone-guided edge selection.
//! - [`agents`]: citizens, trash bins, robots, the truck baseline.
//! - [`engine`]: deterministic discrete-time loop, metrics, snapshots.
//! - [`experiments`]: parameter sweeps, baseline comparison, standardized
//!   regression.
//! - [`cli`]: the `urbanswarm` command-line surface.

pub mod agents;
pub mod cli;
pub mod engine;
pub mod experiments;
pub mod num;
pub mod scenario;
pub mod stigmergy;

/// Scalar type used by the concrete simulation stack.
pub type Scalar = f64;
/// Distances, in meters.
pub type Meters = f64;
/// Simulation time, in minutes.
pub type Minutes = f64;
/// Pheromone amounts, in pheromone units.
pub type Pheromone = f64;

/// Waste volumes are tracked in integer milliliters so that conservation
/// identities hold exactly.
pub type Milliliters = i64;

/// Convert liters (as found in configs and file formats) to milliliters.
pub fn liters_to_ml(liters: f64) -> Milliliters {
    (liters * 1000.0).round() as Milliliters
}

/// Convert internal milliliters back to liters.
pub fn ml_to_liters(ml: Milliliters) -> f64 {
    ml as f64 / 1000.0
}
