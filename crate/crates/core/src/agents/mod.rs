//! Behavioral models: citizens generate and drop waste, bins pack it into
//! transportable units, robots forage the units to deposits, and a truck
//! baseline empties every bin once a day.

pub mod bin;
pub mod citizen;
pub mod robot;
pub mod truck;

pub use bin::TrashBin;
pub use citizen::{citizen_tick, Citizen, CitizenCtx, PathCache, PlannedTrip};
pub use robot::{robot_tick, Robot, RobotCtx, RobotState};
pub use truck::Truck;
