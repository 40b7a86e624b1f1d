//! Crossroad tags and the three pheromone processes: marking, evaporation,
//! diffusion. Edge selection follows the strongest trail with probability
//! `X_r` and wanders otherwise.
//!
//! Update rule, applied lazily when a robot interacts with a tag:
//!
//! ```text
//! P  <-  P - E_r * P_a * (now - ts)          every incident edge, clamped at 0
//! P  <-  P + D_r * P_max_prev                arrival edge, always
//! P  <-  P + P_a * T_a                       arrival edge, when carrying
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;
use crate::{Meters, Minutes, Pheromone};

/// Evaporation applied to one edge amount over `elapsed` time units, clamped
/// at zero.
pub fn evaporate<F: Real>(amount: F, evaporation_rate: F, per_liter: F, elapsed: F) -> F {
    (amount - evaporation_rate * per_liter * elapsed).max(F::zero())
}

/// Diffusion and marking contributions added to the arrival edge after
/// evaporation. `carried_liters` is `None` outside the carry state.
pub fn arrival_deposit<F: Real>(
    evaporated: F,
    diffusion_rate: F,
    prev_tag_max: F,
    per_liter: F,
    carried_liters: Option<F>,
) -> F {
    let diffused = evaporated + diffusion_rate * prev_tag_max;
    match carried_liters {
        Some(t_a) => diffused + per_liter * t_a,
        None => diffused,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PheromoneParams {
    /// Pheromone units evaporating per liter-unit per minute, `0 <= E_r <= 1`.
    pub evaporation_rate: Pheromone,
    /// Probability of following the strongest trail, `0 < X_r <= 1`.
    pub exploitation_rate: Pheromone,
    /// Pheromone units added per liter of waste found in the source bin.
    pub per_liter: Pheromone,
    /// Exclude the arrival edge from wander candidates unless it is the only
    /// incident edge.
    pub exclude_arrival_edge: bool,
}

impl PheromoneParams {
    /// Diffusion rate is tied to the exploitation rate: `D_r = 1 - X_r`.
    pub fn diffusion_rate(&self) -> Pheromone {
        1.0 - self.exploitation_rate
    }

    pub fn validate(&self) -> Result<(), TagError> {
        if !(0.0..=1.0).contains(&self.evaporation_rate) {
            return Err(TagError::InvalidParam(format!(
                "evaporation rate must satisfy 0 <= E_r <= 1, got {}",
                self.evaporation_rate
            )));
        }
        if !(self.exploitation_rate > 0.0 && self.exploitation_rate <= 1.0) {
            return Err(TagError::InvalidParam(format!(
                "exploitation rate must satisfy 0 < X_r <= 1, got {}",
                self.exploitation_rate
            )));
        }
        if self.per_liter <= 0.0 || self.per_liter.is_nan() {
            return Err(TagError::InvalidParam(format!(
                "pheromone per liter must be positive, got {}",
                self.per_liter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TagError {
    #[error("invalid pheromone parameter: {0}")]
    InvalidParam(String),
}

/// What a robot knows when it touches a tag.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalContext {
    /// Edge index the robot came from; must be incident to the tag.
    pub arrival_edge: usize,
    /// Current simulation time, minutes.
    pub now: Minutes,
    /// Liters of waste found in the source bin; `Some` only while carrying.
    pub carried_liters: Option<f64>,
    /// Maximum pheromone observed on the previously visited tag.
    pub prev_tag_max: Pheromone,
}

/// Mutable per-crossroad record: last-operation timestamp, per-incident-edge
/// pheromone, and the nearest-deposit direction copied from the routing table.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CrossroadTag {
    pub node: usize,
    /// Timestamp of the last tag operation, minutes. Never decreases.
    pub ts: Minutes,
    /// Incident edge indices, parallel to `amounts`.
    pub incident: Vec<usize>,
    pub amounts: Vec<Pheromone>,
    pub nearest_deposit_distance: Meters,
    pub next_hop: Option<usize>,
    pub nearest_deposit: u64,
}

impl CrossroadTag {
    pub fn new(
        node: usize,
        incident: Vec<usize>,
        nearest_deposit_distance: Meters,
        next_hop: Option<usize>,
        nearest_deposit: u64,
    ) -> Self {
        let amounts = vec![0.0; incident.len()];
        CrossroadTag {
            node,
            ts: 0.0,
            incident,
            amounts,
            nearest_deposit_distance,
            next_hop,
            nearest_deposit,
        }
    }

    fn slot(&self, edge: usize) -> Option<usize> {
        self.incident.iter().position(|&e| e == edge)
    }

    pub fn amount(&self, edge: usize) -> Pheromone {
        self.amounts[self.slot(edge).expect("edge incident to tag")]
    }
}

/// Apply the tag update for a robot arriving over `ctx.arrival_edge`.
///
/// Panics on a non-incident arrival edge or a time regression; both are
/// programming errors.
pub fn update_tag(tag: &mut CrossroadTag, ctx: &ArrivalContext, params: &PheromoneParams) {
    let slot = tag
        .slot(ctx.arrival_edge)
        .unwrap_or_else(|| panic!("edge {} not incident to crossroad {}", ctx.arrival_edge, tag.node));
    assert!(
        ctx.now >= tag.ts,
        "time regression: now {} < tag ts {}",
        ctx.now,
        tag.ts
    );

    let elapsed = ctx.now - tag.ts;
    for amount in &mut tag.amounts {
        *amount = evaporate(*amount, params.evaporation_rate, params.per_liter, elapsed);
    }
    tag.amounts[slot] = arrival_deposit(
        tag.amounts[slot],
        params.diffusion_rate(),
        ctx.prev_tag_max,
        params.per_liter,
        ctx.carried_liters,
    );
    tag.ts = ctx.now;
}

/// Maximum pheromone over incident edges; 0 for a degenerate all-zero tag.
pub fn max_pheromone(tag: &CrossroadTag) -> Pheromone {
    tag.amounts.iter().copied().fold(0.0, f64::max)
}

/// Choose the next edge from a tag.
///
/// With probability `X_r`, and when the candidate amounts are not all equal,
/// follow the strongest trail (ties among maxima broken uniformly); otherwise
/// pick a uniformly random candidate. The arrival edge is excluded from the
/// candidates unless it is the only incident edge (configurable).
pub fn select_edge(
    tag: &CrossroadTag,
    came_from: Option<usize>,
    params: &PheromoneParams,
    rng: &mut impl Rng,
) -> usize {
    assert!(!tag.incident.is_empty(), "crossroad without incident edges");
    let mut candidates: Vec<usize> = (0..tag.incident.len()).collect();
    if params.exclude_arrival_edge && tag.incident.len() > 1 {
        if let Some(from) = came_from {
            candidates.retain(|&i| tag.incident[i] != from);
        }
    }
    if candidates.len() == 1 {
        return tag.incident[candidates[0]];
    }

    let u: f64 = rng.gen();
    let first = tag.amounts[candidates[0]];
    let all_equal = candidates.iter().all(|&i| tag.amounts[i] == first);
    if u < params.exploitation_rate && !all_equal {
        let max = candidates
            .iter()
            .map(|&i| tag.amounts[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let top: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| tag.amounts[i] == max)
            .collect();
        let pick = top[rng.gen_range(0..top.len())];
        tag.incident[pick]
    } else {
        let pick = candidates[rng.gen_range(0..candidates.len())];
        tag.incident[pick]
    }
}
