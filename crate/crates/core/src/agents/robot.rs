//! Foraging robots: the Wander / Carry / Recharge state machine.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::TrashBin;
use crate::scenario::Scenario;
use crate::stigmergy::{
    max_pheromone, select_edge, update_tag, ArrivalContext, CrossroadTag, PheromoneParams,
};
use crate::{Meters, Milliliters, Minutes, Pheromone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RobotState {
    Wander,
    Carry,
    Recharge,
}

/// One transportable unit in transit, with the demand signal observed at the
/// source bin (total waste found, used for pheromone marking).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Cargo {
    pub volume: Milliliters,
    pub found_liters: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EdgePos {
    pub edge: usize,
    /// Node the robot departed from.
    pub from: usize,
    pub traveled: Meters,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Robot {
    pub id: u32,
    pub state: RobotState,
    /// Crossroad the robot stands on before its first departure.
    pub at: usize,
    pub edge: Option<EdgePos>,
    /// Battery range remaining, meters.
    pub range: Meters,
    pub cargo: Option<Cargo>,
    /// Maximum pheromone observed on the last visited tag (diffusion source).
    pub prev_tag_max: Pheromone,
}

impl Robot {
    pub fn new(id: u32, at: usize, range: Meters) -> Self {
        Robot {
            id,
            state: RobotState::Wander,
            at,
            edge: None,
            range,
            cargo: None,
            prev_tag_max: 0.0,
        }
    }
}

pub struct RobotCtx<'a> {
    pub scenario: &'a Scenario,
    pub tags: &'a mut [CrossroadTag],
    pub bins: &'a mut [TrashBin],
    pub rng: &'a mut ChaCha8Rng,
    pub params: &'a PheromoneParams,
    pub now: Minutes,
    pub dt: Minutes,
    /// Cruise speed, meters per minute.
    pub speed: f64,
    pub full_range: Meters,
    pub safety_factor: f64,
    pub delivered: &'a mut Milliliters,
    pub picked_up: &'a mut Milliliters,
}

/// Advance one robot by one tick.
pub fn robot_tick(robot: &mut Robot, ctx: &mut RobotCtx) {
    let mut budget = ctx.speed * ctx.dt;
    // Guard against pathological zero-length loops on tiny graphs.
    let mut hops = 0;
    while budget > 0.0 {
        let Some(ep) = robot.edge else {
            depart_initial(robot, ctx);
            if robot.edge.is_none() {
                return; // isolated crossroad; nothing to do
            }
            continue;
        };
        let len = ctx.scenario.edge_length(ep.edge);
        let remaining = len - ep.traveled;
        let step = budget.min(remaining);

        if robot.state == RobotState::Wander {
            scan_bins(robot, ctx, ep, step);
        }

        robot.range -= step;
        if budget >= remaining {
            budget -= remaining;
            let v = ctx.scenario.other_endpoint(ep.edge, ep.from);
            assert!(
                robot.range >= 0.0 || ctx.tags[v].next_hop.is_none(),
                "robot {} stranded with range {} at crossroad {}",
                robot.id,
                robot.range,
                v
            );
            arrive(robot, ctx, v, ep.edge);
            hops += 1;
            assert!(hops < 100_000, "robot {} stuck hopping within one tick", robot.id);
        } else {
            robot.edge = Some(EdgePos { traveled: ep.traveled + step, ..ep });
            assert!(
                robot.range > 0.0,
                "robot {} stranded mid-edge with range {}",
                robot.id,
                robot.range
            );
            budget = 0.0;
        }
    }
}

/// First departure: the robot stands on its spawn crossroad with no arrival
/// edge, so the tag is read for selection but not updated.
fn depart_initial(robot: &mut Robot, ctx: &mut RobotCtx) {
    let tag = &ctx.tags[robot.at];
    if tag.incident.is_empty() {
        return;
    }
    robot.prev_tag_max = max_pheromone(tag);
    let next = match robot.state {
        RobotState::Wander => {
            let pick = select_edge(tag, None, ctx.params, ctx.rng);
            let at_deposit = tag.next_hop.is_none();
            let dist = tag.nearest_deposit_distance;
            if at_deposit
                || (robot.range > ctx.safety_factor * dist
                    && wander_commit_feasible(robot, ctx, robot.at, pick))
            {
                pick
            } else {
                robot.state = RobotState::Recharge;
                ctx.tags[robot.at].next_hop.expect("non-deposit tag has a next hop")
            }
        }
        RobotState::Carry | RobotState::Recharge => match tag.next_hop {
            Some(e) => e,
            None => {
                // Spawned on a deposit: deliver / swap immediately.
                settle_at_deposit(robot, ctx);
                select_edge(&ctx.tags[robot.at], None, ctx.params, ctx.rng)
            }
        },
    };
    robot.edge = Some(EdgePos { edge: next, from: robot.at, traveled: 0.0 });
}

/// Pick up a packed unit when traversing past a bin's offset.
fn scan_bins(robot: &mut Robot, ctx: &mut RobotCtx, ep: EdgePos, step: Meters) {
    let len = ctx.scenario.edge_length(ep.edge);
    let (a, _) = ctx.scenario.edge_endpoints(ep.edge);
    let forward = ep.from == a;
    let lo = ep.traveled;
    let hi = ep.traveled + step;
    // Host bins sorted by offset from endpoint `a`; flip when traversing b->a.
    let sites = ctx.scenario.bins_on_edge(ep.edge);
    let ordered: Vec<usize> = if forward {
        sites.to_vec()
    } else {
        sites.iter().rev().copied().collect()
    };
    for site in ordered {
        let offset = ctx.scenario.bins[site].offset;
        let o = if forward { offset } else { len - offset };
        let hit = o <= hi && (o > lo || (lo == 0.0 && o == 0.0));
        if !hit {
            continue;
        }
        let bin = ctx
            .bins
            .iter_mut()
            .find(|b| b.site == site)
            .expect("bin state exists for every site");
        if let Some(found) = bin.withdraw_unit() {
            robot.cargo = Some(Cargo {
                volume: bin.unit_size,
                found_liters: crate::ml_to_liters(found),
            });
            *ctx.picked_up += bin.unit_size;
            robot.state = RobotState::Carry;
            return;
        }
    }
}

fn settle_at_deposit(robot: &mut Robot, ctx: &mut RobotCtx) {
    // The deposit swaps the battery instantly on any visit.
    robot.range = ctx.full_range;
    match robot.state {
        RobotState::Carry => {
            let cargo = robot.cargo.take().expect("carry state implies cargo");
            *ctx.delivered += cargo.volume;
            robot.state = RobotState::Wander;
        }
        RobotState::Recharge => robot.state = RobotState::Wander,
        RobotState::Wander => {}
    }
}

fn arrive(robot: &mut Robot, ctx: &mut RobotCtx, node: usize, edge: usize) {
    let carried = robot
        .cargo
        .as_ref()
        .filter(|_| robot.state == RobotState::Carry)
        .map(|c| c.found_liters);
    let arrival = ArrivalContext {
        arrival_edge: edge,
        now: ctx.now,
        carried_liters: carried,
        prev_tag_max: robot.prev_tag_max,
    };
    update_tag(&mut ctx.tags[node], &arrival, ctx.params);
    robot.prev_tag_max = max_pheromone(&ctx.tags[node]);

    let at_deposit = ctx.tags[node].next_hop.is_none();
    if at_deposit {
        settle_at_deposit(robot, ctx);
    } else if robot.state == RobotState::Wander {
        let dist = ctx.tags[node].nearest_deposit_distance;
        if robot.range <= ctx.safety_factor * dist {
            robot.state = RobotState::Recharge;
        }
    }

    let tag = &ctx.tags[node];
    let next = match robot.state {
        RobotState::Wander => {
            let pick = select_edge(tag, Some(edge), ctx.params, ctx.rng);
            if at_deposit || wander_commit_feasible(robot, ctx, node, pick) {
                pick
            } else {
                // Crossing `pick` would leave too little range to recharge
                // from its far end; head for the deposit while it is still
                // reachable.
                robot.state = RobotState::Recharge;
                ctx.tags[node].next_hop.expect("non-deposit tag has a next hop")
            }
        }
        RobotState::Carry | RobotState::Recharge => {
            tag.next_hop.expect("non-deposit tag has a next hop")
        }
    };
    robot.at = node;
    robot.edge = Some(EdgePos { edge: next, from: node, traveled: 0.0 });
}

/// A wandering robot may only commit to an edge if, after crossing it, enough
/// range remains to reach the nearest deposit from the far end. The plain
/// `range <= safety * distance` trigger alone cannot guarantee this: the
/// threshold shrinks with the distance while committing to an edge costs its
/// full length.
fn wander_commit_feasible(robot: &Robot, ctx: &RobotCtx, node: usize, edge: usize) -> bool {
    let far = ctx.scenario.other_endpoint(edge, node);
    let need = ctx.scenario.edge_length(edge)
        + ctx.safety_factor * ctx.tags[far].nearest_deposit_distance;
    robot.range >= need
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    use crate::scenario::{
        build_routing, BinSite, Crossroad, Deposit, DepositSet, Road, Scenario, ScenarioFile,
    };
    use crate::liters_to_ml;

    fn params() -> PheromoneParams {
        PheromoneParams {
            evaporation_rate: 0.15,
            exploitation_rate: 0.75,
            per_liter: 1.0,
            exclude_arrival_edge: true,
        }
    }

    /// Line 0-1-2-3, deposit at node 3, bin midway on edge (0,1).
    fn world() -> (Scenario, Vec<CrossroadTag>, Vec<TrashBin>) {
        let s = Scenario::from_file(ScenarioFile {
            meta: None,
            crossroads: (0..4)
                .map(|i| Crossroad { id: i, x: i as f64 * 100.0, y: 0.0 })
                .collect(),
            roads: (0..3)
                .map(|i| Road { id: i, a: i, b: i + 1, length: None })
                .collect(),
            buildings: vec![],
            bins: vec![BinSite { id: 0, road: 0, offset: 50.0 }],
            deposits: vec![],
        })
        .unwrap();
        let rt = build_routing(&s, &DepositSet(vec![Deposit { id: 0, crossroad: 3 }])).unwrap();
        let tags: Vec<CrossroadTag> = (0..s.num_nodes())
            .map(|n| {
                CrossroadTag::new(
                    n,
                    s.neighbors(n).iter().map(|&(e, _)| e).collect(),
                    rt.distance[n],
                    rt.next_hop[n],
                    rt.deposit_id[n],
                )
            })
            .collect();
        let bins = vec![TrashBin::new(0, liters_to_ml(125.0), liters_to_ml(12.0))];
        (s, tags, bins)
    }

    #[allow(clippy::too_many_arguments)]
    fn tick_n(
        robot: &mut Robot,
        s: &Scenario,
        tags: &mut [CrossroadTag],
        bins: &mut [TrashBin],
        rng: &mut ChaCha8Rng,
        ticks: usize,
        delivered: &mut Milliliters,
        picked: &mut Milliliters,
    ) {
        let dt = 5.0 / 60.0;
        for t in 0..ticks {
            let mut ctx = RobotCtx {
                scenario: s,
                tags,
                bins,
                rng,
                params: &params(),
                now: (t + 1) as f64 * dt,
                dt,
                speed: 250.0,
                full_range: 30_000.0,
                safety_factor: 1.1,
                delivered,
                picked_up: picked,
            };
            robot_tick(robot, &mut ctx);
        }
    }

    #[test]
    fn pickup_records_demand_and_switches_to_carry() {
        let (s, mut tags, mut bins) = world();
        bins[0].packed_units = 1;
        bins[0].loose = liters_to_ml(5.0);
        let mut robot = Robot::new(0, 0, 30_000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut delivered, mut picked) = (0, 0);
        // One tick moves ~20.8 m; three ticks cross the bin at 50 m.
        tick_n(&mut robot, &s, &mut tags, &mut bins, &mut rng, 3, &mut delivered, &mut picked);
        assert_eq!(robot.state, RobotState::Carry);
        let cargo = robot.cargo.unwrap();
        assert_eq!(cargo.volume, liters_to_ml(12.0));
        assert_eq!(cargo.found_liters, 17.0);
        assert_eq!(bins[0].packed_units, 0);
        assert_eq!(picked, liters_to_ml(12.0));
    }

    #[test]
    fn carry_follows_routing_and_delivers() {
        let (s, mut tags, mut bins) = world();
        bins[0].packed_units = 1;
        let mut robot = Robot::new(0, 0, 30_000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut delivered, mut picked) = (0, 0);
        // 350 m to the deposit; 30 ticks at ~20.8 m/tick is plenty.
        tick_n(&mut robot, &s, &mut tags, &mut bins, &mut rng, 30, &mut delivered, &mut picked);
        assert_eq!(delivered, liters_to_ml(12.0));
        assert_eq!(robot.state, RobotState::Wander);
        assert!(robot.cargo.is_none());
        // Marking happened on the way: the path toward the bin is scented.
        assert!(tags.iter().any(|t| max_pheromone(t) > 0.0));
    }

    #[test]
    fn low_range_triggers_recharge_at_crossroad() {
        let (s, mut tags, mut bins) = world();
        // Node 0 is 300 m from the deposit. Give the robot just enough to
        // reach node 1 (200 m out) with range below 1.1 * 200.
        let mut robot = Robot::new(0, 0, 30_000.0);
        robot.range = 300.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut delivered, mut picked) = (0, 0);
        tick_n(&mut robot, &s, &mut tags, &mut bins, &mut rng, 5, &mut delivered, &mut picked);
        assert_eq!(robot.state, RobotState::Recharge);
    }

    #[test]
    fn recharge_swaps_battery_at_deposit() {
        let (s, mut tags, mut bins) = world();
        let mut robot = Robot::new(0, 2, 30_000.0);
        robot.state = RobotState::Recharge;
        robot.range = 150.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut delivered, mut picked) = (0, 0);
        tick_n(&mut robot, &s, &mut tags, &mut bins, &mut rng, 10, &mut delivered, &mut picked);
        assert_eq!(robot.state, RobotState::Wander);
        assert!(robot.range > 25_000.0);
    }

    #[test]
    fn carry_ignores_bins_on_the_way() {
        let (s, mut tags, mut bins) = world();
        bins[0].packed_units = 2;
        let mut robot = Robot::new(0, 0, 30_000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut delivered, mut picked) = (0, 0);
        tick_n(&mut robot, &s, &mut tags, &mut bins, &mut rng, 20, &mut delivered, &mut picked);
        // Only one unit at a time; the first pass picks up exactly one.
        assert_eq!(delivered, liters_to_ml(12.0));
        assert_eq!(bins[0].packed_units, 1);
    }
}
