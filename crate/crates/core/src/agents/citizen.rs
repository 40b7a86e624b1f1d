//! Citizens travel between buildings on a daily three-trip schedule and drop
//! their waste parcel at the first bin passed within range.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::agents::TrashBin;
use crate::scenario::Scenario;
use crate::{Meters, Milliliters, Minutes};

/// One scheduled trip of a citizen's day.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PlannedTrip {
    /// Absolute departure time, minutes.
    pub depart: Minutes,
    /// Destination node index.
    pub dest: usize,
    /// Whether the day's waste parcel is picked up when this trip starts.
    pub carries_parcel: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ActiveTrip {
    /// Node sequence, starting at the departure crossroad.
    pub nodes: Vec<usize>,
    /// Edge indices between consecutive nodes.
    pub edges: Vec<usize>,
    pub leg: usize,
    /// Meters traveled along the current leg.
    pub pos: Meters,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Citizen {
    pub id: u32,
    /// Current crossroad when idle.
    pub at: usize,
    /// Home and workplace anchors, fixed for the citizen's lifetime.
    pub home: usize,
    pub work: usize,
    pub plan: Vec<PlannedTrip>,
    pub next_trip: usize,
    pub active: Option<ActiveTrip>,
    /// Waste currently carried; either 0 or one parcel.
    pub carrying: Milliliters,
}

pub struct CitizenCtx<'a> {
    pub scenario: &'a Scenario,
    pub bins: &'a mut [TrashBin],
    pub now: Minutes,
    pub dt: Minutes,
    /// Walking speed, meters per minute.
    pub walk_speed: f64,
    /// Bin detection radius, meters.
    pub phi: Meters,
    pub paths: &'a mut PathCache,
    /// Liters generated so far, credited when a parcel is issued.
    pub generated: &'a mut Milliliters,
    /// Parcel size.
    pub lambda: Milliliters,
}

impl Citizen {
    pub fn new(id: u32, at: usize) -> Self {
        Citizen {
            id,
            at,
            home: at,
            work: at,
            plan: Vec::new(),
            next_trip: 0,
            active: None,
            carrying: 0,
        }
    }

    fn position(&self, scenario: &Scenario) -> (Meters, Meters) {
        match &self.active {
            None => scenario.node_position(self.at),
            Some(t) => {
                let a = scenario.node_position(t.nodes[t.leg]);
                let b = scenario.node_position(t.nodes[t.leg + 1]);
                let len = scenario.edge_length(t.edges[t.leg]);
                let f = (t.pos / len).clamp(0.0, 1.0);
                (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f)
            }
        }
    }
}

/// Advance one citizen by one tick: start a due trip, walk, and drop waste at
/// the first eligible bin in range.
pub fn citizen_tick(citizen: &mut Citizen, ctx: &mut CitizenCtx) {
    if citizen.active.is_none() {
        start_due_trip(citizen, ctx);
    }

    let mut moved = false;
    if let Some(trip) = &mut citizen.active {
        moved = true;
        let mut budget = ctx.walk_speed * ctx.dt;
        while budget > 0.0 && trip.leg < trip.edges.len() {
            let len = ctx.scenario.edge_length(trip.edges[trip.leg]);
            let remaining = len - trip.pos;
            if budget >= remaining {
                budget -= remaining;
                trip.leg += 1;
                trip.pos = 0.0;
            } else {
                trip.pos += budget;
                budget = 0.0;
            }
        }
        if trip.leg >= trip.edges.len() {
            citizen.at = *trip.nodes.last().unwrap();
            citizen.active = None;
        }
    }

    // Waste is only dropped while traveling; a full-bin encounter keeps the
    // parcel for the next eligible bin.
    if moved && citizen.carrying > 0 {
        try_drop(citizen, ctx);
    }
}

fn start_due_trip(citizen: &mut Citizen, ctx: &mut CitizenCtx) {
    let Some(trip) = citizen.plan.get(citizen.next_trip).copied() else {
        return;
    };
    if ctx.now < trip.depart {
        return;
    }
    citizen.next_trip += 1;
    if trip.carries_parcel {
        citizen.carrying += ctx.lambda;
        *ctx.generated += ctx.lambda;
    }
    if trip.dest == citizen.at {
        return;
    }
    let (nodes, edges) = ctx.paths.shortest_path(ctx.scenario, citizen.at, trip.dest);
    citizen.active = Some(ActiveTrip { nodes, edges, leg: 0, pos: 0.0 });
}

fn try_drop(citizen: &mut Citizen, ctx: &mut CitizenCtx) {
    let pos = citizen.position(ctx.scenario);
    let phi2 = ctx.phi * ctx.phi;
    let mut best: Option<(usize, f64)> = None;
    for (i, bin) in ctx.bins.iter().enumerate() {
        if !bin.can_accept(citizen.carrying) {
            continue;
        }
        let bp = ctx.scenario.bin_position(bin.site);
        let d2 = (bp.0 - pos.0).powi(2) + (bp.1 - pos.1).powi(2);
        if d2 <= phi2 && best.is_none_or(|(_, bd)| d2 < bd) {
            best = Some((i, d2));
        }
    }
    if let Some((i, _)) = best {
        ctx.bins[i].absorb(citizen.carrying);
        citizen.carrying = 0;
    }
}

/// Shortest-path trees cached per source node. Purely derived state: it is
/// rebuilt on demand after a snapshot restore and never affects determinism.
#[derive(Debug, Default)]
pub struct PathCache {
    trees: HashMap<usize, Tree>,
}

#[derive(Debug)]
struct Tree {
    /// Per node: (parent edge, parent node) toward the source.
    parent: Vec<Option<(usize, usize)>>,
}

#[derive(Copy, Clone, PartialEq)]
struct QueueEntry {
    dist: f64,
    node: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PathCache {
    pub fn clear(&mut self) {
        self.trees.clear();
    }

    /// Node and edge sequences from `from` to `to`.
    pub fn shortest_path(
        &mut self,
        scenario: &Scenario,
        from: usize,
        to: usize,
    ) -> (Vec<usize>, Vec<usize>) {
        let tree = self.trees.entry(from).or_insert_with(|| {
            let mut dist = vec![f64::INFINITY; scenario.num_nodes()];
            let mut parent = vec![None; scenario.num_nodes()];
            dist[from] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(QueueEntry { dist: 0.0, node: from });
            while let Some(QueueEntry { dist: d, node: u }) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &(e, v) in scenario.neighbors(u) {
                    let nd = d + scenario.edge_length(e);
                    if nd < dist[v] {
                        dist[v] = nd;
                        parent[v] = Some((e, u));
                        heap.push(QueueEntry { dist: nd, node: v });
                    }
                }
            }
            Tree { parent }
        });

        let mut nodes = vec![to];
        let mut edges = Vec::new();
        let mut cur = to;
        while let Some((e, p)) = tree.parent[cur] {
            edges.push(e);
            nodes.push(p);
            cur = p;
        }
        debug_assert_eq!(cur, from, "graph connectivity guarantees a path");
        nodes.reverse();
        edges.reverse();
        (nodes, edges)
    }
}
