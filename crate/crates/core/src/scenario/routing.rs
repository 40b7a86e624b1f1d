//! Nearest-deposit routing table: multi-source shortest paths with all
//! deposits as sources.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{DepositSet, Scenario, ScenarioError};
use crate::Meters;

/// Per-crossroad distance and direction toward the nearest deposit.
///
/// Indexed by dense node index. Next hops form a forest rooted at the
/// deposits: walking them strictly decreases the distance at every step.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RoutingTable {
    /// Shortest-path distance to the nearest deposit, meters.
    pub distance: Vec<Meters>,
    /// Edge index toward the nearest deposit; `None` at deposit crossroads.
    pub next_hop: Vec<Option<usize>>,
    /// Id of the nearest deposit (ties broken by smallest deposit id).
    pub deposit_id: Vec<u64>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    deposit_id: u64,
    node: usize,
}

impl Eq for HeapEntry {}

// Reversed so the BinaryHeap pops the smallest (dist, deposit_id) first.
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then(other.deposit_id.cmp(&self.deposit_id))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Build the routing table by running Dijkstra from all deposits at once.
///
/// Ties between equally near deposits resolve to the smallest deposit id;
/// ties between equal-cost next hops resolve to the smallest road id.
pub fn build_routing(
    scenario: &Scenario,
    deposits: &DepositSet,
) -> Result<RoutingTable, ScenarioError> {
    if deposits.is_empty() {
        return Err(ScenarioError::InvalidArgument(
            "routing requires at least one deposit".into(),
        ));
    }
    let n = scenario.num_nodes();
    let mut distance = vec![f64::INFINITY; n];
    let mut deposit_id = vec![u64::MAX; n];
    let mut next_hop: Vec<Option<usize>> = vec![None; n];
    let mut heap = BinaryHeap::new();

    for d in &deposits.0 {
        let node = scenario
            .node_idx(d.crossroad)
            .ok_or(ScenarioError::UnknownDepositCrossroad {
                deposit: d.id,
                node: d.crossroad,
            })?;
        if d.id < deposit_id[node] {
            distance[node] = 0.0;
            deposit_id[node] = d.id;
        }
    }
    for d in &deposits.0 {
        let node = scenario.node_idx(d.crossroad).unwrap();
        heap.push(HeapEntry { dist: 0.0, deposit_id: deposit_id[node], node });
    }

    while let Some(HeapEntry { dist, deposit_id: dep, node: u }) = heap.pop() {
        if (dist, dep) != (distance[u], deposit_id[u]) {
            continue;
        }
        for &(edge, v) in scenario.neighbors(u) {
            let nd = dist + scenario.edge_length(edge);
            let cand = (nd, dep, scenario.roads[edge].id);
            let cur = (
                distance[v],
                deposit_id[v],
                next_hop[v].map_or(u64::MAX, |e| scenario.roads[e].id),
            );
            if cand
                .partial_cmp(&cur)
                .expect("distances are finite")
                .is_lt()
            {
                distance[v] = nd;
                deposit_id[v] = dep;
                next_hop[v] = Some(edge);
                heap.push(HeapEntry { dist: nd, deposit_id: dep, node: v });
            }
        }
    }

    // The scenario invariant guarantees connectivity, so every node was
    // reached.
    debug_assert!(distance.iter().all(|d| d.is_finite()));
    Ok(RoutingTable { distance, next_hop, deposit_id })
}

impl RoutingTable {
    /// Walk next hops from `node` to a deposit, returning the node sequence.
    pub fn walk_to_deposit(&self, scenario: &Scenario, mut node: usize) -> Vec<usize> {
        let mut path = vec![node];
        while let Some(edge) = self.next_hop[node] {
            node = scenario.other_endpoint(edge, node);
            path.push(node);
        }
        path
    }
}
