//! World model: road graph, buildings, trash-bin sites, deposits.
//!
//! A [`Scenario`] is immutable after construction and safely shared across
//! concurrently executing runs. The canonical interchange form is JSON; see
//! `docs/scenario.schema.json` for the schema.

mod generate;
pub mod kmeans;
mod routing;

pub use generate::{generate_grid, GridSpec};
pub use routing::{build_routing, RoutingTable};

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Meters;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Crossroad {
    pub id: u64,
    pub x: Meters,
    pub y: Meters,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Road {
    pub id: u64,
    /// Endpoint crossroad ids. Roads are undirected.
    pub a: u64,
    pub b: u64,
    /// Length in meters; derived from endpoint geometry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<Meters>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildingKind {
    Home,
    Work,
    Amenity,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Building {
    pub id: u64,
    pub crossroad: u64,
    pub kind: BuildingKind,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BinSite {
    pub id: u64,
    /// Host road id.
    pub road: u64,
    /// Offset along the host road from endpoint `a`, in meters.
    pub offset: Meters,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct Deposit {
    pub id: u64,
    pub crossroad: u64,
}

/// Deposit placements, either loaded from the scenario file or produced by
/// [`place_deposits`](kmeans::place_deposits).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Default)]
pub struct DepositSet(pub Vec<Deposit>);

impl DepositSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Raw scenario file contents, before validation.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Free-form provenance block written by `gen-scenario`; ignored by the
    /// loader.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
    pub crossroads: Vec<Crossroad>,
    pub roads: Vec<Road>,
    #[serde(default)]
    pub buildings: Vec<Building>,
    #[serde(default)]
    pub bins: Vec<BinSite>,
    #[serde(default)]
    pub deposits: Vec<Deposit>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse scenario file {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("duplicate id {id} in section `{section}`")]
    DuplicateId { section: &'static str, id: u64 },
    #[error("road {road}: unknown endpoint crossroad {node}")]
    UnknownEndpoint { road: u64, node: u64 },
    #[error("road {road}: self-loop at crossroad {node}")]
    SelfLoop { road: u64, node: u64 },
    #[error("road {road}: length {length} is not strictly positive")]
    NonPositiveLength { road: u64, length: f64 },
    #[error("crossroad {node}: non-finite position ({x}, {y})")]
    NonFinitePosition { node: u64, x: f64, y: f64 },
    #[error("building {building}: unknown anchor crossroad {node}")]
    UnknownAnchor { building: u64, node: u64 },
    #[error("bin {bin}: unknown host road {road}")]
    UnknownRoad { bin: u64, road: u64 },
    #[error("bin {bin}: offset {offset} exceeds length {length} of road {road}")]
    OffsetExceedsLength {
        bin: u64,
        road: u64,
        offset: f64,
        length: f64,
    },
    #[error("bin {bin}: negative offset {offset}")]
    NegativeOffset { bin: u64, offset: f64 },
    #[error("deposit {deposit}: unknown crossroad {node}")]
    UnknownDepositCrossroad { deposit: u64, node: u64 },
    #[error("deposits {first} and {second} share crossroad {node}")]
    DuplicateDepositCrossroad { first: u64, second: u64, node: u64 },
    #[error("graph is disconnected: crossroad {unreachable} is unreachable from crossroad {from}")]
    Disconnected { unreachable: u64, from: u64 },
    #[error("scenario has no crossroads")]
    Empty,
    #[error("{0}")]
    InvalidArgument(String),
}

/// Validated, immutable world model with derived lookup structures.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    pub crossroads: Vec<Crossroad>,
    pub roads: Vec<Road>,
    pub buildings: Vec<Building>,
    pub bins: Vec<BinSite>,
    /// Deposits shipped with the scenario file; empty when placement is left
    /// to the engine.
    pub deposits: DepositSet,
    meta: Option<serde_json::Value>,

    // Derived, all indexed by dense position rather than file id.
    node_index: HashMap<u64, usize>,
    edge_index: HashMap<u64, usize>,
    edge_lengths: Vec<Meters>,
    /// Per node: (edge index, neighbor node index), sorted by edge id.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Per edge: bin indices sorted by offset.
    edge_bins: Vec<Vec<usize>>,
    bin_positions: Vec<(Meters, Meters)>,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.crossroads == other.crossroads
            && self.roads == other.roads
            && self.buildings == other.buildings
            && self.bins == other.bins
            && self.deposits == other.deposits
    }
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = ScenarioError;

    fn try_from(file: ScenarioFile) -> Result<Self, Self::Error> {
        Scenario::from_file(file)
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        ScenarioFile {
            meta: s.meta,
            crossroads: s.crossroads,
            roads: s.roads,
            buildings: s.buildings,
            bins: s.bins,
            deposits: s.deposits.0,
        }
    }
}

/// Load and validate a scenario from a JSON file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|source| ScenarioError::Parse {
            path: path.display().to_string(),
            source,
        })?;
    Scenario::from_file(file)
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        if file.crossroads.is_empty() {
            return Err(ScenarioError::Empty);
        }

        let mut node_index = HashMap::with_capacity(file.crossroads.len());
        for (i, c) in file.crossroads.iter().enumerate() {
            if !c.x.is_finite() || !c.y.is_finite() {
                return Err(ScenarioError::NonFinitePosition {
                    node: c.id,
                    x: c.x,
                    y: c.y,
                });
            }
            if node_index.insert(c.id, i).is_some() {
                return Err(ScenarioError::DuplicateId {
                    section: "crossroads",
                    id: c.id,
                });
            }
        }

        let mut edge_index = HashMap::with_capacity(file.roads.len());
        let mut edge_lengths = Vec::with_capacity(file.roads.len());
        let mut adjacency = vec![Vec::new(); file.crossroads.len()];
        for (i, r) in file.roads.iter().enumerate() {
            if edge_index.insert(r.id, i).is_some() {
                return Err(ScenarioError::DuplicateId {
                    section: "roads",
                    id: r.id,
                });
            }
            let &ai = node_index
                .get(&r.a)
                .ok_or(ScenarioError::UnknownEndpoint { road: r.id, node: r.a })?;
            let &bi = node_index
                .get(&r.b)
                .ok_or(ScenarioError::UnknownEndpoint { road: r.id, node: r.b })?;
            if ai == bi {
                return Err(ScenarioError::SelfLoop { road: r.id, node: r.a });
            }
            let geom = {
                let (pa, pb) = (&file.crossroads[ai], &file.crossroads[bi]);
                ((pa.x - pb.x).powi(2) + (pa.y - pb.y).powi(2)).sqrt()
            };
            let length = r.length.unwrap_or(geom);
            if length <= 0.0 || !length.is_finite() {
                return Err(ScenarioError::NonPositiveLength { road: r.id, length });
            }
            edge_lengths.push(length);
            adjacency[ai].push((i, bi));
            adjacency[bi].push((i, ai));
        }
        // Deterministic neighbor order: by road id.
        for list in &mut adjacency {
            list.sort_by_key(|&(e, _)| file.roads[e].id);
        }

        let mut seen = HashMap::new();
        for b in &file.buildings {
            if seen.insert(b.id, ()).is_some() {
                return Err(ScenarioError::DuplicateId {
                    section: "buildings",
                    id: b.id,
                });
            }
            if !node_index.contains_key(&b.crossroad) {
                return Err(ScenarioError::UnknownAnchor {
                    building: b.id,
                    node: b.crossroad,
                });
            }
        }

        let mut edge_bins = vec![Vec::new(); file.roads.len()];
        let mut bin_positions = Vec::with_capacity(file.bins.len());
        let mut seen = HashMap::new();
        for (i, bin) in file.bins.iter().enumerate() {
            if seen.insert(bin.id, ()).is_some() {
                return Err(ScenarioError::DuplicateId {
                    section: "bins",
                    id: bin.id,
                });
            }
            let &ei = edge_index
                .get(&bin.road)
                .ok_or(ScenarioError::UnknownRoad { bin: bin.id, road: bin.road })?;
            if bin.offset < 0.0 {
                return Err(ScenarioError::NegativeOffset {
                    bin: bin.id,
                    offset: bin.offset,
                });
            }
            if bin.offset > edge_lengths[ei] {
                return Err(ScenarioError::OffsetExceedsLength {
                    bin: bin.id,
                    road: bin.road,
                    offset: bin.offset,
                    length: edge_lengths[ei],
                });
            }
            edge_bins[ei].push(i);
            let road = &file.roads[ei];
            let pa = &file.crossroads[node_index[&road.a]];
            let pb = &file.crossroads[node_index[&road.b]];
            let t = bin.offset / edge_lengths[ei];
            bin_positions.push((pa.x + (pb.x - pa.x) * t, pa.y + (pb.y - pa.y) * t));
        }
        for (ei, list) in edge_bins.iter_mut().enumerate() {
            let _ = ei;
            list.sort_by(|&x, &y| {
                file.bins[x]
                    .offset
                    .partial_cmp(&file.bins[y].offset)
                    .unwrap()
                    .then(file.bins[x].id.cmp(&file.bins[y].id))
            });
        }

        let mut seen = HashMap::new();
        let mut by_crossroad: HashMap<u64, u64> = HashMap::new();
        for d in &file.deposits {
            if seen.insert(d.id, ()).is_some() {
                return Err(ScenarioError::DuplicateId {
                    section: "deposits",
                    id: d.id,
                });
            }
            if !node_index.contains_key(&d.crossroad) {
                return Err(ScenarioError::UnknownDepositCrossroad {
                    deposit: d.id,
                    node: d.crossroad,
                });
            }
            if let Some(&first) = by_crossroad.get(&d.crossroad) {
                return Err(ScenarioError::DuplicateDepositCrossroad {
                    first,
                    second: d.id,
                    node: d.crossroad,
                });
            }
            by_crossroad.insert(d.crossroad, d.id);
        }

        // Connectivity via BFS from node 0.
        let n = file.crossroads.len();
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(_, v) in &adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(u) = visited.iter().position(|&v| !v) {
            return Err(ScenarioError::Disconnected {
                unreachable: file.crossroads[u].id,
                from: file.crossroads[0].id,
            });
        }

        Ok(Scenario {
            crossroads: file.crossroads,
            roads: file.roads,
            buildings: file.buildings,
            bins: file.bins,
            deposits: DepositSet(file.deposits),
            meta: file.meta,
            node_index,
            edge_index,
            edge_lengths,
            adjacency,
            edge_bins,
            bin_positions,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.crossroads.len()
    }

    pub fn num_edges(&self) -> usize {
        self.roads.len()
    }

    /// Dense index of a crossroad id.
    pub fn node_idx(&self, id: u64) -> Option<usize> {
        self.node_index.get(&id).copied()
    }

    /// Dense index of a road id.
    pub fn edge_idx(&self, id: u64) -> Option<usize> {
        self.edge_index.get(&id).copied()
    }

    pub fn edge_length(&self, edge: usize) -> Meters {
        self.edge_lengths[edge]
    }

    /// Incident (edge index, neighbor node index) pairs, sorted by road id.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    /// Bin indices hosted on an edge, sorted by offset from endpoint `a`.
    pub fn bins_on_edge(&self, edge: usize) -> &[usize] {
        &self.edge_bins[edge]
    }

    /// Planar position of a bin (the point at its offset along the host road).
    pub fn bin_position(&self, bin: usize) -> (Meters, Meters) {
        self.bin_positions[bin]
    }

    pub fn node_position(&self, node: usize) -> (Meters, Meters) {
        let c = &self.crossroads[node];
        (c.x, c.y)
    }

    /// Dense endpoint indices (a, b) of an edge.
    pub fn edge_endpoints(&self, edge: usize) -> (usize, usize) {
        let r = &self.roads[edge];
        (self.node_index[&r.a], self.node_index[&r.b])
    }

    /// The endpoint of `edge` that is not `node`.
    pub fn other_endpoint(&self, edge: usize, node: usize) -> usize {
        let (a, b) = self.edge_endpoints(edge);
        if a == node {
            b
        } else {
            debug_assert_eq!(b, node);
            a
        }
    }

    /// Replace the deposit set (used when deposits are placed by the engine).
    pub fn with_deposits(mut self, deposits: DepositSet) -> Result<Self, ScenarioError> {
        let mut by_crossroad: HashMap<u64, u64> = HashMap::new();
        for d in &deposits.0 {
            if !self.node_index.contains_key(&d.crossroad) {
                return Err(ScenarioError::UnknownDepositCrossroad {
                    deposit: d.id,
                    node: d.crossroad,
                });
            }
            if let Some(&first) = by_crossroad.get(&d.crossroad) {
                return Err(ScenarioError::DuplicateDepositCrossroad {
                    first,
                    second: d.id,
                    node: d.crossroad,
                });
            }
            by_crossroad.insert(d.crossroad, d.id);
        }
        self.deposits = deposits;
        Ok(self)
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = Some(meta);
        self
    }

    /// Serialize back to the canonical JSON interchange form.
    pub fn to_json(&self) -> String {
        let file: ScenarioFile = self.clone().into();
        serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_file() -> ScenarioFile {
        ScenarioFile {
            meta: None,
            crossroads: vec![
                Crossroad { id: 0, x: 0.0, y: 0.0 },
                Crossroad { id: 1, x: 100.0, y: 0.0 },
            ],
            roads: vec![Road { id: 0, a: 0, b: 1, length: None }],
            buildings: vec![],
            bins: vec![BinSite { id: 0, road: 0, offset: 50.0 }],
            deposits: vec![],
        }
    }

    #[test]
    fn minimal_scenario_loads() {
        let s = Scenario::from_file(minimal_file()).unwrap();
        assert_eq!(s.num_nodes(), 2);
        assert_eq!(s.num_edges(), 1);
        assert_eq!(s.bins.len(), 1);
        assert_eq!(s.edge_length(0), 100.0);
    }

    #[test]
    fn unknown_endpoint_rejected() {
        let mut f = minimal_file();
        f.roads[0].b = 99;
        let err = Scenario::from_file(f).unwrap_err();
        assert!(matches!(
            err,
            ScenarioError::UnknownEndpoint { road: 0, node: 99 }
        ));
    }

    #[test]
    fn offset_exceeding_length_rejected() {
        // 4-node square, 500 m sides, bin offset 600 on one edge.
        let f = ScenarioFile {
            meta: None,
            crossroads: vec![
                Crossroad { id: 0, x: 0.0, y: 0.0 },
                Crossroad { id: 1, x: 500.0, y: 0.0 },
                Crossroad { id: 2, x: 500.0, y: 500.0 },
                Crossroad { id: 3, x: 0.0, y: 500.0 },
            ],
            roads: vec![
                Road { id: 0, a: 0, b: 1, length: None },
                Road { id: 1, a: 1, b: 2, length: None },
                Road { id: 2, a: 2, b: 3, length: None },
                Road { id: 3, a: 3, b: 0, length: None },
            ],
            buildings: vec![],
            bins: vec![BinSite { id: 0, road: 0, offset: 600.0 }],
            deposits: vec![],
        };
        let err = Scenario::from_file(f).unwrap_err();
        assert!(matches!(err, ScenarioError::OffsetExceedsLength { bin: 0, .. }));
    }

    #[test]
    fn disconnected_graph_names_unreachable_node() {
        let f = ScenarioFile {
            meta: None,
            crossroads: vec![
                Crossroad { id: 0, x: 0.0, y: 0.0 },
                Crossroad { id: 1, x: 100.0, y: 0.0 },
                Crossroad { id: 7, x: 900.0, y: 0.0 },
                Crossroad { id: 8, x: 950.0, y: 0.0 },
            ],
            roads: vec![
                Road { id: 0, a: 0, b: 1, length: None },
                Road { id: 1, a: 7, b: 8, length: None },
            ],
            buildings: vec![],
            bins: vec![],
            deposits: vec![],
        };
        let err = Scenario::from_file(f).unwrap_err();
        assert!(matches!(err, ScenarioError::Disconnected { unreachable: 7, .. }));
    }

    #[test]
    fn self_loop_rejected() {
        let mut f = minimal_file();
        f.roads[0].b = 0;
        assert!(matches!(
            Scenario::from_file(f).unwrap_err(),
            ScenarioError::SelfLoop { .. }
        ));
    }

    #[test]
    fn overridden_length_must_be_positive() {
        let mut f = minimal_file();
        f.roads[0].length = Some(0.0);
        assert!(matches!(
            Scenario::from_file(f).unwrap_err(),
            ScenarioError::NonPositiveLength { .. }
        ));
    }

    #[test]
    fn duplicate_deposit_crossroad_rejected() {
        let mut f = minimal_file();
        f.deposits = vec![
            Deposit { id: 0, crossroad: 0 },
            Deposit { id: 1, crossroad: 0 },
        ];
        assert!(matches!(
            Scenario::from_file(f).unwrap_err(),
            ScenarioError::DuplicateDepositCrossroad { .. }
        ));
    }

    #[test]
    fn json_round_trip_preserves_world() {
        let s = Scenario::from_file(minimal_file()).unwrap();
        let json = s.to_json();
        let s2: Scenario = serde_json::from_str(&json).unwrap();
        assert_eq!(s, s2);
    }
}
