//! Synthetic grid scenario generator, a desk-scale substitute for real map
//! data.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    BinSite, Building, BuildingKind, Crossroad, Road, Scenario, ScenarioError, ScenarioFile,
};
use crate::Meters;

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub edge_len: Meters,
    pub n_bins: usize,
    pub n_buildings: usize,
    pub seed: u64,
}

/// Generate a rows x cols lattice with uniform edge lengths, bins at the
/// midpoint of distinct randomly chosen edges, and buildings on random
/// crossroads with kinds assigned round-robin (home, work, amenity).
///
/// Deterministic for fixed arguments.
pub fn generate_grid(spec: GridSpec) -> Result<Scenario, ScenarioError> {
    let GridSpec { rows, cols, edge_len, n_bins, n_buildings, seed } = spec;
    if rows < 2 || cols < 2 {
        return Err(ScenarioError::InvalidArgument(format!(
            "grid must be at least 2x2, got {rows}x{cols}"
        )));
    }
    if edge_len <= 0.0 || edge_len.is_nan() {
        return Err(ScenarioError::InvalidArgument(format!(
            "edge length must be positive, got {edge_len}"
        )));
    }
    let n_edges = rows * (cols - 1) + cols * (rows - 1);
    if n_bins > n_edges {
        return Err(ScenarioError::InvalidArgument(format!(
            "cannot place {n_bins} bins: only {n_edges} edges exist"
        )));
    }

    let node_id = |r: usize, c: usize| (r * cols + c) as u64;
    let crossroads: Vec<Crossroad> = (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| Crossroad {
                id: node_id(r, c),
                x: c as f64 * edge_len,
                y: r as f64 * edge_len,
            })
        })
        .collect();

    let mut roads = Vec::with_capacity(n_edges);
    let mut next_id = 0u64;
    for r in 0..rows {
        for c in 0..cols.saturating_sub(1) {
            roads.push(Road {
                id: next_id,
                a: node_id(r, c),
                b: node_id(r, c + 1),
                length: Some(edge_len),
            });
            next_id += 1;
        }
    }
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols {
            roads.push(Road {
                id: next_id,
                a: node_id(r, c),
                b: node_id(r + 1, c),
                length: Some(edge_len),
            });
            next_id += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bin_edges: Vec<usize> = sample(&mut rng, n_edges, n_bins).into_vec();
    bin_edges.sort_unstable();
    let bins: Vec<BinSite> = bin_edges
        .iter()
        .enumerate()
        .map(|(i, &e)| BinSite {
            id: i as u64,
            road: roads[e].id,
            offset: edge_len / 2.0,
        })
        .collect();

    const KINDS: [BuildingKind; 3] =
        [BuildingKind::Home, BuildingKind::Work, BuildingKind::Amenity];
    let buildings: Vec<Building> = (0..n_buildings)
        .map(|i| Building {
            id: i as u64,
            crossroad: rng.gen_range(0..crossroads.len()) as u64,
            kind: KINDS[i % 3],
        })
        .collect();

    Scenario::from_file(ScenarioFile {
        meta: None,
        crossroads,
        roads,
        buildings,
        bins,
        deposits: vec![],
    })
}
