//! Deposit placement by Lloyd's k-means over bin positions, with centroids
//! snapped to crossroads.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Deposit, DepositSet, Scenario, ScenarioError};
use crate::num::Real;

/// Plain Lloyd's k-means in the Euclidean plane.
///
/// Initial centroids are `k` distinct points sampled by the seeded RNG.
/// An emptied cluster is reseeded to the point farthest from its previous
/// centroid. Returns the converged centroids in cluster order.
pub fn lloyd<F: Real>(
    points: &[(F, F)],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Vec<(F, F)> {
    assert!(k >= 1 && k <= points.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<(F, F)> = sample(&mut rng, points.len(), k)
        .into_iter()
        .map(|i| points[i])
        .collect();

    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..max_iters {
        let mut changed = false;
        for (pi, p) in points.iter().enumerate() {
            let best = nearest(&centroids, *p);
            if assignment[pi] != best {
                assignment[pi] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }

        for (ci, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..points.len())
                .filter(|&pi| assignment[pi] == ci)
                .collect();
            if members.is_empty() {
                // Reseed to the point farthest from this centroid.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        dist2(points[a], *centroid)
                            .partial_cmp(&dist2(points[b], *centroid))
                            .unwrap()
                    })
                    .unwrap();
                *centroid = points[far];
                continue;
            }
            let n = F::from(members.len()).unwrap();
            let mut sx = F::zero();
            let mut sy = F::zero();
            for &pi in &members {
                sx = sx + points[pi].0;
                sy = sy + points[pi].1;
            }
            *centroid = (sx / n, sy / n);
        }
    }
    centroids
}

fn dist2<F: Real>(a: (F, F), b: (F, F)) -> F {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

fn nearest<F: Real>(centroids: &[(F, F)], p: (F, F)) -> usize {
    let mut best = 0;
    let mut best_d = dist2(centroids[0], p);
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(*c, p);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Place `k` deposits by clustering bin positions and snapping each converged
/// centroid to the nearest crossroad. A centroid snapping onto an already
/// used crossroad moves to the next-nearest unused one. Deterministic for a
/// fixed seed.
pub fn place_deposits(
    scenario: &Scenario,
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<DepositSet, ScenarioError> {
    if k < 1 {
        return Err(ScenarioError::InvalidArgument(
            "deposit count must be at least 1".into(),
        ));
    }
    if k > scenario.bins.len() {
        return Err(ScenarioError::InvalidArgument(format!(
            "deposit count {k} exceeds bin count {}",
            scenario.bins.len()
        )));
    }
    if k > scenario.num_nodes() {
        return Err(ScenarioError::InvalidArgument(format!(
            "deposit count {k} exceeds crossroad count {}",
            scenario.num_nodes()
        )));
    }

    let points: Vec<(f64, f64)> = (0..scenario.bins.len())
        .map(|i| scenario.bin_position(i))
        .collect();
    let centroids = lloyd(&points, k, seed, max_iters);

    let mut used = vec![false; scenario.num_nodes()];
    let mut deposits = Vec::with_capacity(k);
    for (ci, &c) in centroids.iter().enumerate() {
        // Crossroads ranked by distance to the centroid; ties by node id via
        // the stable strict-less scan over id-ordered nodes.
        let mut order: Vec<usize> = (0..scenario.num_nodes()).collect();
        order.sort_by(|&a, &b| {
            dist2(scenario.node_position(a), c)
                .partial_cmp(&dist2(scenario.node_position(b), c))
                .unwrap()
                .then(scenario.crossroads[a].id.cmp(&scenario.crossroads[b].id))
        });
        let node = order
            .into_iter()
            .find(|&n| !used[n])
            .expect("k <= crossroad count guarantees a free crossroad");
        used[node] = true;
        deposits.push(Deposit {
            id: ci as u64,
            crossroad: scenario.crossroads[node].id,
        });
    }
    Ok(DepositSet(deposits))
}
