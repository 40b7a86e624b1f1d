//! Randomized property suites for the pheromone kernel, bin packing, and the
//! regression's standardization invariances.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use urbanswarm::agents::TrashBin;
use urbanswarm::experiments::{standardized_regression, SweepRow};
use urbanswarm::liters_to_ml;
use urbanswarm::stigmergy::{
    max_pheromone, select_edge, update_tag, ArrivalContext, CrossroadTag, PheromoneParams,
};

fn tag(amounts: Vec<f64>) -> CrossroadTag {
    let incident: Vec<usize> = (0..amounts.len()).collect();
    let mut t = CrossroadTag::new(0, incident, 0.0, None, 0);
    t.amounts = amounts;
    t
}

fn params(e_r: f64, x_r: f64) -> PheromoneParams {
    PheromoneParams {
        evaporation_rate: e_r,
        exploitation_rate: x_r,
        per_liter: 1.0,
        exclude_arrival_edge: true,
    }
}

prop_compose! {
    fn arb_amounts()(v in prop::collection::vec(0.0f64..1e6, 1..6)) -> Vec<f64> { v }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn update_never_produces_negative_amounts(
        amounts in arb_amounts(),
        slot_pick in 0usize..6,
        e_r in 0.0f64..=1.0,
        x_r in 0.01f64..=1.0,
        elapsed in 0.0f64..10_000.0,
        prev_max in 0.0f64..1e6,
        carried in prop::option::of(0.0f64..100.0),
    ) {
        let mut t = tag(amounts.clone());
        let ctx = ArrivalContext {
            arrival_edge: slot_pick % amounts.len(),
            now: elapsed,
            carried_liters: carried,
            prev_tag_max: prev_max,
        };
        update_tag(&mut t, &ctx, &params(e_r, x_r));
        for &a in &t.amounts {
            prop_assert!(a >= 0.0, "negative pheromone {a}");
            prop_assert!(a.is_finite());
        }
        prop_assert!(max_pheromone(&t) >= 0.0);
    }

    #[test]
    fn evaporation_is_monotone_in_elapsed_time(
        amounts in arb_amounts(),
        e_r in 0.001f64..=1.0,
        t1 in 0.0f64..1000.0,
        dt in 0.0f64..1000.0,
    ) {
        // Same tag updated after t1 vs t1 + dt: every non-arrival edge can
        // only hold less (or equally much, once clamped) pheromone.
        let mk = |elapsed: f64| {
            let mut t = tag(amounts.clone());
            update_tag(
                &mut t,
                &ArrivalContext { arrival_edge: 0, now: elapsed, carried_liters: None, prev_tag_max: 0.0 },
                &params(e_r, 0.75),
            );
            t
        };
        let shorter = mk(t1);
        let longer = mk(t1 + dt);
        for i in 1..amounts.len() {
            prop_assert!(longer.amounts[i] <= shorter.amounts[i]);
        }
    }

    #[test]
    fn marking_adds_exactly_per_liter_times_found(
        amounts in arb_amounts(),
        e_r in 0.0f64..=1.0,
        elapsed in 0.0f64..100.0,
        t_a in 0.0f64..200.0,
    ) {
        // With no diffusion input, the carry and no-carry updates differ by
        // exactly P_a * T_a on the arrival edge.
        let mk = |carried: Option<f64>| {
            let mut t = tag(amounts.clone());
            update_tag(
                &mut t,
                &ArrivalContext { arrival_edge: 0, now: elapsed, carried_liters: carried, prev_tag_max: 0.0 },
                &params(e_r, 0.75),
            );
            t.amounts[0]
        };
        let plain = mk(None);
        let marked = mk(Some(t_a));
        let diff = marked - plain;
        prop_assert!((diff - t_a).abs() <= 1e-12 * t_a.max(plain).max(1.0));
    }

    #[test]
    fn selection_is_invariant_under_positive_rescaling(
        // Multiples of 0.25 scaled by powers of two: scaling is exact, so
        // distinctness of amounts survives and the branch taken cannot flip.
        quarters in prop::collection::vec(0u32..256, 2..6),
        scale_exp in -2i32..3,
        came_from in prop::option::of(0usize..6),
        seed in 0u64..1_000_000,
        x_r in 0.01f64..=1.0,
    ) {
        let amounts: Vec<f64> = quarters.iter().map(|&q| q as f64 * 0.25).collect();
        let scale = 2.0f64.powi(scale_exp);
        let scaled: Vec<f64> = amounts.iter().map(|&a| a * scale).collect();
        let came_from = came_from.map(|c| c % amounts.len());
        let p = params(0.15, x_r);
        let pick = |amounts: Vec<f64>| {
            let t = tag(amounts);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            select_edge(&t, came_from, &p, &mut rng)
        };
        prop_assert_eq!(pick(amounts), pick(scaled));
    }

    #[test]
    fn bin_packing_invariants_hold_under_random_traffic(
        unit_l in 1.0f64..20.0,
        capacity_extra_l in 0.0f64..200.0,
        ops in prop::collection::vec((0.0f64..20.0, prop::bool::ANY), 1..60),
    ) {
        let unit = liters_to_ml(unit_l);
        let capacity = unit + liters_to_ml(capacity_extra_l);
        let mut bin = TrashBin::new(0, capacity, unit);
        let mut absorbed: i64 = 0;
        let mut withdrawn: i64 = 0;
        for (amount_l, withdraw) in ops {
            if withdraw {
                if let Some(found) = bin.withdraw_unit() {
                    prop_assert!(found >= unit);
                    withdrawn += unit;
                }
            } else {
                let amount = liters_to_ml(amount_l);
                if bin.can_accept(amount) {
                    bin.absorb(amount);
                    absorbed += amount;
                }
            }
            prop_assert!(bin.loose >= 0);
            prop_assert!(bin.packed_units <= bin.max_slots());
            prop_assert!(bin.stored() <= bin.capacity);
            // Loose beyond a unit's worth is only legal with all slots taken.
            prop_assert!(bin.loose < bin.unit_size || bin.packed_units == bin.max_slots());
            prop_assert_eq!(absorbed - withdrawn, bin.stored());
        }
    }

    #[test]
    fn fullness_matches_remaining_capacity_exactly(
        stored_l in 0.0f64..125.0,
        lambda_l in 0.1f64..20.0,
    ) {
        let mut bin = TrashBin::new(0, liters_to_ml(125.0), liters_to_ml(125.0));
        let stored = liters_to_ml(stored_l);
        bin.loose = stored;
        let lambda = liters_to_ml(lambda_l);
        prop_assert_eq!(bin.is_full(lambda), bin.remaining() < lambda);
        prop_assert_eq!(bin.is_full(lambda), !bin.can_accept(lambda));
    }
}

fn rows_from(values: &[(u32, f64, u32, f64, f64)]) -> Vec<SweepRow> {
    values
        .iter()
        .map(|&(robots, unit_size_l, deposits, aut, ftb)| SweepRow {
            robots,
            evaporation_rate: 0.15,
            exploitation_rate: 0.75,
            unit_size_l,
            deposits,
            seed: 0,
            aut_pct: Some(aut),
            ftb_pct: Some(ftb),
            error: None,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn regression_is_invariant_under_affine_predictor_changes(
        raw in prop::collection::vec((1u32..60, 1.0f64..30.0, 1u32..8, -10.0f64..10.0, -10.0f64..10.0), 8..30),
        scale in 0.05f64..20.0,
        shift in -100.0f64..100.0,
    ) {
        let predictors: Vec<String> =
            ["robots", "unit_size_l", "deposits"].iter().map(|s| s.to_string()).collect();
        let rows = rows_from(&raw);
        let base = match standardized_regression(&rows, &predictors) {
            Ok(r) => r,
            // Degenerate draws (constant column, collinear design) are
            // legitimately rejected; nothing to compare.
            Err(_) => return Ok(()),
        };
        let mut moved_raw = raw.clone();
        for r in &mut moved_raw {
            r.1 = r.1 * scale + shift;
        }
        let moved = match standardized_regression(&rows_from(&moved_raw), &predictors) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        for (a, b) in base.aut.coefficients.iter().zip(&moved.aut.coefficients) {
            prop_assert!((a.1 - b.1).abs() <= 1e-9, "{} vs {}", a.1, b.1);
        }
        for (a, b) in base.ftb.coefficients.iter().zip(&moved.ftb.coefficients) {
            prop_assert!((a.1 - b.1).abs() <= 1e-9, "{} vs {}", a.1, b.1);
        }
    }
}

/// Regressing a response that is exactly one predictor yields beta = 1.
#[test]
fn self_regression_beta_is_one() {
    let raw: Vec<(u32, f64, u32, f64, f64)> = (0..20)
        .map(|i| {
            let robots = 5 + 3 * i as u32;
            (robots, 12.0, 2, robots as f64, robots as f64 * 0.1)
        })
        .collect();
    let rows = rows_from(&raw);
    let report = standardized_regression(&rows, &["robots".to_string()]).unwrap();
    assert!((report.coefficient("aut", "robots").unwrap() - 1.0).abs() <= 1e-12);
    assert!((report.coefficient("ftb", "robots").unwrap() - 1.0).abs() <= 1e-12);
    assert!((report.aut.r_squared - 1.0).abs() <= 1e-12);
}
