//! Scenario sampling: structural invariants and distribution checks.

mod common;

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use beamfair::scenario::{enumerate_beam_configs, sample_scenario_c1, sample_scenario_c2};
use beamfair::{NetworkConfig, Point, Scenario};
use common::cfg_with;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check_invariants(s: &Scenario, cfg: &NetworkConfig) {
    assert_eq!(s.len(), cfg.n_ues);
    assert!(s.is_sorted());
    let (lo, hi) = cfg.ue_tx_direction_range;
    for row in s.rows() {
        assert!(cfg.contains(&row.position), "{:?}", row.position);
        assert!(row.tx_direction >= lo && row.tx_direction <= hi);
        for ap in &cfg.ap_positions {
            assert!(row.position.distance(ap) > cfg.min_distance);
        }
    }
    s.validate(cfg).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn c1_samples_satisfy_invariants(seed in any::<u64>(), n in 1usize..16) {
        let cfg = cfg_with(n, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check_invariants(&sample_scenario_c1(&cfg, &mut rng), &cfg);
    }

    #[test]
    fn c2_samples_satisfy_invariants(
        seed in any::<u64>(),
        cx in -12.0f64..12.0,
        cy in -16.0f64..16.0,
        radius in 1.0f64..20.0,
    ) {
        let cfg = NetworkConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_scenario_c2(&cfg, &mut rng, Point::new(cx, cy), radius).unwrap();
        check_invariants(&s, &cfg);
        for row in s.rows() {
            prop_assert!(row.position.distance(&Point::new(cx, cy)) <= radius + 1e-9);
        }
    }

    #[test]
    fn same_seed_same_scenario(seed in any::<u64>()) {
        let cfg = NetworkConfig::default();
        let a = sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn enumeration_is_complete_and_distinct(nw in 1usize..4, nd in 1usize..4, m in 1usize..4) {
        let mut cfg = cfg_with(2, m);
        cfg.beamwidth_set = (0..nw).map(|k| (30.0 + 15.0 * k as f64).to_radians()).collect();
        cfg.direction_set = (0..nd).map(|k| (80.0 + 10.0 * k as f64).to_radians()).collect();
        let all: Vec<_> = enumerate_beam_configs(&cfg).collect();
        prop_assert_eq!(all.len(), (nw * nd).pow(m as u32));
        let distinct: HashSet<_> = all.iter().cloned().collect();
        prop_assert_eq!(distinct.len(), all.len());
        for (k, q) in all.iter().enumerate() {
            prop_assert_eq!(q.canonical_index(&cfg), k);
        }
    }
}

#[test]
fn disks_outside_the_area_are_rejected() {
    let cfg = NetworkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // nearest rectangle point is (10, 0), exactly 5 m away: tangent counts as outside
    assert!(sample_scenario_c2(&cfg, &mut rng, Point::new(15.0, 0.0), 5.0).is_err());
    assert!(sample_scenario_c2(&cfg, &mut rng, Point::new(15.0, 0.0), 5.5).is_ok());
    assert!(sample_scenario_c2(&cfg, &mut rng, Point::new(0.0, 0.0), 0.0).is_err());
}

#[test]
fn tiny_disk_collapses_to_its_center() {
    let cfg = NetworkConfig::default();
    let s = sample_scenario_c2(&cfg, &mut ChaCha8Rng::seed_from_u64(2), Point::new(0.0, 0.0), 1e-9).unwrap();
    assert!(s.rows().iter().all(|r| r.position.x.abs() < 1e-8 && r.position.y.abs() < 1e-8));
}

/// Positions from 10^4 scenarios of 10 UEs.
fn positions(sample: impl Fn(&mut ChaCha8Rng) -> Scenario) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..10_000).flat_map(|_| sample(&mut rng).rows().iter().map(|r| r.position).collect::<Vec<_>>()).collect()
}

#[test]
fn c1_mean_position_is_the_area_centroid() {
    let cfg = NetworkConfig::default();
    let pts = positions(|rng| sample_scenario_c1(&cfg, rng));
    let n = pts.len() as f64;
    assert_eq!(pts.len(), 100_000);
    // half-disc keep-out zones around the edge APs shift the y mean slightly
    let r = cfg.min_distance;
    let half_disc = PI * r * r / 2.0;
    let area = cfg.area_width * cfg.area_height;
    let removed = half_disc * cfg.n_aps as f64;
    let centroid_y = cfg.half_height() - 4.0 * r / (3.0 * PI);
    let expect_y = -removed * centroid_y / (area - removed);
    let mean_x = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let sx = cfg.area_width / 12f64.sqrt() / n.sqrt();
    let sy = cfg.area_height / 12f64.sqrt() / n.sqrt();
    assert!(mean_x.abs() < 3.0 * sx, "mean x {mean_x} vs 3 sigma {}", 3.0 * sx);
    assert!((mean_y - expect_y).abs() < 3.0 * sy, "mean y {mean_y} vs {expect_y} +- {}", 3.0 * sy);
}

/// Fraction of the circle of radius `r` around the origin that is accepted.
fn acceptance(cfg: &NetworkConfig, r: f64) -> f64 {
    let k = 4000;
    (0..k)
        .filter(|&j| {
            let phi = TAU * (j as f64 + 0.5) / k as f64;
            let p = Point::new(r * phi.cos(), r * phi.sin());
            cfg.contains(&p) && cfg.ap_positions.iter().all(|a| p.distance(a) > cfg.min_distance)
        })
        .count() as f64
        / k as f64
}

#[test]
fn c2_radial_distribution_matches_construction() {
    let cfg = NetworkConfig::default();
    let radius = 15.0;
    let pts = positions(|rng| sample_scenario_c2(&cfg, rng, Point::new(0.0, 0.0), radius).unwrap());
    let bins = 30;
    let mut observed = vec![0usize; bins];
    for p in &pts {
        let r = (p.x * p.x + p.y * p.y).sqrt();
        observed[((r / radius * bins as f64) as usize).min(bins - 1)] += 1;
    }
    // r ~ U[0, L] thinned by the accepted share of each circle
    let weights: Vec<f64> = (0..bins)
        .map(|b| {
            let sub = 20;
            (0..sub)
                .map(|s| acceptance(&cfg, radius * (b as f64 + (s as f64 + 0.5) / sub as f64) / bins as f64))
                .sum::<f64>()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let n = pts.len() as f64;
    let chi2: f64 = observed
        .iter()
        .zip(&weights)
        .map(|(&o, &w)| {
            let e = n * w / total;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    // 29 degrees of freedom: the 0.999 quantile is 58.3
    assert!(chi2 < 58.3, "chi-square {chi2}, observed {observed:?}");
    // r-uniform rather than area-uniform: inner half of the radius holds about half the points
    let inner = pts.iter().filter(|p| (p.x * p.x + p.y * p.y).sqrt() < radius / 2.0).count() as f64 / n;
    assert!(inner > 0.5, "{inner}");
}

#[test]
fn c1_and_c2_share_directions_under_one_seed() {
    let cfg = NetworkConfig::default();
    for seed in 0..20 {
        let a = sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = sample_scenario_c2(&cfg, &mut ChaCha8Rng::seed_from_u64(seed), Point::new(0.0, 0.0), 15.0).unwrap();
        let dirs = |s: &Scenario| {
            let mut d: Vec<f64> = s.rows().iter().map(|r| r.tx_direction).collect();
            d.sort_by(f64::total_cmp);
            d
        };
        assert_eq!(dirs(&a), dirs(&b));
    }
}
