//! UE scenarios (the sorted `[x, y, tx_direction]` matrix), receive-beam
//! configurations, and the two UE placement distributions.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{NetworkConfig, Point};
use crate::error::{Error, Result};

/// Cap on consecutive rejected draws before a placement is declared infeasible.
const MAX_REJECTIONS: usize = 1_000_000;

/// One row of the UE information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeState {
    pub position: Point,
    /// Transmit beam direction, radians.
    pub tx_direction: f64,
}

impl UeState {
    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.position
            .x
            .total_cmp(&other.position.x)
            .then(self.position.y.total_cmp(&other.position.y))
            .then(self.tx_direction.total_cmp(&other.tx_direction))
    }
}

/// UE information matrix with rows in lexicographic `(x, y, tx_direction)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    rows: Vec<UeState>,
}

impl Scenario {
    /// Sorts `rows` into canonical order. No geometric validation.
    pub fn new(mut rows: Vec<UeState>) -> Self {
        rows.sort_by(UeState::lex_cmp);
        Self { rows }
    }

    /// Sorts and checks containment, direction range and row count against `cfg`.
    pub fn from_rows(cfg: &NetworkConfig, rows: Vec<UeState>) -> Result<Self> {
        let s = Self::new(rows);
        s.validate(cfg)?;
        Ok(s)
    }

    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        if self.rows.len() != cfg.n_ues {
            return Err(Error::Dimension(format!(
                "scenario has {} UEs, configuration expects {}",
                self.rows.len(),
                cfg.n_ues
            )));
        }
        let (lo, hi) = cfg.ue_tx_direction_range;
        for (n, r) in self.rows.iter().enumerate() {
            if !cfg.contains(&r.position) {
                return Err(Error::Config(format!(
                    "UE {n} at ({}, {}) lies outside the deployment area",
                    r.position.x, r.position.y
                )));
            }
            if !(r.tx_direction >= lo && r.tx_direction <= hi) {
                return Err(Error::Config(format!(
                    "UE {n} transmit direction {} rad is outside [{lo}, {hi}]",
                    r.tx_direction
                )));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[UeState] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[0].lex_cmp(&w[1]) != Ordering::Greater)
    }
}

fn too_close(cfg: &NetworkConfig, p: &Point) -> bool {
    cfg.ap_positions
        .iter()
        .any(|ap| ap.distance(p) <= cfg.min_distance)
}

fn draw_directions<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Vec<f64> {
    let (lo, hi) = cfg.ue_tx_direction_range;
    (0..cfg.n_ues).map(|_| rng.gen_range(lo..hi)).collect()
}

fn assemble(directions: Vec<f64>, positions: Vec<Point>) -> Scenario {
    let rows = positions
        .into_iter()
        .zip(directions)
        .map(|(position, tx_direction)| UeState {
            position,
            tx_direction,
        })
        .collect();
    Scenario::new(rows)
}

/// Case C1: positions uniform over the rectangle.
///
/// Transmit directions are drawn before positions, so C1 and C2 scenarios
/// sampled from equally seeded sources share their directions. Draws within
/// `min_distance` of an AP are redrawn.
pub fn sample_scenario_c1<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Scenario {
    let directions = draw_directions(cfg, rng);
    let (hw, hh) = (cfg.half_width(), cfg.half_height());
    let positions = (0..cfg.n_ues)
        .map(|_| loop {
            let p = Point::new(rng.gen_range(-hw..hw), rng.gen_range(-hh..hh));
            if !too_close(cfg, &p) {
                break p;
            }
        })
        .collect();
    assemble(directions, positions)
}

/// Distance from `center` to the closed deployment rectangle.
fn distance_to_area(cfg: &NetworkConfig, center: Point) -> f64 {
    let cx = center.x.clamp(-cfg.half_width(), cfg.half_width());
    let cy = center.y.clamp(-cfg.half_height(), cfg.half_height());
    center.distance(&Point::new(cx, cy))
}

/// Case C2: `r ~ U[0, radius]`, `phi ~ U[0, 2pi)` around `center`; draws that
/// leave the rectangle are rejected and redrawn.
pub fn sample_scenario_c2<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    rng: &mut R,
    center: Point,
    radius: f64,
) -> Result<Scenario> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Config(format!("disk radius must be positive, got {radius}")));
    }
    let outside = Error::DiskOutsideArea(center.x, center.y, radius);
    let gap = distance_to_area(cfg, center);
    if gap > 0.0 && gap >= radius {
        return Err(outside);
    }
    let directions = draw_directions(cfg, rng);
    let mut positions = Vec::with_capacity(cfg.n_ues);
    for _ in 0..cfg.n_ues {
        let mut attempts = 0;
        let p = loop {
            let r = rng.gen_range(0.0..=radius);
            let phi = rng.gen_range(0.0..TAU);
            let p = Point::new(center.x + r * phi.cos(), center.y + r * phi.sin());
            if cfg.contains(&p) && !too_close(cfg, &p) {
                break p;
            }
            attempts += 1;
            if attempts >= MAX_REJECTIONS {
                return Err(outside);
            }
        };
        positions.push(p);
    }
    Ok(assemble(directions, positions))
}

/// Per-AP receive beam choice, stored as indices into the configured sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeamConfig {
    /// Index into the beamwidth set, one per AP.
    pub widths: Vec<usize>,
    /// Index into the direction set, one per AP.
    pub directions: Vec<usize>,
}

impl BeamConfig {
    pub fn n_aps(&self) -> usize {
        self.widths.len()
    }

    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        if self.widths.len() != cfg.n_aps || self.directions.len() != cfg.n_aps {
            return Err(Error::Dimension(format!(
                "beam configuration covers {}/{} APs, configuration has {}",
                self.widths.len(),
                self.directions.len(),
                cfg.n_aps
            )));
        }
        if let Some(&w) = self.widths.iter().find(|&&w| w >= cfg.beamwidth_set.len()) {
            return Err(Error::NotInSet {
                set: "beamwidth",
                value: format!("index {w}"),
            });
        }
        if let Some(&d) = self.directions.iter().find(|&&d| d >= cfg.direction_set.len()) {
            return Err(Error::NotInSet {
                set: "direction",
                value: format!("index {d}"),
            });
        }
        Ok(())
    }

    /// Builds a configuration from angles (radians); each must equal a set element exactly.
    pub fn from_angles(cfg: &NetworkConfig, widths: &[f64], directions: &[f64]) -> Result<Self> {
        let lookup = |set: &[f64], name: &'static str, v: f64| {
            set.iter().position(|&s| s == v).ok_or(Error::NotInSet {
                set: name,
                value: format!("{} deg", v.to_degrees()),
            })
        };
        let q = Self {
            widths: widths
                .iter()
                .map(|&v| lookup(&cfg.beamwidth_set, "beamwidth", v))
                .collect::<Result<_>>()?,
            directions: directions
                .iter()
                .map(|&v| lookup(&cfg.direction_set, "direction", v))
                .collect::<Result<_>>()?,
        };
        q.validate(cfg)?;
        Ok(q)
    }

    pub fn rx_beamwidths(&self, cfg: &NetworkConfig) -> Vec<f64> {
        self.widths.iter().map(|&i| cfg.beamwidth_set[i]).collect()
    }

    pub fn rx_directions(&self, cfg: &NetworkConfig) -> Vec<f64> {
        self.directions.iter().map(|&i| cfg.direction_set[i]).collect()
    }

    /// Position in the canonical enumeration order.
    pub fn canonical_index(&self, cfg: &NetworkConfig) -> usize {
        let nw = cfg.beamwidth_set.len();
        let nd = cfg.direction_set.len();
        let w = self.widths.iter().fold(0, |acc, &i| acc * nw + i);
        let d = self.directions.iter().fold(0, |acc, &i| acc * nd + i);
        w * nd.pow(self.n_aps() as u32) + d
    }

    /// Inverse of [`BeamConfig::canonical_index`].
    pub fn from_canonical_index(cfg: &NetworkConfig, index: usize) -> Self {
        let m = cfg.n_aps;
        let nw = cfg.beamwidth_set.len();
        let nd = cfg.direction_set.len();
        let dir_block = nd.pow(m as u32);
        let (mut w, mut d) = (index / dir_block, index % dir_block);
        let mut widths = vec![0; m];
        let mut directions = vec![0; m];
        for k in (0..m).rev() {
            widths[k] = w % nw;
            w /= nw;
            directions[k] = d % nd;
            d /= nd;
        }
        Self { widths, directions }
    }
}

/// Every receive beam configuration in canonical mixed-radix order, with the
/// beamwidth indices as the most significant digits.
pub fn enumerate_beam_configs(
    cfg: &NetworkConfig,
) -> impl ExactSizeIterator<Item = BeamConfig> + '_ {
    (0..cfg.n_beam_configs()).map(move |i| BeamConfig::from_canonical_index(cfg, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn cfg_with(m: usize, widths: &[f64], dirs: &[f64]) -> NetworkConfig {
        let mut cfg = NetworkConfig::default();
        cfg.n_aps = m;
        cfg.ap_positions = crate::config::edge_positions(m, cfg.area_width, cfg.area_height);
        cfg.ap_boresight_reference = vec![std::f64::consts::PI; m];
        cfg.beamwidth_set = widths.iter().map(|d: &f64| d.to_radians()).collect();
        cfg.direction_set = dirs.iter().map(|d: &f64| d.to_radians()).collect();
        cfg
    }

    #[test]
    fn c1_rows_inside_and_sorted() {
        let cfg = NetworkConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_scenario_c1(&cfg, &mut rng);
        assert_eq!(s.len(), 10);
        assert!(s.is_sorted());
        for r in s.rows() {
            assert!(r.position.x.abs() <= 10.0 && r.position.y.abs() <= 15.0);
        }
        s.validate(&cfg).unwrap();
    }

    #[test]
    fn single_ue_scenario() {
        let mut cfg = NetworkConfig::default();
        cfg.n_ues = 1;
        let s = sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s.len(), 1);
        assert!(s.is_sorted());
    }

    #[test]
    fn c1_is_seed_deterministic() {
        let cfg = NetworkConfig::default();
        let a = sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(11));
        let b = sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn c2_tiny_disk_collapses_to_center() {
        let cfg = NetworkConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = sample_scenario_c2(&cfg, &mut rng, Point::new(0.0, 0.0), 1e-12).unwrap();
        for r in s.rows() {
            assert!(r.position.x.abs() < 1e-11 && r.position.y.abs() < 1e-11);
        }
    }

    #[test]
    fn c2_disjoint_disk_is_an_error() {
        let cfg = NetworkConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let err = sample_scenario_c2(&cfg, &mut rng, Point::new(100.0, 0.0), 5.0).unwrap_err();
        assert!(matches!(err, Error::DiskOutsideArea(..)));
        // tangent disk: intersection has measure zero
        let err = sample_scenario_c2(&cfg, &mut rng, Point::new(15.0, 0.0), 5.0).unwrap_err();
        assert!(matches!(err, Error::DiskOutsideArea(..)));
        assert!(sample_scenario_c2(&cfg, &mut rng, Point::new(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn c1_and_c2_share_directions_under_one_seed() {
        let cfg = NetworkConfig::default();
        let a = sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_scenario_c2(&cfg, &mut ChaCha8Rng::seed_from_u64(9), Point::new(0.0, 0.0), 15.0)
            .unwrap();
        let mut da: Vec<f64> = a.rows().iter().map(|r| r.tx_direction).collect();
        let mut db: Vec<f64> = b.rows().iter().map(|r| r.tx_direction).collect();
        da.sort_by(f64::total_cmp);
        db.sort_by(f64::total_cmp);
        assert_eq!(da, db);
    }

    #[test]
    fn enumeration_sizes() {
        let cfg = NetworkConfig::default();
        assert_eq!(enumerate_beam_configs(&cfg).len(), 729);
        let cfg = cfg_with(3, &[30.0], &[90.0]);
        assert_eq!(enumerate_beam_configs(&cfg).count(), 1);
    }

    #[test]
    fn enumeration_canonical_order_single_ap() {
        let cfg = cfg_with(1, &[30.0, 45.0], &[80.0, 90.0]);
        let all: Vec<BeamConfig> = enumerate_beam_configs(&cfg).collect();
        assert_eq!(all.len(), 4);
        assert_eq!(all[0].rx_beamwidths(&cfg), vec![30f64.to_radians()]);
        assert_eq!(all[0].rx_directions(&cfg), vec![80f64.to_radians()]);
        assert_eq!(all[1].rx_directions(&cfg), vec![90f64.to_radians()]);
        assert_eq!(all[3].rx_beamwidths(&cfg), vec![45f64.to_radians()]);
        assert_eq!(all[3].rx_directions(&cfg), vec![90f64.to_radians()]);
    }

    #[test]
    fn enumeration_is_duplicate_free_and_indexed() {
        let cfg = cfg_with(2, &[30.0, 45.0, 60.0], &[80.0, 100.0]);
        let all: Vec<BeamConfig> = enumerate_beam_configs(&cfg).collect();
        assert_eq!(all.len(), 36);
        let set: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), 36);
        for (i, q) in all.iter().enumerate() {
            assert_eq!(q.canonical_index(&cfg), i);
            q.validate(&cfg).unwrap();
        }
    }

    #[test]
    fn from_angles_requires_exact_members() {
        let cfg = NetworkConfig::default();
        let w = cfg.beamwidth_set[1];
        let d = cfg.direction_set[2];
        let q = BeamConfig::from_angles(&cfg, &[w; 3], &[d; 3]).unwrap();
        assert_eq!(q.widths, vec![1; 3]);
        let err = BeamConfig::from_angles(&cfg, &[w + 1e-9; 3], &[d; 3]).unwrap_err();
        assert!(matches!(err, Error::NotInSet { .. }));
    }
}
