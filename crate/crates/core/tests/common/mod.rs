#![allow(dead_code)]

use beamfair::config::edge_positions;
use beamfair::{BeamConfig, NetworkConfig};
use rand::Rng;

pub fn cfg_with(n_ues: usize, n_aps: usize) -> NetworkConfig {
    let mut cfg = NetworkConfig::default();
    cfg.n_ues = n_ues;
    cfg.n_aps = n_aps;
    cfg.ap_positions = edge_positions(n_aps, cfg.area_width, cfg.area_height);
    cfg.ap_boresight_reference = vec![cfg.ap_boresight_reference[0]; n_aps];
    cfg
}

pub fn random_q<R: Rng>(cfg: &NetworkConfig, rng: &mut R) -> BeamConfig {
    BeamConfig {
        widths: (0..cfg.n_aps).map(|_| rng.gen_range(0..cfg.beamwidth_set.len())).collect(),
        directions: (0..cfg.n_aps).map(|_| rng.gen_range(0..cfg.direction_set.len())).collect(),
    }
}
