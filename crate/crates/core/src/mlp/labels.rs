//! One-hot label codec and input features.

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scenario::{BeamConfig, Scenario};

/// Partition of the output layer into `M` width heads followed by `M`
/// direction heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadLayout {
    pub n_aps: usize,
    pub n_widths: usize,
    pub n_directions: usize,
}

impl HeadLayout {
    pub fn from_config(cfg: &NetworkConfig) -> Self {
        Self {
            n_aps: cfg.n_aps,
            n_widths: cfg.beamwidth_set.len(),
            n_directions: cfg.direction_set.len(),
        }
    }

    pub fn output_len(&self) -> usize {
        self.n_aps * (self.n_widths + self.n_directions)
    }

    pub fn n_heads(&self) -> usize {
        2 * self.n_aps
    }

    /// Offset and length of head `k`; heads `0..M` are widths, `M..2M` directions.
    pub fn head(&self, k: usize) -> (usize, usize) {
        if k < self.n_aps {
            (k * self.n_widths, self.n_widths)
        } else {
            let j = k - self.n_aps;
            (self.n_aps * self.n_widths + j * self.n_directions, self.n_directions)
        }
    }

    pub fn heads(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_heads()).map(move |k| self.head(k))
    }
}

/// One-hot targets of a beam configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub width_onehots: Vec<Vec<u8>>,
    pub direction_onehots: Vec<Vec<u8>>,
}

fn one_hot(len: usize, index: usize) -> Vec<u8> {
    let mut v = vec![0; len];
    v[index] = 1;
    v
}

fn hot_index(v: &[u8]) -> usize {
    v.iter().position(|&x| x == 1).expect("one-hot vector has a set entry")
}

impl LabelSet {
    /// Hot index of every head, widths first.
    pub fn targets(&self) -> Vec<usize> {
        self.width_onehots
            .iter()
            .chain(&self.direction_onehots)
            .map(|v| hot_index(v))
            .collect()
    }

    pub fn from_targets(layout: &HeadLayout, targets: &[usize]) -> Self {
        let (w, d) = targets.split_at(layout.n_aps);
        Self {
            width_onehots: w.iter().map(|&i| one_hot(layout.n_widths, i)).collect(),
            direction_onehots: d.iter().map(|&i| one_hot(layout.n_directions, i)).collect(),
        }
    }
}

pub fn encode_labels(q: &BeamConfig, cfg: &NetworkConfig) -> Result<LabelSet> {
    q.validate(cfg)?;
    let (nw, nd) = (cfg.beamwidth_set.len(), cfg.direction_set.len());
    Ok(LabelSet {
        width_onehots: q.widths.iter().map(|&i| one_hot(nw, i)).collect(),
        direction_onehots: q.directions.iter().map(|&i| one_hot(nd, i)).collect(),
    })
}

/// First index of the maximum.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Maps per-head scores to the configuration of their argmax entries.
pub fn decode_labels<T: Scalar>(
    width_scores: &[Vec<T>],
    direction_scores: &[Vec<T>],
    cfg: &NetworkConfig,
) -> Result<BeamConfig> {
    let check = |scores: &[Vec<T>], len: usize, what: &str| {
        if scores.len() != cfg.n_aps || scores.iter().any(|s| s.len() != len) {
            Err(Error::Dimension(format!(
                "expected {} {what} heads of length {len}",
                cfg.n_aps
            )))
        } else {
            Ok(())
        }
    };
    check(width_scores, cfg.beamwidth_set.len(), "width")?;
    check(direction_scores, cfg.direction_set.len(), "direction")?;
    Ok(BeamConfig {
        widths: width_scores.iter().map(|s| argmax(s)).collect(),
        directions: direction_scores.iter().map(|s| argmax(s)).collect(),
    })
}

/// Row-major `[x, y, tx_direction]` per UE, each column scaled to unit range:
/// positions to `[-1, 1]`, direction to `[0, 1]`.
pub fn featurize<T: Scalar>(scenario: &Scenario, cfg: &NetworkConfig) -> Vec<T> {
    let (lo, hi) = cfg.ue_tx_direction_range;
    scenario
        .rows()
        .iter()
        .flat_map(|r| {
            [
                r.position.x / cfg.half_width(),
                r.position.y / cfg.half_height(),
                (r.tx_direction - lo) / (hi - lo),
            ]
        })
        .map(T::lit)
        .collect()
}
