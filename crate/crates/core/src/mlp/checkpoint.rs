//! Versioned JSON checkpoints. Parameters are written as `f64` with
//! shortest round-trip formatting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::labels::HeadLayout;
use super::network::{Dense, MlpModel};
use crate::config::{Fingerprint, NetworkConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "beamfair-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    heads: HeadLayout,
    fingerprint: Fingerprint,
    layers: Vec<LayerFile>,
}

pub fn to_json<T: Scalar>(model: &MlpModel<T>, cfg: &NetworkConfig) -> String {
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        layer_sizes: model.layer_sizes(),
        heads: model.heads(),
        fingerprint: cfg.fingerprint(),
        layers: model
            .layers()
            .iter()
            .map(|l| LayerFile {
                weights: l.weights.iter().map(|v| v.as_f64()).collect(),
                bias: l.bias.iter().map(|v| v.as_f64()).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("checkpoint serializes")
}

/// Parses a checkpoint and checks it against `cfg`'s dimensions.
pub fn from_json<T: Scalar>(text: &str, cfg: &NetworkConfig, path: &Path) -> Result<MlpModel<T>> {
    let malformed = |msg: String| Error::Malformed {
        path: path.to_path_buf(),
        line: 1,
        msg,
    };
    let file: CheckpointFile = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    if file.format != CHECKPOINT_FORMAT {
        return Err(malformed(format!("unexpected format tag {:?}", file.format)));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::SchemaVersion {
            path: path.to_path_buf(),
            found: file.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if file.fingerprint != cfg.fingerprint() {
        return Err(Error::Dimension(format!(
            "checkpoint was trained for {:?}, configuration is {:?}",
            file.fingerprint,
            cfg.fingerprint()
        )));
    }
    if file.layer_sizes.len() != file.layers.len() + 1 {
        return Err(malformed("layer size list does not match layer count".into()));
    }
    let layers = file
        .layers
        .into_iter()
        .zip(file.layer_sizes.windows(2))
        .map(|(l, w)| Dense {
            n_in: w[0],
            n_out: w[1],
            weights: l.weights.into_iter().map(T::lit).collect(),
            bias: l.bias.into_iter().map(T::lit).collect(),
        })
        .collect();
    let model = MlpModel::from_layers(layers, file.heads)?;
    if model.input_len() != 3 * cfg.n_ues {
        return Err(Error::Dimension("checkpoint input size does not match 3 x n_ues".into()));
    }
    Ok(model)
}

pub fn save<T: Scalar>(model: &MlpModel<T>, cfg: &NetworkConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(model, cfg)).map_err(|e| Error::io(path, e))
}

pub fn load<T: Scalar>(path: impl AsRef<Path>, cfg: &NetworkConfig) -> Result<MlpModel<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text, cfg, path)
}
