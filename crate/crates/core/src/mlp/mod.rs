//! One-shot beam predictor: a two-hidden-layer ReLU network whose output is
//! split into one softmax head per AP parameter.

pub mod adadelta;
pub mod checkpoint;
pub mod labels;
pub mod network;
pub mod train;

pub use adadelta::AdadeltaState;
pub use labels::{decode_labels, encode_labels, featurize, HeadLayout, LabelSet};
pub use network::{loss, Dense, ForwardCache, Gradient, MlpModel, Prediction};
pub use train::{examples_from_records, fit, fit_with_progress, predict, train, train_records, EpochStats, Example, TrainConfig, TrainLog};

/// Hidden layer widths of the predictor.
pub const HIDDEN_LAYERS: [usize; 2] = [200, 200];
