//! Minibatch training with Adadelta and one-shot prediction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adadelta::{AdadeltaState, DEFAULT_EPSILON, DEFAULT_RHO};
use super::labels::{argmax, decode_labels, encode_labels, featurize, HeadLayout};
use super::network::{ForwardCache, Gradient, MlpModel};
use crate::config::NetworkConfig;
use crate::dataset::LabeledRecord;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scenario::{BeamConfig, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub rho: f64,
    pub epsilon: f64,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 512,
            seed: 0,
            rho: DEFAULT_RHO,
            epsilon: DEFAULT_EPSILON,
            hidden: vec![200, 200],
        }
    }
}

/// Mean training loss and head-level accuracy over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

/// Input features and per-head target indices of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    pub features: Vec<T>,
    pub targets: Vec<usize>,
}

pub fn examples_from_records<T: Scalar>(records: &[LabeledRecord], cfg: &NetworkConfig) -> Result<Vec<Example<T>>> {
    records
        .iter()
        .map(|r| {
            r.scenario.validate(cfg)?;
            Ok(Example {
                features: featurize(&r.scenario, cfg),
                targets: encode_labels(&r.label, cfg)?.targets(),
            })
        })
        .collect()
}

fn head_hits<T: Scalar>(probs: &[T], heads: &HeadLayout, targets: &[usize]) -> usize {
    heads
        .heads()
        .zip(targets)
        .filter(|((off, len), &t)| argmax(&probs[*off..*off + *len]) == t)
        .count()
}

fn check_examples<T: Scalar>(model: &MlpModel<T>, examples: &[Example<T>]) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let heads = model.heads();
    for e in examples {
        if e.features.len() != model.input_len() || e.targets.len() != heads.n_heads() {
            return Err(Error::Dimension("training example does not match the model".into()));
        }
        for (k, (_, len)) in heads.heads().enumerate() {
            if e.targets[k] >= len {
                return Err(Error::Dimension(format!("target {} out of range for head {k}", e.targets[k])));
            }
        }
    }
    Ok(())
}

/// Continues training `model` in place. Deterministic for a given seed.
pub fn fit<T: Scalar>(model: &mut MlpModel<T>, examples: &[Example<T>], hp: &TrainConfig) -> Result<TrainLog> {
    fit_with_progress(model, examples, hp, |_| {})
}

/// [`fit`], calling `on_epoch` after every epoch.
pub fn fit_with_progress<T: Scalar>(
    model: &mut MlpModel<T>,
    examples: &[Example<T>],
    hp: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainLog> {
    check_examples(model, examples)?;
    if hp.batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let heads = model.heads();
    let mut state = AdadeltaState::new(model, T::lit(hp.rho), T::lit(hp.epsilon));
    let mut grad = Gradient::zeros_like(model);
    let mut cache = ForwardCache::new(model);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    rng.set_stream(1);
    let mut log = TrainLog::default();

    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut hits = 0;
        for batch in order.chunks(hp.batch_size) {
            grad.fill_zero();
            for &i in batch {
                let ex = &examples[i];
                model.forward_with_cache(&ex.features, &mut cache)?;
                hits += head_hits(cache.probs(), &heads, &ex.targets);
                loss_sum += model.backward_cached(&cache, &ex.targets, &mut grad).as_f64();
            }
            grad.scale(T::one() / T::lit(batch.len() as f64));
            state.step(model, &grad);
        }
        let stats = EpochStats {
            epoch: epoch + 1,
            loss: loss_sum / examples.len() as f64,
            accuracy: hits as f64 / (examples.len() * heads.n_heads()) as f64,
        };
        on_epoch(&stats);
        log.epochs.push(stats);
    }
    Ok(log)
}

/// Initializes a model from `hp.seed` and trains it.
pub fn train<T: Scalar>(examples: &[Example<T>], heads: HeadLayout, hp: &TrainConfig) -> Result<(MlpModel<T>, TrainLog)> {
    let input_len = examples.first().ok_or(Error::Empty("training set"))?.features.len();
    let mut model = MlpModel::new_seeded(input_len, &hp.hidden, heads, hp.seed);
    let log = fit(&mut model, examples, hp)?;
    Ok((model, log))
}

pub fn train_records<T: Scalar>(
    records: &[LabeledRecord],
    cfg: &NetworkConfig,
    hp: &TrainConfig,
) -> Result<(MlpModel<T>, TrainLog)> {
    let examples = examples_from_records(records, cfg)?;
    train(&examples, HeadLayout::from_config(cfg), hp)
}

/// Mean loss and head accuracy of `model` on `examples`, without updates.
pub fn evaluate_examples<T: Scalar>(model: &MlpModel<T>, examples: &[Example<T>]) -> Result<EpochStats> {
    check_examples(model, examples)?;
    let heads = model.heads();
    let mut cache = ForwardCache::new(model);
    let mut scratch = Gradient::zeros_like(model);
    let (mut loss, mut hits) = (0.0, 0);
    for ex in examples {
        model.forward_with_cache(&ex.features, &mut cache)?;
        hits += head_hits(cache.probs(), &heads, &ex.targets);
        loss += model.backward_cached(&cache, &ex.targets, &mut scratch).as_f64();
    }
    Ok(EpochStats {
        epoch: 0,
        loss: loss / examples.len() as f64,
        accuracy: hits as f64 / (examples.len() * heads.n_heads()) as f64,
    })
}

/// One forward pass, then per-head argmax.
pub fn predict<T: Scalar>(model: &MlpModel<T>, scenario: &Scenario, cfg: &NetworkConfig) -> Result<BeamConfig> {
    if model.heads() != HeadLayout::from_config(cfg) {
        return Err(Error::Dimension("model heads do not match the configuration".into()));
    }
    let p = model.forward(&featurize(scenario, cfg))?;
    decode_labels(&p.width_heads(), &p.direction_heads(), cfg)
}
