//! Fully connected ReLU trunk with a softmax output split into heads.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::labels::{HeadLayout, LabelSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied to probabilities inside the logarithm.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Affine layer. Weights are stored input-major: `weights[i * n_out + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![T::zero(); n_in * n_out],
            bias: vec![T::zero(); n_out],
        }
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            let row = &self.weights[i * self.n_out..(i + 1) * self.n_out];
            for (o, &w) in out.iter_mut().zip(row) {
                *o = *o + xi * w;
            }
        }
    }
}

/// Network parameters: hidden ReLU layers followed by one output layer.
#[derive(Debug)]
pub struct MlpModel<T> {
    layers: Vec<Dense<T>>,
    heads: HeadLayout,
    forward_calls: AtomicUsize,
}

impl<T: Clone> Clone for MlpModel<T> {
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            heads: self.heads,
            forward_calls: AtomicUsize::new(self.forward_calls.load(Ordering::Relaxed)),
        }
    }
}

impl<T: PartialEq> PartialEq for MlpModel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.heads == other.heads
    }
}

/// Gradient (or any other per-parameter quantity) shaped like a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Gradient<T> {
    pub fn zeros_like(model: &MlpModel<T>) -> Self {
        Self {
            layers: model.layers.iter().map(|l| Dense::zeros(l.n_in, l.n_out)).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for s in self.slices_mut() {
            s.fill(T::zero());
        }
    }

    pub fn scale(&mut self, factor: T) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v = *v * factor);
        }
    }

    pub fn slices(&self) -> impl Iterator<Item = &[T]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }
}

/// Per-head class probabilities, flattened in head order.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub probs: Vec<T>,
    pub heads: HeadLayout,
}

impl<T: Scalar> Prediction<T> {
    pub fn head(&self, k: usize) -> &[T] {
        let (off, len) = self.heads.head(k);
        &self.probs[off..off + len]
    }

    pub fn width_heads(&self) -> Vec<Vec<T>> {
        (0..self.heads.n_aps).map(|m| self.head(m).to_vec()).collect()
    }

    pub fn direction_heads(&self) -> Vec<Vec<T>> {
        (0..self.heads.n_aps)
            .map(|m| self.head(self.heads.n_aps + m).to_vec())
            .collect()
    }
}

/// Activations retained for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// `activations[0]` is the input; `activations[k]` the post-ReLU output of hidden layer `k`.
    activations: Vec<Vec<T>>,
    probs: Vec<T>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn new(model: &MlpModel<T>) -> Self {
        let mut activations = vec![vec![T::zero(); model.input_len()]];
        for l in &model.layers[..model.layers.len() - 1] {
            activations.push(vec![T::zero(); l.n_out]);
        }
        Self {
            activations,
            probs: vec![T::zero(); model.heads.output_len()],
        }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }
}

fn softmax_in_place<T: Scalar>(v: &mut [T]) {
    let max = v.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let mut sum = T::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum = sum + *x;
    }
    for x in v.iter_mut() {
        *x = *x / sum;
    }
}

impl<T: Scalar> MlpModel<T> {
    /// Model with all-zero parameters.
    pub fn zeros(input_len: usize, hidden: &[usize], heads: HeadLayout) -> Self {
        let mut sizes = vec![input_len];
        sizes.extend_from_slice(hidden);
        sizes.push(heads.output_len());
        let layers = sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Self {
            layers,
            heads,
            forward_calls: AtomicUsize::new(0),
        }
    }

    /// He-uniform weights `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
    pub fn new_seeded(input_len: usize, hidden: &[usize], heads: HeadLayout, seed: u64) -> Self {
        let mut model = Self::zeros(input_len, hidden, heads);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &mut model.layers {
            let bound = (6.0 / l.n_in as f64).sqrt();
            for w in &mut l.weights {
                *w = T::lit(rng.gen_range(-bound..bound));
            }
        }
        model
    }

    /// Rebuilds a model from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Dense<T>>, heads: HeadLayout) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("layer list"));
        }
        for l in &layers {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(Error::Dimension("layer parameter count does not match its shape".into()));
            }
        }
        if layers.windows(2).any(|w| w[0].n_out != w[1].n_in) {
            return Err(Error::Dimension("consecutive layer sizes do not chain".into()));
        }
        if layers.last().map(|l| l.n_out) != Some(heads.output_len()) {
            return Err(Error::Dimension("output layer does not match the head layout".into()));
        }
        if layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("non-finite model parameter".into()));
        }
        Ok(Self {
            layers,
            heads,
            forward_calls: AtomicUsize::new(0),
        })
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn heads(&self) -> HeadLayout {
        self.heads
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].n_in
    }

    /// `[input, hidden..., output]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_len())
            .chain(self.layers.iter().map(|l| l.n_out))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Number of forward passes run so far.
    pub fn forward_calls(&self) -> usize {
        self.forward_calls.load(Ordering::Relaxed)
    }

    pub fn params(&self) -> impl Iterator<Item = &[T]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    fn check_input(&self, features: &[T]) -> Result<()> {
        if features.len() != self.input_len() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.input_len(),
                features.len()
            )));
        }
        Ok(())
    }

    /// Forward pass filling `cache`; returns the flattened head probabilities.
    pub fn forward_with_cache<'c>(&self, features: &[T], cache: &'c mut ForwardCache<T>) -> Result<&'c [T]> {
        self.check_input(features)?;
        self.forward_calls.fetch_add(1, Ordering::Relaxed);
        cache.activations[0].copy_from_slice(features);
        let (hidden, output) = self.layers.split_at(self.layers.len() - 1);
        for (k, layer) in hidden.iter().enumerate() {
            let (prev, next) = cache.activations.split_at_mut(k + 1);
            let out = &mut next[0];
            layer.apply(&prev[k], out);
            out.iter_mut().for_each(|v| *v = v.max(T::zero()));
        }
        let last = cache.activations.last().expect("input activation present");
        output[0].apply(last, &mut cache.probs);
        for (off, len) in self.heads.heads() {
            softmax_in_place(&mut cache.probs[off..off + len]);
        }
        Ok(&cache.probs)
    }

    pub fn forward(&self, features: &[T]) -> Result<Prediction<T>> {
        let mut cache = ForwardCache::new(self);
        let probs = self.forward_with_cache(features, &mut cache)?.to_vec();
        Ok(Prediction {
            probs,
            heads: self.heads,
        })
    }

    /// Adds the gradient of the loss at the cached forward pass into `grad`.
    ///
    /// `targets` holds the hot index of each head. Returns the sample loss.
    pub fn backward_cached(&self, cache: &ForwardCache<T>, targets: &[usize], grad: &mut Gradient<T>) -> T {
        let n_layers = self.layers.len();
        let loss = loss_from_targets(&cache.probs, &self.heads, targets);
        // softmax + cross-entropy: dL/dlogit = p - y per head
        let mut delta = cache.probs.clone();
        for (k, (off, _)) in self.heads.heads().enumerate() {
            delta[off + targets[k]] = delta[off + targets[k]] - T::one();
        }
        for k in (0..n_layers).rev() {
            let layer = &self.layers[k];
            let g = &mut grad.layers[k];
            let input = &cache.activations[k];
            for (b, &d) in g.bias.iter_mut().zip(&delta) {
                *b = *b + d;
            }
            for (i, &xi) in input.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let row = &mut g.weights[i * layer.n_out..(i + 1) * layer.n_out];
                for (w, &d) in row.iter_mut().zip(&delta) {
                    *w = *w + xi * d;
                }
            }
            if k == 0 {
                break;
            }
            // propagate through the weights, then the ReLU of the layer below
            let mut prev = vec![T::zero(); layer.n_in];
            for (i, p) in prev.iter_mut().enumerate() {
                if input[i] > T::zero() {
                    let row = &layer.weights[i * layer.n_out..(i + 1) * layer.n_out];
                    *p = row.iter().zip(&delta).fold(T::zero(), |acc, (&w, &d)| acc + w * d);
                }
            }
            delta = prev;
        }
        loss
    }

    /// Exact gradient of the loss for one sample.
    pub fn backward(&self, features: &[T], labels: &LabelSet) -> Result<Gradient<T>> {
        let targets = self.check_labels(labels)?;
        let mut cache = ForwardCache::new(self);
        self.forward_with_cache(features, &mut cache)?;
        let mut grad = Gradient::zeros_like(self);
        self.backward_cached(&cache, &targets, &mut grad);
        Ok(grad)
    }

    pub(crate) fn check_labels(&self, labels: &LabelSet) -> Result<Vec<usize>> {
        let h = self.heads;
        let ok = labels.width_onehots.len() == h.n_aps
            && labels.direction_onehots.len() == h.n_aps
            && labels.width_onehots.iter().all(|v| v.len() == h.n_widths)
            && labels.direction_onehots.iter().all(|v| v.len() == h.n_directions);
        if !ok {
            return Err(Error::Dimension("label set does not match the head layout".into()));
        }
        Ok(labels.targets())
    }
}

fn loss_from_targets<T: Scalar>(probs: &[T], heads: &HeadLayout, targets: &[usize]) -> T {
    let floor = T::lit(PROBABILITY_FLOOR);
    heads
        .heads()
        .zip(targets)
        .map(|((off, _), &t)| -probs[off + t].max(floor).ln())
        .sum()
}

/// Categorical cross-entropy summed over all heads, natural logarithm.
pub fn loss<T: Scalar>(labels: &LabelSet, prediction: &Prediction<T>) -> Result<T> {
    let h = prediction.heads;
    if labels.width_onehots.len() != h.n_aps || labels.direction_onehots.len() != h.n_aps {
        return Err(Error::Dimension("label set does not match the head layout".into()));
    }
    let floor = T::lit(PROBABILITY_FLOOR);
    let mut total = T::zero();
    for (k, onehot) in labels.width_onehots.iter().chain(&labels.direction_onehots).enumerate() {
        let p = prediction.head(k);
        if p.len() != onehot.len() {
            return Err(Error::Dimension(format!("head {k} length mismatch")));
        }
        for (&y, &pi) in onehot.iter().zip(p) {
            if y != 0 {
                total = total - T::lit(f64::from(y)) * pi.max(floor).ln();
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn layout() -> HeadLayout {
        HeadLayout { n_aps: 3, n_widths: 3, n_directions: 3 }
    }

    #[test]
    fn zero_model_gives_uniform_heads() {
        let m = MlpModel::<f64>::zeros(30, &[200, 200], layout());
        let p = m.forward(&vec![0.3; 30]).unwrap();
        assert!(p.probs.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(m.layer_sizes(), vec![30, 200, 200, 18]);
    }

    #[test]
    fn uniform_loss_is_six_ln_three() {
        let m = MlpModel::<f64>::zeros(30, &[8], layout());
        let p = m.forward(&vec![0.0; 30]).unwrap();
        let labels = LabelSet::from_targets(&layout(), &[0, 1, 2, 2, 1, 0]);
        assert!((loss(&labels, &p).unwrap() - 6.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_vanishes_on_exact_onehots() {
        let labels = LabelSet::from_targets(&layout(), &[0, 1, 2, 2, 1, 0]);
        let mut probs = vec![0.0; 18];
        for (k, t) in labels.targets().iter().enumerate() {
            probs[3 * k + t] = 1.0;
        }
        let p = Prediction { probs, heads: layout() };
        assert_eq!(loss(&labels, &p).unwrap(), 0.0);
    }

    #[test]
    fn loss_is_additive_over_aps() {
        let m = MlpModel::<f64>::new_seeded(6, &[5], layout(), 1);
        let p = m.forward(&[0.1, -0.4, 0.3, 0.9, -0.2, 0.5]).unwrap();
        let labels = LabelSet::from_targets(&layout(), &[2, 0, 1, 1, 2, 0]);
        let total = loss(&labels, &p).unwrap();
        let per_ap: f64 = (0..3)
            .map(|m| -p.head(m)[labels.targets()[m]].ln() - p.head(3 + m)[labels.targets()[3 + m]].ln())
            .sum();
        assert_relative_eq!(total, per_ap, epsilon = 1e-12);
    }

    #[test]
    fn heads_normalize_and_ignore_shifts() {
        let mut m = MlpModel::<f64>::new_seeded(6, &[7, 7], layout(), 9);
        let x = [0.3, -0.1, 0.8, 0.2, 0.0, -0.6];
        let p = m.forward(&x).unwrap();
        for (off, len) in layout().heads() {
            let s: f64 = p.probs[off..off + len].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(p.probs[off..off + len].iter().all(|&v| v > 0.0 && v < 1.0));
        }
        // shifting one head's logits through its biases
        let out = m.layers.last_mut().unwrap();
        for b in &mut out.bias[3..6] {
            *b += 4.2;
        }
        let q = m.forward(&x).unwrap();
        for (a, b) in p.probs.iter().zip(&q.probs) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn output_gradient_is_p_minus_y() {
        let heads = HeadLayout { n_aps: 1, n_widths: 3, n_directions: 3 };
        let m = MlpModel::<f64>::zeros(2, &[4], heads);
        let labels = LabelSet::from_targets(&heads, &[0, 2]);
        let g = m.backward(&[0.5, 0.5], &labels).unwrap();
        let db = &g.layers.last().unwrap().bias;
        let third = 1.0 / 3.0;
        for (a, b) in db.iter().zip([third - 1.0, third, third, third, third, third - 1.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_input_gives_zero_first_layer_weight_gradient() {
        let m = MlpModel::<f64>::new_seeded(6, &[8, 8], layout(), 4);
        let mut m = m;
        for b in &mut m.layers[0].bias {
            *b = 0.1;
        }
        let labels = LabelSet::from_targets(&layout(), &[0, 0, 0, 1, 1, 1]);
        let g = m.backward(&[0.0; 6], &labels).unwrap();
        assert!(g.layers[0].weights.iter().all(|&w| w == 0.0));
        assert!(g.layers[0].bias.iter().any(|&b| b != 0.0));
    }

    #[test]
    fn dimension_errors() {
        let m = MlpModel::<f64>::zeros(6, &[4], layout());
        assert!(matches!(m.forward(&[0.0; 5]), Err(Error::Dimension(_))));
        let bad = LabelSet::from_targets(&HeadLayout { n_aps: 2, n_widths: 3, n_directions: 3 }, &[0, 0, 0, 0]);
        assert!(m.backward(&[0.0; 6], &bad).is_err());
    }

    #[test]
    fn forward_calls_are_counted() {
        let m = MlpModel::<f32>::zeros(3, &[2], layout());
        m.forward(&[0.0; 3]).unwrap();
        m.forward(&[1.0; 3]).unwrap();
        assert_eq!(m.forward_calls(), 2);
    }
}
