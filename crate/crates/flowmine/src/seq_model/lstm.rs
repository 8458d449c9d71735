//! A from-scratch stacked LSTM over one-hot encoded events, trained with
//! minibatch SGD + momentum on categorical cross-entropy, with analytic
//! backpropagation through time.
//!
//! Gate equations per layer and timestep (gate order i, f, g, o):
//!
//! ```text
//! z   = W_ih·x + W_hh·h_prev + b
//! i   = σ(z[0..H])      f = σ(z[H..2H])
//! g   = tanh(z[2H..3H]) o = σ(z[3H..4H])
//! c   = f∘c_prev + i∘g
//! h   = o∘tanh(c)
//! ```
//!
//! The final hidden state feeds a dense softmax layer over the vocabulary.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{check_prefix, Prediction, SequenceModel, TrainingWindow};

/// Training hyperparameters. Defaults are sized for desk-scale CPU runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Hidden width per layer.
    pub hidden: usize,
    /// Number of stacked recurrent layers.
    pub layers: usize,
    pub batch_size: usize,
    /// Initial learning rate; halved on loss plateaus.
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
    /// Epochs without improvement before the learning rate is halved.
    pub plateau_patience: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            hidden: 64,
            layers: 2,
            batch_size: 32,
            lr: 0.05,
            momentum: 0.9,
            epochs: 50,
            clip_norm: 5.0,
            plateau_patience: 3,
        }
    }
}

impl Hyperparams {
    fn check(&self) -> Result<()> {
        if self.hidden == 0 || self.layers == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParams(
                "hidden, layers, and batch_size must be positive".into(),
            ));
        }
        if !(self.lr > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::InvalidParams("lr and clip_norm must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParams("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Gradient vector aligned with [`LstmModel::params`].
#[derive(Debug, Clone)]
pub struct Gradients(pub Vec<f64>);

#[derive(Debug, Clone)]
struct LayerOffsets {
    w_ih: usize,
    w_hh: usize,
    bias: usize,
    in_dim: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    layers: Vec<LayerOffsets>,
    w_out: usize,
    b_out: usize,
    total: usize,
}

impl Layout {
    fn new(vocab: usize, hidden: usize, n_layers: usize) -> Layout {
        let mut offset = 0;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let in_dim = if l == 0 { vocab } else { hidden };
            let w_ih = offset;
            offset += 4 * hidden * in_dim;
            let w_hh = offset;
            offset += 4 * hidden * hidden;
            let bias = offset;
            offset += 4 * hidden;
            layers.push(LayerOffsets { w_ih, w_hh, bias, in_dim });
        }
        let w_out = offset;
        offset += vocab * hidden;
        let b_out = offset;
        offset += vocab;
        Layout { layers, w_out, b_out, total: offset }
    }
}

/// A trained stacked-LSTM next-event model.
#[derive(Debug, Clone)]
pub struct LstmModel {
    w: usize,
    vocab_size: usize,
    hp: Hyperparams,
    seed: u64,
    layout: Layout,
    params: Vec<f64>,
    history: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Forward intermediates for one timestep, per layer.
struct StepCache {
    input: Vec<Vec<f64>>,
    h_prev: Vec<Vec<f64>>,
    c_prev: Vec<Vec<f64>>,
    i: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    o: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
}

impl LstmModel {
    /// Randomly initialized, untrained model. Outputs are already valid
    /// (finite, normalized) distributions.
    pub fn init(w: usize, vocab_size: usize, hp: Hyperparams, seed: u64) -> Result<LstmModel> {
        if w < 2 {
            return Err(Error::InvalidParams("pattern length must be at least 2".into()));
        }
        if vocab_size == 0 {
            return Err(Error::InvalidParams("vocabulary is empty".into()));
        }
        hp.check()?;
        let layout = Layout::new(vocab_size, hp.hidden, hp.layers);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden = hp.hidden;
        for l in 0..hp.layers {
            let off = layout.layers[l].clone();
            let scale_ih = (6.0 / (off.in_dim + hidden) as f64).sqrt();
            for v in &mut params[off.w_ih..off.w_ih + 4 * hidden * off.in_dim] {
                *v = rng.random_range(-scale_ih..scale_ih);
            }
            let scale_hh = (6.0 / (2 * hidden) as f64).sqrt();
            for v in &mut params[off.w_hh..off.w_hh + 4 * hidden * hidden] {
                *v = rng.random_range(-scale_hh..scale_hh);
            }
            // Forget-gate bias starts at 1 so early training retains state.
            for j in 0..hidden {
                params[off.bias + hidden + j] = 1.0;
            }
        }
        let scale_out = (6.0 / (hidden + vocab_size) as f64).sqrt();
        for v in &mut params[layout.w_out..layout.w_out + vocab_size * hidden] {
            *v = rng.random_range(-scale_out..scale_out);
        }
        Ok(LstmModel { w, vocab_size, hp, seed, layout, params, history: Vec::new() })
    }

    pub(crate) fn from_weights(
        w: usize,
        vocab_size: usize,
        hp: Hyperparams,
        seed: u64,
        layers: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)>,
        output: (Vec<Vec<f64>>, Vec<f64>),
    ) -> Result<LstmModel> {
        let mut model = LstmModel::init(w, vocab_size, hp, seed)?;
        if layers.len() != model.hp.layers {
            return Err(Error::InvalidParams(format!(
                "model file has {} layers, hyperparameters say {}",
                layers.len(),
                model.hp.layers
            )));
        }
        let hidden = model.hp.hidden;
        for (l, (w_ih, w_hh, bias)) in layers.into_iter().enumerate() {
            let off = model.layout.layers[l].clone();
            let flat_ih: Vec<f64> = w_ih.into_iter().flatten().collect();
            let flat_hh: Vec<f64> = w_hh.into_iter().flatten().collect();
            if flat_ih.len() != 4 * hidden * off.in_dim
                || flat_hh.len() != 4 * hidden * hidden
                || bias.len() != 4 * hidden
            {
                return Err(Error::InvalidParams(format!("layer {l} weight shapes are wrong")));
            }
            model.params[off.w_ih..off.w_ih + flat_ih.len()].copy_from_slice(&flat_ih);
            model.params[off.w_hh..off.w_hh + flat_hh.len()].copy_from_slice(&flat_hh);
            model.params[off.bias..off.bias + bias.len()].copy_from_slice(&bias);
        }
        let (w_out, b_out) = output;
        let flat_out: Vec<f64> = w_out.into_iter().flatten().collect();
        if flat_out.len() != vocab_size * hidden || b_out.len() != vocab_size {
            return Err(Error::InvalidParams("output weight shapes are wrong".into()));
        }
        model.params[model.layout.w_out..model.layout.w_out + flat_out.len()]
            .copy_from_slice(&flat_out);
        let b_off = model.layout.b_out;
        model.params[b_off..b_off + b_out.len()].copy_from_slice(&b_out);
        Ok(model)
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mean training loss per epoch, in order.
    pub fn training_history(&self) -> &[f64] {
        &self.history
    }

    /// The flat parameter vector. Layout: per layer `w_ih`, `w_hh`, `bias`
    /// (gate order i, f, g, o), then the output weight and bias.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access to the parameters, for diagnostics such as
    /// finite-difference probes.
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Per-layer `(w_ih, w_hh, bias)` as nested rows.
    pub fn layer_weights(&self) -> Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
        let hidden = self.hp.hidden;
        self.layout
            .layers
            .iter()
            .map(|off| {
                let w_ih = (0..4 * hidden)
                    .map(|r| {
                        self.params[off.w_ih + r * off.in_dim..off.w_ih + (r + 1) * off.in_dim]
                            .to_vec()
                    })
                    .collect();
                let w_hh = (0..4 * hidden)
                    .map(|r| {
                        self.params[off.w_hh + r * hidden..off.w_hh + (r + 1) * hidden].to_vec()
                    })
                    .collect();
                let bias = self.params[off.bias..off.bias + 4 * hidden].to_vec();
                (w_ih, w_hh, bias)
            })
            .collect()
    }

    /// `(weight rows, bias)` of the output layer.
    pub fn output_weights(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let hidden = self.hp.hidden;
        let weight = (0..self.vocab_size)
            .map(|r| {
                self.params[self.layout.w_out + r * hidden..self.layout.w_out + (r + 1) * hidden]
                    .to_vec()
            })
            .collect();
        let bias = self.params[self.layout.b_out..self.layout.b_out + self.vocab_size].to_vec();
        (weight, bias)
    }

    /// Run the recurrence, returning per-step caches, the final hidden
    /// state, and the log-probabilities (stable softmax).
    fn forward(&self, prefix: &[usize]) -> (Vec<StepCache>, Vec<f64>, Vec<f64>) {
        let hidden = self.hp.hidden;
        let n_layers = self.hp.layers;
        let mut h: Vec<Vec<f64>> = vec![vec![0.0; hidden]; n_layers];
        let mut c: Vec<Vec<f64>> = vec![vec![0.0; hidden]; n_layers];
        let mut caches = Vec::with_capacity(prefix.len());

        for &token in prefix {
            let mut cache = StepCache {
                input: Vec::with_capacity(n_layers),
                h_prev: Vec::with_capacity(n_layers),
                c_prev: Vec::with_capacity(n_layers),
                i: Vec::with_capacity(n_layers),
                f: Vec::with_capacity(n_layers),
                g: Vec::with_capacity(n_layers),
                o: Vec::with_capacity(n_layers),
                tanh_c: Vec::with_capacity(n_layers),
            };
            let mut input = vec![0.0; self.vocab_size];
            input[token] = 1.0;
            for l in 0..n_layers {
                let off = &self.layout.layers[l];
                let mut z = vec![0.0; 4 * hidden];
                for (r, zr) in z.iter_mut().enumerate() {
                    let mut acc = self.params[off.bias + r];
                    let ih_row = off.w_ih + r * off.in_dim;
                    for (k, x) in input.iter().enumerate() {
                        if *x != 0.0 {
                            acc += self.params[ih_row + k] * x;
                        }
                    }
                    let hh_row = off.w_hh + r * hidden;
                    for (k, hv) in h[l].iter().enumerate() {
                        acc += self.params[hh_row + k] * hv;
                    }
                    *zr = acc;
                }
                let mut gi = vec![0.0; hidden];
                let mut gf = vec![0.0; hidden];
                let mut gg = vec![0.0; hidden];
                let mut go = vec![0.0; hidden];
                for j in 0..hidden {
                    gi[j] = sigmoid(z[j]);
                    gf[j] = sigmoid(z[hidden + j]);
                    gg[j] = z[2 * hidden + j].tanh();
                    go[j] = sigmoid(z[3 * hidden + j]);
                }
                let c_prev = c[l].clone();
                let mut c_new = vec![0.0; hidden];
                let mut tanh_c = vec![0.0; hidden];
                let mut h_new = vec![0.0; hidden];
                for j in 0..hidden {
                    c_new[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
                    tanh_c[j] = c_new[j].tanh();
                    h_new[j] = go[j] * tanh_c[j];
                }
                cache.input.push(input.clone());
                cache.h_prev.push(h[l].clone());
                cache.c_prev.push(c_prev);
                cache.i.push(gi);
                cache.f.push(gf);
                cache.g.push(gg);
                cache.o.push(go);
                cache.tanh_c.push(tanh_c);
                c[l] = c_new;
                input = h_new.clone();
                h[l] = h_new;
            }
            caches.push(cache);
        }

        let h_last = h[n_layers - 1].clone();
        let mut logits = vec![0.0; self.vocab_size];
        for (r, logit) in logits.iter_mut().enumerate() {
            let row = self.layout.w_out + r * hidden;
            let mut acc = self.params[self.layout.b_out + r];
            for (k, hv) in h_last.iter().enumerate() {
                acc += self.params[row + k] * hv;
            }
            *logit = acc;
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        let log_probs: Vec<f64> = logits.iter().map(|&x| x - log_z).collect();
        (caches, h_last, log_probs)
    }

    /// Mean cross-entropy over `batch` and the gradient of every parameter.
    pub fn loss_and_gradients(&self, batch: &[TrainingWindow]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::EmptyWindows);
        }
        let hidden = self.hp.hidden;
        let n_layers = self.hp.layers;
        let mut grads = vec![0.0; self.layout.total];
        let mut total_loss = 0.0;

        for window in batch {
            check_prefix(&window.prefix, self.w, self.vocab_size)?;
            if window.label >= self.vocab_size {
                return Err(Error::OutOfVocabulary {
                    index: window.label,
                    size: self.vocab_size,
                });
            }
            let (caches, h_last, log_probs) = self.forward(&window.prefix);
            total_loss -= log_probs[window.label];

            // Output layer: dlogits = softmax − one-hot(label).
            let mut dlogits: Vec<f64> = log_probs.iter().map(|&lp| lp.exp()).collect();
            dlogits[window.label] -= 1.0;
            let mut dh_from_out = vec![0.0; hidden];
            for (r, &dl) in dlogits.iter().enumerate() {
                let row = self.layout.w_out + r * hidden;
                grads[self.layout.b_out + r] += dl;
                for k in 0..hidden {
                    grads[row + k] += dl * h_last[k];
                    dh_from_out[k] += self.params[row + k] * dl;
                }
            }

            let steps = caches.len();
            let mut dh_next: Vec<Vec<f64>> = vec![vec![0.0; hidden]; n_layers];
            let mut dc_next: Vec<Vec<f64>> = vec![vec![0.0; hidden]; n_layers];

            for t in (0..steps).rev() {
                let cache = &caches[t];
                // Gradient arriving at each layer's h output at time t from
                // the layer above (or the output head for the top layer at
                // the final step).
                let mut dh_above = if t == steps - 1 {
                    dh_from_out.clone()
                } else {
                    vec![0.0; hidden]
                };
                for l in (0..n_layers).rev() {
                    let off = &self.layout.layers[l];
                    let gi = &cache.i[l];
                    let gf = &cache.f[l];
                    let gg = &cache.g[l];
                    let go = &cache.o[l];
                    let tanh_c = &cache.tanh_c[l];
                    let c_prev = &cache.c_prev[l];
                    let h_prev = &cache.h_prev[l];
                    let input = &cache.input[l];

                    let mut d_gates = vec![0.0; 4 * hidden];
                    for j in 0..hidden {
                        let dh = dh_above[j] + dh_next[l][j];
                        let dc = dh * go[j] * (1.0 - tanh_c[j] * tanh_c[j]) + dc_next[l][j];
                        d_gates[j] = dc * gg[j] * gi[j] * (1.0 - gi[j]);
                        d_gates[hidden + j] = dc * c_prev[j] * gf[j] * (1.0 - gf[j]);
                        d_gates[2 * hidden + j] = dc * gi[j] * (1.0 - gg[j] * gg[j]);
                        d_gates[3 * hidden + j] = dh * tanh_c[j] * go[j] * (1.0 - go[j]);
                        dc_next[l][j] = dc * gf[j];
                    }

                    let mut dx = vec![0.0; off.in_dim];
                    for (r, &dg) in d_gates.iter().enumerate() {
                        grads[off.bias + r] += dg;
                        let ih_row = off.w_ih + r * off.in_dim;
                        for (k, x) in input.iter().enumerate() {
                            if *x != 0.0 {
                                grads[ih_row + k] += dg * x;
                            }
                            dx[k] += self.params[ih_row + k] * dg;
                        }
                        let hh_row = off.w_hh + r * hidden;
                        for k in 0..hidden {
                            grads[hh_row + k] += dg * h_prev[k];
                        }
                    }
                    for j in 0..hidden {
                        let mut acc = 0.0;
                        for (r, &dg) in d_gates.iter().enumerate() {
                            acc += self.params[off.w_hh + r * hidden + j] * dg;
                        }
                        dh_next[l][j] = acc;
                    }
                    if l > 0 {
                        dh_above = dx;
                    }
                }
            }
        }

        let n = batch.len() as f64;
        for g in &mut grads {
            *g /= n;
        }
        Ok((total_loss / n, Gradients(grads)))
    }
}

impl SequenceModel for LstmModel {
    fn pattern_length(&self) -> usize {
        self.w
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn predict_dist(&self, prefix: &[usize]) -> Result<Prediction> {
        check_prefix(prefix, self.w, self.vocab_size)?;
        let (_, _, log_probs) = self.forward(prefix);
        Ok(Prediction { probs: log_probs.iter().map(|&lp| lp.exp()).collect(), unseen: false })
    }
}

/// Train a model on `windows`. Deterministic for fixed
/// `(windows, hyperparameters, seed)`.
pub fn train_lstm(
    windows: &[TrainingWindow],
    vocab_size: usize,
    hp: &Hyperparams,
    seed: u64,
) -> Result<LstmModel> {
    if windows.is_empty() {
        return Err(Error::EmptyWindows);
    }
    let w = windows[0].prefix.len() + 1;
    for win in windows {
        if win.prefix.len() != w - 1 {
            return Err(Error::InconsistentWindow { expected: w - 1, found: win.prefix.len() });
        }
    }
    let mut model = LstmModel::init(w, vocab_size, hp.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
    let mut velocity = vec![0.0; model.layout.total];
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut lr = hp.lr;
    let mut best = f64::INFINITY;
    let mut stale = 0usize;

    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(hp.batch_size) {
            let batch: Vec<TrainingWindow> =
                chunk.iter().map(|&i| windows[i].clone()).collect();
            let (loss, Gradients(mut grads)) = model.loss_and_gradients(&batch)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            epoch_loss += loss * batch.len() as f64;

            let norm: f64 = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > hp.clip_norm {
                let scale = hp.clip_norm / norm;
                for g in &mut grads {
                    *g *= scale;
                }
            }
            for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grads) {
                *v = hp.momentum * *v - lr * g;
                *p += *v;
            }
        }
        epoch_loss /= windows.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss: epoch_loss });
        }
        model.history.push(epoch_loss);
        if epoch_loss < best - 1e-6 {
            best = epoch_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= hp.plateau_patience {
                lr *= 0.5;
                stale = 0;
            }
        }
    }
    Ok(model)
}
