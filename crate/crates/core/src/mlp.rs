//! Dense feed-forward classifier: input -> 64 -> 64 -> classes, ReLU hidden
//! units, softmax output, inverted dropout, minibatch SGD with momentum.
//!
//! Dropout is applied to the inputs and after every hidden layer except the
//! last one ("between the hidden layers"). Kept units are scaled by
//! `1 / (1 - p)` during training so evaluation runs the plain network.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Dataset;
use crate::scaling::Scaler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub output_dim: usize,
    pub dropout_in: f64,
    pub dropout_hidden: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl MlpConfig {
    pub fn new(input_dim: usize) -> MlpConfig {
        MlpConfig {
            input_dim,
            hidden_layers: 2,
            hidden_units: 64,
            output_dim: 4,
            dropout_in: 0.10,
            dropout_hidden: 0.20,
            batch_size: 32,
            epochs: 50,
            learning_rate: 1e-3,
            momentum: 0.9,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.input_dim == 0 || self.output_dim < 2 || self.hidden_units == 0 {
            return bad(format!(
                "invalid layer sizes: input {}, hidden {}, output {}",
                self.input_dim, self.hidden_units, self.output_dim
            ));
        }
        for p in [self.dropout_in, self.dropout_hidden] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("dropout rate must be in [0, 1), got {p}"));
            }
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1".into());
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return bad(format!(
                "invalid optimizer settings: lr {}, momentum {}",
                self.learning_rate, self.momentum
            ));
        }
        Ok(())
    }

    fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim];
        sizes.extend(std::iter::repeat_n(self.hidden_units, self.hidden_layers));
        sizes.push(self.output_dim);
        sizes
    }
}

/// Fully connected layer, `weights` row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Dense> {
        if weights.len() != inputs * outputs {
            return Err(Error::Shape {
                expected: inputs * outputs,
                actual: weights.len(),
            });
        }
        if bias.len() != outputs {
            return Err(Error::Shape {
                expected: outputs,
                actual: bias.len(),
            });
        }
        Ok(Dense {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    fn zeros(inputs: usize, outputs: usize) -> Dense {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights, zero bias.
    fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Dense {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..=limit)).collect();
        Dense {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b
        }));
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn param_mut(&mut self, k: usize) -> &mut f64 {
        if k < self.weights.len() {
            &mut self.weights[k]
        } else {
            &mut self.bias[k - self.weights.len()]
        }
    }

    fn param(&self, k: usize) -> f64 {
        if k < self.weights.len() {
            self.weights[k]
        } else {
            self.bias[k - self.weights.len()]
        }
    }
}

/// Per-sample dropout multipliers, one vector per dropout site. Entries are
/// `0` for dropped units and `1 / (1 - p)` for kept ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub sites: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    Train(&'a DropoutMasks),
    Eval,
}

/// The bare parameterized network, without input standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Dense>,
    pub dropout_in: f64,
    pub dropout_hidden: f64,
}

/// Gradients with the same shapes as [`Network::layers`].
pub type Gradients = Vec<Dense>;

struct Trace {
    /// Input to each layer (after dropout).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl Network {
    pub fn from_layers(layers: Vec<Dense>) -> Result<Network> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        if let Some(w) = layers.windows(2).find(|w| w[0].outputs != w[1].inputs) {
            return Err(Error::Shape {
                expected: w[0].outputs,
                actual: w[1].inputs,
            });
        }
        Ok(Network {
            layers,
            dropout_in: 0.0,
            dropout_hidden: 0.0,
        })
    }

    /// Glorot-initialized network with the given layer sizes.
    pub fn init<R: Rng>(sizes: &[usize], dropout_in: f64, dropout_hidden: f64, rng: &mut R) -> Network {
        let layers = sizes.windows(2).map(|w| Dense::glorot(w[0], w[1], rng)).collect();
        Network {
            layers,
            dropout_in,
            dropout_hidden,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// Dropout sites: the input, then each hidden layer but the last.
    fn site_rates(&self) -> Vec<(usize, f64)> {
        let hidden = self.layers.len() - 1;
        let mut sites = vec![(self.layers[0].inputs, self.dropout_in)];
        for l in 0..hidden.saturating_sub(1) {
            sites.push((self.layers[l].outputs, self.dropout_hidden));
        }
        sites
    }

    pub fn sample_masks<R: Rng>(&self, rng: &mut R) -> DropoutMasks {
        let sites = self
            .site_rates()
            .into_iter()
            .map(|(width, p)| {
                let keep = 1.0 / (1.0 - p);
                (0..width)
                    .map(|_| if p > 0.0 && rng.random::<f64>() < p { 0.0 } else { keep })
                    .collect()
            })
            .collect();
        DropoutMasks { sites }
    }

    fn trace(&self, x: &[f64], mode: Mode) -> Result<Trace> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let masks = match mode {
            Mode::Train(m) => Some(m),
            Mode::Eval => None,
        };
        let mask = |site: usize, v: &mut Vec<f64>| {
            if let Some(m) = masks.and_then(|m| m.sites.get(site)) {
                v.iter_mut().zip(m).for_each(|(a, k)| *a *= k);
            }
        };
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(last);
        let mut a = x.to_vec();
        mask(0, &mut a);
        let mut z = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&a, &mut z);
            inputs.push(std::mem::take(&mut a));
            if l == last {
                break;
            }
            a = z.iter().map(|v| v.max(0.0)).collect();
            pre.push(z.clone());
            if l + 1 < last {
                mask(l + 1, &mut a);
            }
        }
        Ok(Trace {
            inputs,
            pre,
            probs: softmax(&z),
        })
    }

    /// Class probabilities for one input.
    pub fn forward(&self, x: &[f64], mode: Mode) -> Result<Vec<f64>> {
        Ok(self.trace(x, mode)?.probs)
    }

    /// Mean cross-entropy over the batch and its gradient. `masks`, when
    /// given, holds one dropout draw per sample.
    pub fn loss_and_gradient(
        &self,
        xs: &[&[f64]],
        ys: &[usize],
        masks: Option<&[DropoutMasks]>,
    ) -> Result<(f64, Gradients)> {
        let mut grads: Gradients = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        let scale = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for (s, (x, &y)) in xs.iter().zip(ys).enumerate() {
            let mode = match masks {
                Some(m) => Mode::Train(&m[s]),
                None => Mode::Eval,
            };
            let tr = self.trace(x, mode)?;
            loss -= tr.probs[y].ln() * scale;

            let mut delta: Vec<f64> = tr.probs.iter().map(|p| p * scale).collect();
            delta[y] -= scale;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let g = &mut grads[l];
                let input = &tr.inputs[l];
                for (o, d) in delta.iter().enumerate() {
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(input).for_each(|(gw, a)| *gw += d * a);
                }
                if l == 0 {
                    break;
                }
                let mut back = vec![0.0; layer.inputs];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    back.iter_mut().zip(row).for_each(|(b, w)| *b += d * w);
                }
                // Through the dropout mask applied after hidden layer l-1, then ReLU.
                if let Mode::Train(m) = mode {
                    if let Some(mask) = m.sites.get(l).filter(|_| l < self.layers.len() - 1) {
                        back.iter_mut().zip(mask).for_each(|(b, k)| *b *= k);
                    }
                }
                back.iter_mut()
                    .zip(&tr.pre[l - 1])
                    .for_each(|(b, z)| if *z <= 0.0 { *b = 0.0 });
                delta = back;
            }
        }
        Ok((loss, grads))
    }

    pub fn loss(&self, xs: &[&[f64]], ys: &[usize]) -> Result<f64> {
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            loss -= self.forward(x, Mode::Eval)?[y].ln();
        }
        Ok(loss / xs.len() as f64)
    }
}

/// Softmax with the max subtracted; never returns an exact one-hot for finite
/// inputs of moderate range.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Largest relative error between backpropagated gradients and central
/// differences with step `h`, over every parameter, with dropout off.
/// Relative error is `|a - n| / max(|a|, |n|)`, taken as 0 when both vanish.
pub fn gradient_check(net: &Network, xs: &[&[f64]], ys: &[usize], h: f64) -> Result<f64> {
    let (_, grads) = net.loss_and_gradient(xs, ys, None)?;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for l in 0..net.layers.len() {
        for k in 0..net.layers[l].param_count() {
            let orig = net.layers[l].param(k);
            *probe.layers[l].param_mut(k) = orig + h;
            let plus = probe.loss(xs, ys)?;
            *probe.layers[l].param_mut(k) = orig - h;
            let minus = probe.loss(xs, ys)?;
            *probe.layers[l].param_mut(k) = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads[l].param(k);
            let denom = analytic.abs().max(numeric.abs());
            if denom > 0.0 {
                worst = worst.max((analytic - numeric).abs() / denom);
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub activation: Activation,
    pub scaler: Scaler,
    pub network: Network,
}

impl MlpModel {
    pub fn forward(&self, x: &[f64], mode: Mode) -> Result<Vec<f64>> {
        let z = self.scaler.transform(x)?;
        self.network.forward(&z, mode)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let p = self.forward(x, Mode::Eval)?;
        Ok(argmax(&p))
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

/// Trains on `train`, recording eval-mode loss and accuracy on both sets after
/// every epoch. Test columns are NaN when `test` is empty.
pub fn train(train: &Dataset, test: &Dataset, cfg: &MlpConfig) -> Result<(MlpModel, Vec<EpochStats>)> {
    cfg.validate()?;
    if train.len() < cfg.batch_size {
        return Err(Error::DegenerateData(format!(
            "{} training samples is fewer than one batch of {}",
            train.len(),
            cfg.batch_size
        )));
    }
    if train.classes().len() < 2 {
        return Err(Error::DegenerateData("need at least two classes".into()));
    }
    if train.dim() != cfg.input_dim {
        return Err(Error::Shape {
            expected: cfg.input_dim,
            actual: train.dim(),
        });
    }
    if let Some(&c) = train.y.iter().chain(&test.y).find(|&&c| c >= cfg.output_dim) {
        return Err(Error::Config(format!(
            "class {c} does not fit {} outputs",
            cfg.output_dim
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scaler = Scaler::fit(&train.x)?;
    let xtr = scaler.transform_all(&train.x)?;
    let xte = scaler.transform_all(&test.x)?;
    let mut net = Network::init(&cfg.layer_sizes(), cfg.dropout_in, cfg.dropout_hidden, &mut rng);
    let mut velocity: Gradients = net
        .layers
        .iter()
        .map(|l| Dense::zeros(l.inputs, l.outputs))
        .collect();

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| xtr[i].as_slice()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| train.y[i]).collect();
            let masks: Vec<DropoutMasks> = batch.iter().map(|_| net.sample_masks(&mut rng)).collect();
            let (loss, grads) = net.loss_and_gradient(&xs, &ys, Some(&masks))?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            for ((layer, v), g) in net.layers.iter_mut().zip(&mut velocity).zip(&grads) {
                for k in 0..layer.param_count() {
                    let vk = v.param_mut(k);
                    *vk = cfg.momentum * *vk + g.param(k);
                    *layer.param_mut(k) -= cfg.learning_rate * *vk;
                }
            }
        }
        let (train_loss, train_acc) = evaluate(&net, &xtr, &train.y)?;
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: train_loss });
        }
        let (test_loss, test_acc) = if test.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            evaluate(&net, &xte, &test.y)?
        };
        curve.push(EpochStats {
            epoch,
            train_loss,
            train_acc,
            test_loss,
            test_acc,
        });
    }

    Ok((
        MlpModel {
            config: *cfg,
            activation: Activation::Relu,
            scaler,
            network: net,
        },
        curve,
    ))
}

fn evaluate(net: &Network, x: &[Vec<f64>], y: &[usize]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0;
    for (xi, &yi) in x.iter().zip(y) {
        let p = net.forward(xi, Mode::Eval)?;
        loss -= p[yi].ln();
        if argmax(&p) == yi {
            correct += 1;
        }
    }
    let n = y.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Accuracy of a trained model on labelled rows, in `[0, 1]`.
pub fn accuracy(model: &MlpModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData("accuracy of an empty set".into()));
    }
    let pred = model.predict_all(&data.x)?;
    Ok(pred.iter().zip(&data.y).filter(|(p, t)| p == t).count() as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_net(sizes: &[usize], seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::init(sizes, 0.0, 0.0, &mut rng);
        for l in &mut net.layers {
            l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
        net
    }

    fn random_batch(n: usize, dim: usize, classes: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y = (0..n).map(|i| i % classes).collect();
        (x, y)
    }

    #[test]
    fn zero_network_is_uniform() {
        let layers = vec![
            Dense::new(3, 5, vec![0.0; 15], vec![0.0; 5]).unwrap(),
            Dense::new(5, 4, vec![0.0; 20], vec![0.0; 4]).unwrap(),
        ];
        let net = Network::from_layers(layers).unwrap();
        let p = net.forward(&[1.0, -2.0, 3.0], Mode::Eval).unwrap();
        assert_eq!(p, vec![0.25; 4]);
    }

    #[test]
    fn hand_computed_toy_network() {
        // 2-2-2: h = relu(W1 x + b1), p = softmax(W2 h + b2)
        let net = Network::from_layers(vec![
            Dense::new(2, 2, vec![1.0, -1.0, 0.5, 2.0], vec![0.0, -1.0]).unwrap(),
            Dense::new(2, 2, vec![1.0, 0.0, -1.0, 1.0], vec![0.5, 0.0]).unwrap(),
        ])
        .unwrap();
        let x = [1.0, 0.5];
        // z1 = [1 - 0.5, 0.5 + 1 - 1] = [0.5, 0.5]; h = [0.5, 0.5]
        // z2 = [0.5 + 0.5, -0.5 + 0.5] = [1.0, 0.0]
        let e = 1f64.exp();
        let expected = [e / (e + 1.0), 1.0 / (e + 1.0)];
        let p = net.forward(&x, Mode::Eval).unwrap();
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(net.forward(&[1.0], Mode::Eval), Err(Error::Shape { .. })));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let net = random_net(&[6, 8, 8, 4], 3);
        let (xs, _) = random_batch(20, 6, 4, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for x in &xs {
            for mode in [Mode::Eval, Mode::Train(&net.sample_masks(&mut rng))] {
                let p = net.forward(x, mode).unwrap();
                assert_eq!(p.len(), 4);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
            }
        }
    }

    #[test]
    fn gradient_check_small_network() {
        let net = random_net(&[2, 3, 2], 11);
        let (x, y) = random_batch(4, 2, 2, 5);
        let xs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let err = gradient_check(&net, &xs, &y, 1e-5).unwrap();
        assert!(err < 1e-6, "max relative error {err}");
        assert_eq!(err, gradient_check(&net, &xs, &y, 1e-5).unwrap());
    }

    #[test]
    fn confident_batch_keeps_finite_gradients() {
        let mut net = random_net(&[2, 3, 2], 2);
        net.layers[1].bias = vec![10.0, -10.0];
        let x = [vec![0.1, 0.2]];
        let xs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let (loss, grads) = net.loss_and_gradient(&xs, &[0], None).unwrap();
        assert!(loss.is_finite() && loss > 0.0);
        assert!(grads.iter().all(|g| g.weights.iter().chain(&g.bias).all(|v| v.is_finite())));
        assert!(gradient_check(&net, &xs, &[0], 1e-5).unwrap().is_finite());
    }

    #[test]
    fn dropout_masks_preserve_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = Network::init(&[5, 6, 6, 3], 0.1, 0.2, &mut rng);
        net.layers[0].weights.iter_mut().for_each(|w| *w = w.abs() + 0.1);
        let x = [0.5, 1.0, 1.5, 0.8, 1.2];
        let mut eval = Vec::new();
        net.layers[0].apply(&x, &mut eval);
        let draws = 20_000;
        let mut mean = vec![0.0; eval.len()];
        for _ in 0..draws {
            let m = net.sample_masks(&mut rng);
            let xm: Vec<f64> = x.iter().zip(&m.sites[0]).map(|(a, k)| a * k).collect();
            let mut z = Vec::new();
            net.layers[0].apply(&xm, &mut z);
            mean.iter_mut().zip(&z).for_each(|(a, b)| *a += b / draws as f64);
        }
        for (m, e) in mean.iter().zip(&eval) {
            assert!((m - e).abs() <= 0.02 * e.abs(), "{m} vs {e}");
        }
        let m = net.sample_masks(&mut rng);
        assert_eq!(m.sites.len(), 2);
        assert_eq!(m.sites[1].len(), 6);
    }

    fn blobs(per_class: usize, seed: u64) -> Dataset {
        let centers = [[-3.0, -3.0], [3.0, -3.0], [-3.0, 3.0], [3.0, 3.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..per_class {
            for (c, ctr) in centers.iter().enumerate() {
                x.push(vec![ctr[0] + rng.random_range(-1.0..1.0), ctr[1] + rng.random_range(-1.0..1.0)]);
                y.push(c);
            }
        }
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn learns_separable_blobs_deterministically() {
        let data = blobs(60, 1);
        let (tr, te) = data.stratified_split(0.25, 42).unwrap();
        let cfg = MlpConfig::new(2);
        let (model, curve) = train(&tr, &te, &cfg).unwrap();
        assert_eq!(curve.len(), 50);
        assert!(curve.last().unwrap().train_acc >= 0.99, "{:?}", curve.last());
        let decreasing = curve[..5].windows(2).filter(|w| w[1].train_loss >= w[0].train_loss).count();
        assert!(decreasing <= 1);

        let (model2, curve2) = train(&tr, &te, &cfg).unwrap();
        assert_eq!(curve, curve2);
        assert_eq!(model, model2);
    }

    #[test]
    fn shuffled_labels_are_at_chance() {
        let mut data = blobs(100, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        data.y.shuffle(&mut rng);
        let (tr, te) = data.stratified_split(0.25, 42).unwrap();
        let (_, curve) = train(&tr, &te, &MlpConfig::new(2)).unwrap();
        let acc = curve.last().unwrap().test_acc;
        assert!((acc - 0.25).abs() <= 0.10, "test accuracy {acc}");
    }

    #[test]
    fn divergence_names_the_epoch() {
        let data = blobs(20, 3);
        let cfg = MlpConfig {
            learning_rate: 1e200,
            momentum: 0.0,
            ..MlpConfig::new(2)
        };
        match train(&data, &Dataset::default(), &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert_eq!(epoch, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn preconditions() {
        let data = blobs(4, 3);
        assert!(matches!(
            train(&data, &Dataset::default(), &MlpConfig::new(2)),
            Err(Error::DegenerateData(_))
        ));
        let bad = MlpConfig { dropout_in: 1.0, ..MlpConfig::new(2) };
        assert!(bad.validate().is_err());
    }
}
