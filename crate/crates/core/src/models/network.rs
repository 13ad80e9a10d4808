//! Feedforward regression network trained with mini-batch Adam on squared error.
//!
//! Inputs and target are standardised internally. Hidden layers use tanh, the
//! output is linear. Hidden weights are He-scaled normal draws; the output
//! layer starts at zero, so the untrained network predicts mean(y). Random
//! draws come from one ChaCha8 stream: hidden weights first (layer by layer,
//! row-major), then one shuffle per epoch.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Learner, TrainedModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub step: f64,
    pub seed: u64,
    /// Mini-batch size; `None` means `min(32, m)`.
    pub batch_size: Option<usize>,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            hidden: vec![32, 16],
            epochs: 200,
            step: 1e-3,
            seed: 0,
            batch_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    layers: Vec<Layer>,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl NetworkModel {
    /// Standardised output for one standardised input; fills `acts` with every layer's activation.
    fn forward(&self, input: &[f64], acts: &mut Vec<Vec<f64>>) -> f64 {
        acts.clear();
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let prev = &acts[l];
            let mut out = layer.bias.clone();
            for (o, v) in out.iter_mut().enumerate() {
                let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                *v += w.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>();
                if l < last {
                    *v = v.tanh();
                }
            }
            acts.push(out);
        }
        acts[last + 1][0]
    }

    fn standardise(&self, row: &[f64], buf: &mut [f64]) {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = (row[k] - self.x_mean[k]) / self.x_scale[k];
        }
    }

    pub(crate) fn predict_unchecked(&self, rows: &Matrix) -> Vec<f64> {
        let mut acts = Vec::new();
        let mut buf = vec![0.0; rows.ncols()];
        rows.rows()
            .map(|r| {
                self.standardise(r, &mut buf);
                self.y_mean + self.y_scale * self.forward(&buf, &mut acts)
            })
            .collect()
    }
}

fn moments(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

pub fn fit_network(ds: &Dataset, params: &NetworkParams) -> Result<TrainedModel> {
    if params.hidden.is_empty() || params.hidden.contains(&0) {
        return Err(Error::invalid("network needs nonempty hidden layer widths"));
    }
    if params.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    if !(params.step > 0.0 && params.step.is_finite()) {
        return Err(Error::invalid("step must be positive"));
    }
    let x = ds.features();
    let (m, n) = (x.nrows(), x.ncols());
    let batch = params.batch_size.unwrap_or(32).clamp(1, m);

    let mut x_mean = Vec::with_capacity(n);
    let mut x_scale = Vec::with_capacity(n);
    for j in 0..n {
        let (mu, sd) = moments((0..m).map(|i| x.get(i, j)));
        x_mean.push(mu);
        x_scale.push(sd);
    }
    let (y_mean, y_scale) = moments(ds.target().iter().copied());

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut widths = vec![n];
    widths.extend(&params.hidden);
    widths.push(1);
    let last = widths.len() - 2;
    let layers: Vec<Layer> = widths
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("finite scale");
            let weights = if l == last {
                vec![0.0; w[0] * w[1]]
            } else {
                (0..w[0] * w[1]).map(|_| normal.sample(&mut rng)).collect()
            };
            Layer {
                inputs: w[0],
                outputs: w[1],
                weights,
                bias: vec![0.0; w[1]],
            }
        })
        .collect();
    let mut net = NetworkModel {
        layers,
        x_mean,
        x_scale,
        y_mean,
        y_scale,
    };

    let inputs: Vec<Vec<f64>> = x
        .rows()
        .map(|r| {
            let mut buf = vec![0.0; n];
            net.standardise(r, &mut buf);
            buf
        })
        .collect();
    let targets: Vec<f64> = ds.target().iter().map(|y| (y - y_mean) / y_scale).collect();

    let zeros = |net: &NetworkModel| -> Vec<(Vec<f64>, Vec<f64>)> {
        net.layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
            .collect()
    };
    let mut grads = zeros(&net);
    let mut first = zeros(&net);
    let mut second = zeros(&net);
    let mut t = 0i32;
    let mut order: Vec<usize> = (0..m).collect();
    let mut acts = Vec::new();
    let mut deltas: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.outputs]).collect();

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            for g in grads.iter_mut() {
                g.0.iter_mut().for_each(|v| *v = 0.0);
                g.1.iter_mut().for_each(|v| *v = 0.0);
            }
            for &i in chunk {
                let out = net.forward(&inputs[i], &mut acts);
                let err = out - targets[i];
                epoch_loss += err * err;
                // d(0.5 err^2)/d out
                let last = net.layers.len() - 1;
                deltas[last][0] = err;
                for l in (0..=last).rev() {
                    let layer = &net.layers[l];
                    let prev = &acts[l];
                    for o in 0..layer.outputs {
                        let d = deltas[l][o];
                        grads[l].1[o] += d;
                        let row = &mut grads[l].0[o * layer.inputs..(o + 1) * layer.inputs];
                        for (g, a) in row.iter_mut().zip(prev) {
                            *g += d * a;
                        }
                    }
                    if l > 0 {
                        let (lower, upper) = deltas.split_at_mut(l);
                        let below = &mut lower[l - 1];
                        for (k, b) in below.iter_mut().enumerate() {
                            let mut s = 0.0;
                            for o in 0..layer.outputs {
                                s += layer.weights[o * layer.inputs + k] * upper[0][o];
                            }
                            let a = acts[l][k];
                            *b = s * (1.0 - a * a);
                        }
                    }
                }
            }
            t += 1;
            let scale = 1.0 / chunk.len() as f64;
            let bc1 = 1.0 - BETA1.powi(t);
            let bc2 = 1.0 - BETA2.powi(t);
            for (l, layer) in net.layers.iter_mut().enumerate() {
                let (fw, fb) = &mut first[l];
                let (sw, sb) = &mut second[l];
                let params_grads = [
                    (&mut layer.weights, &grads[l].0, fw, sw),
                    (&mut layer.bias, &grads[l].1, fb, sb),
                ];
                for (p, g, m1, m2) in params_grads {
                    for k in 0..p.len() {
                        let gk = g[k] * scale;
                        m1[k] = BETA1 * m1[k] + (1.0 - BETA1) * gk;
                        m2[k] = BETA2 * m2[k] + (1.0 - BETA2) * gk * gk;
                        p[k] -= params.step * (m1[k] / bc1) / ((m2[k] / bc2).sqrt() + EPS);
                    }
                }
            }
        }
        if !epoch_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
    }
    TrainedModel::new(Learner::Network(net), ds, Some(params.seed))
}
