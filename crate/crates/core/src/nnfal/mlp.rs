use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;

/// Fully connected network with ReLU hidden layers and a linear output.
///
/// Parameters are stored flat, layer by layer: the weight matrix (row-major,
/// `out × in`) followed by the bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    params: Vec<f64>,
}

pub fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

impl Mlp {
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!(
                "network widths must list at least two positive sizes, got {widths:?}"
            )));
        }
        Ok(Mlp {
            widths: widths.to_vec(),
            params: vec![0.0; param_count(widths)],
        })
    }

    /// Weights and biases drawn from `U(-1/√fan_in, 1/√fan_in)`.
    pub fn init(widths: &[usize], seed: u64) -> Result<Self> {
        let mut net = Mlp::zeros(widths)?;
        let mut rng = stream(seed, &[]);
        let mut off = 0;
        for w in widths.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            let n = w[1] * (w[0] + 1);
            for p in &mut net.params[off..off + n] {
                *p = rng.gen_range(-bound..=bound);
            }
            off += n;
        }
        Ok(net)
    }

    pub fn from_params(widths: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Mlp::zeros(widths)?;
        if params.len() != net.params.len() {
            return Err(Error::dim("network parameters", net.params.len(), params.len()));
        }
        net.params = params;
        Ok(net)
    }

    /// Builds a network from `(weights, bias)` pairs, weights given as rows.
    pub fn from_layers(layers: &[(Vec<Vec<f64>>, Vec<f64>)]) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Config("a network needs at least one layer".into()))?;
        let mut widths = vec![first.0.first().map_or(0, Vec::len)];
        let mut params = Vec::new();
        for (w, b) in layers {
            let fan_in = *widths.last().unwrap();
            if w.len() != b.len() {
                return Err(Error::dim("layer bias", w.len(), b.len()));
            }
            for row in w {
                if row.len() != fan_in {
                    return Err(Error::dim("layer weights", fan_in, row.len()));
                }
                params.extend_from_slice(row);
            }
            params.extend_from_slice(b);
            widths.push(b.len());
        }
        Mlp::from_params(&widths, params)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), x.len()));
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.widths.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        let mut off = 0;
        for (l, w) in self.widths.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[off..off + n_in * n_out];
            let bias = &self.params[off + n_in * n_out..off + n_out * (n_in + 1)];
            let a = &acts[l];
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    let s: f64 = row.iter().zip(a).map(|(w, x)| w * x).sum();
                    let s = s + bias[o];
                    if l + 1 < layers {
                        s.max(0.0)
                    } else {
                        s
                    }
                })
                .collect();
            acts.push(z);
            off += n_out * (n_in + 1);
        }
        acts
    }

    /// Backpropagates `dy = ∂L/∂y` through a trace, accumulating into
    /// `grad` when given. Returns `∂L/∂x`.
    fn backward(&self, acts: &[Vec<f64>], dy: &[f64], mut grad: Option<&mut [f64]>) -> Vec<f64> {
        let layers = self.widths.len() - 1;
        let mut delta = dy.to_vec();
        let mut off = self.params.len();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            off -= n_out * (n_in + 1);
            if l + 1 < layers {
                for (d, a) in delta.iter_mut().zip(&acts[l + 1]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let a = &acts[l];
            if let Some(g) = grad.as_deref_mut() {
                for o in 0..n_out {
                    let row = &mut g[off + o * n_in..off + (o + 1) * n_in];
                    for (gw, x) in row.iter_mut().zip(a) {
                        *gw += delta[o] * x;
                    }
                    g[off + n_in * n_out + o] += delta[o];
                }
            }
            let weights = &self.params[off..off + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let row = &weights[o * n_in..(o + 1) * n_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += delta[o] * w;
                }
            }
            delta = prev;
        }
        delta
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x).pop().unwrap())
    }

    /// Output together with `∂L/∂x` for a loss whose output gradient is
    /// computed by `dloss` from the output.
    pub fn input_gradient(
        &self,
        x: &[f64],
        dloss: impl FnOnce(&[f64]) -> Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        let acts = self.trace(x);
        let y = acts.last().unwrap().clone();
        let dy = dloss(&y);
        let dx = self.backward(&acts, &dy, None);
        Ok((y, dx))
    }

    /// Mean squared error over all rows and outputs.
    pub fn mse(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<f64> {
        self.mse_rows(xs, ys, &(0..xs.len()).collect::<Vec<_>>(), None)
    }

    /// MSE and its gradient with respect to every parameter.
    pub fn mse_gradient(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.params.len()];
        let rows: Vec<usize> = (0..xs.len()).collect();
        let loss = self.mse_rows(xs, ys, &rows, Some(&mut grad))?;
        Ok((loss, grad))
    }

    fn mse_rows(
        &self,
        xs: &[Vec<f64>],
        ys: &[Vec<f64>],
        rows: &[usize],
        mut grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if xs.len() != ys.len() {
            return Err(Error::dim("training targets", xs.len(), ys.len()));
        }
        let m = self.output_dim();
        let scale = 1.0 / (rows.len() * m) as f64;
        let mut total = 0.0;
        for &i in rows {
            self.check_input(&xs[i])?;
            if ys[i].len() != m {
                return Err(Error::dim("training target", m, ys[i].len()));
            }
            let acts = self.trace(&xs[i]);
            let out = acts.last().unwrap();
            let mut dy = vec![0.0; m];
            for j in 0..m {
                let e = out[j] - ys[i][j];
                total += e * e;
                dy[j] = 2.0 * e * scale;
            }
            if let Some(g) = grad.as_deref_mut() {
                self.backward(&acts, &dy, Some(g));
            }
        }
        Ok(total * scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    pub early_stopping: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 32,
            epochs: 100,
            patience: 5,
            validation_fraction: 0.2,
            seed: 0,
            early_stopping: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("train.learning_rate must be positive".into()));
        }
        if self.patience == 0 || self.batch_size == 0 {
            return Err(Error::Config("train.patience and train.batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("train.validation_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs_run: usize,
    /// Epoch of the kept checkpoint; 0 is the untrained network.
    pub best_epoch: usize,
    pub best_loss: f64,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * grad[i];
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}

/// Trains `net` on `(xs, ys)` with Adam on the MSE loss and returns the
/// checkpoint with the lowest monitored loss (validation loss with early
/// stopping, training loss otherwise).
pub fn train_mlp(
    mut net: Mlp,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<(Mlp, TrainSummary)> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs.len() != ys.len() {
        return Err(Error::dim("training targets", xs.len(), ys.len()));
    }

    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.shuffle(&mut stream(cfg.seed, &[0]));
    let n_val = if cfg.early_stopping && xs.len() >= 2 {
        ((cfg.validation_fraction * xs.len() as f64).round() as usize).clamp(1, xs.len() - 1)
    } else {
        0
    };
    let (val, train) = order.split_at(n_val);
    let watched = if n_val > 0 {
        val.to_vec()
    } else {
        let mut rows = train.to_vec();
        rows.sort_unstable();
        rows
    };
    let mut train = train.to_vec();
    let monitored = |net: &Mlp| net.mse_rows(xs, ys, &watched, None);

    let mut summary = TrainSummary {
        best_loss: monitored(&net)?,
        ..TrainSummary::default()
    };
    let mut best = net.clone();
    let mut adam = Adam::new(net.params.len());
    let mut grad = vec![0.0; net.params.len()];

    for epoch in 1..=cfg.epochs {
        train.shuffle(&mut stream(cfg.seed, &[1, epoch as u64]));
        let mut train_total = 0.0;
        for batch in train.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = net.mse_rows(xs, ys, batch, Some(&mut grad))?;
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss {loss} in epoch {epoch}"
                )));
            }
            train_total += loss * batch.len() as f64;
            adam.step(&mut net.params, &grad, cfg.learning_rate);
        }
        let loss = monitored(&net)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!("non-finite loss {loss} after epoch {epoch}")));
        }
        summary.epochs_run = epoch;
        summary.train_loss.push(train_total / train.len() as f64);
        if n_val > 0 {
            summary.validation_loss.push(loss);
        }
        if loss < summary.best_loss {
            summary.best_loss = loss;
            summary.best_epoch = epoch;
            best.params.copy_from_slice(&net.params);
        } else if cfg.early_stopping && epoch - summary.best_epoch >= cfg.patience {
            break;
        }
    }
    Ok((best, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn forward_basics() {
        let net = Mlp::from_layers(&[(vec![vec![2.0]], vec![1.0])]).unwrap();
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![7.0]);
        assert!(net.forward(&[1.0, 2.0]).is_err());

        let mut net = Mlp::zeros(&[3, 4, 2]).unwrap();
        let n = net.params().len();
        net.params_mut()[n - 2..].copy_from_slice(&[0.5, -1.5]);
        assert_eq!(net.forward(&[9.0, -2.0, 4.0]).unwrap(), vec![0.5, -1.5]);

        // hidden unit with pre-activation -3 contributes nothing
        let net = Mlp::from_layers(&[
            (vec![vec![1.0], vec![1.0]], vec![0.0, -4.0]),
            (vec![vec![1.0, 10.0]], vec![0.0]),
        ])
        .unwrap();
        assert_eq!(net.forward(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn bad_widths() {
        assert!(Mlp::zeros(&[3]).is_err());
        assert!(Mlp::zeros(&[3, 0, 1]).is_err());
        assert!(Mlp::from_params(&[1, 1], vec![1.0]).is_err());
        assert_eq!(param_count(&[2, 16, 16, 1]), 48 + 272 + 17);
    }

    #[test]
    fn zero_net_on_zero_targets() {
        let net = Mlp::zeros(&[2, 1]).unwrap();
        let xs = vec![vec![0.3, 0.1], vec![0.9, 0.5]];
        let ys = vec![vec![0.0], vec![0.0]];
        let (trained, summary) = train_mlp(net.clone(), &xs, &ys, &TrainConfig::default()).unwrap();
        assert_eq!(summary.best_loss, 0.0);
        assert_eq!(summary.best_epoch, 0);
        assert_eq!(trained, net);
    }

    #[test]
    fn input_gradient_of_linear_net() {
        let net = Mlp::from_layers(&[(vec![vec![2.0, -3.0]], vec![1.0])]).unwrap();
        let (y, dx) = net.input_gradient(&[1.0, 1.0], |_| vec![1.0]).unwrap();
        assert_eq!(y, vec![0.0]);
        assert_eq!(dx, vec![2.0, -3.0]);
    }

    #[test]
    fn fits_a_parabola() {
        let mut rng = stream(11, &[]);
        let xs: Vec<Vec<f64>> = (0..5000).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] * x[0]]).collect();
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            epochs: 60,
            seed: 3,
            ..TrainConfig::default()
        };
        let net = Mlp::init(&[2, 16, 16, 1], 5).unwrap();
        let (net, summary) = train_mlp(net, &xs, &ys, &cfg).unwrap();
        assert!(summary.best_loss < 1e-3, "{summary:?}");
        assert!(net.mse(&xs, &ys).unwrap() < 1e-3);
    }

    #[test]
    fn training_is_reproducible() {
        let xs: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64 / 64.0]).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![(3.0 * x[0]).sin()]).collect();
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            epochs: 20,
            ..TrainConfig::default()
        };
        let a = train_mlp(Mlp::init(&[1, 8, 1], 1).unwrap(), &xs, &ys, &cfg).unwrap();
        let b = train_mlp(Mlp::init(&[1, 8, 1], 1).unwrap(), &xs, &ys, &cfg).unwrap();
        assert_eq!(a, b);

        let fixed = TrainConfig {
            early_stopping: false,
            ..cfg
        };
        let (_, s) = train_mlp(Mlp::init(&[1, 8, 1], 1).unwrap(), &xs, &ys, &fixed).unwrap();
        assert_eq!(s.epochs_run, 20);
        assert!(s.validation_loss.is_empty());
    }

    #[test]
    fn diverging_training_is_reported() {
        let xs = vec![vec![1.0], vec![2.0], vec![3.0]];
        let ys = vec![vec![f64::NAN], vec![0.0], vec![1.0]];
        let cfg = TrainConfig {
            early_stopping: false,
            ..TrainConfig::default()
        };
        let r = train_mlp(Mlp::init(&[1, 1], 0).unwrap(), &xs, &ys, &cfg);
        assert!(matches!(r, Err(Error::Training(_))));
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
    }
}
