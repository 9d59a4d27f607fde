//! One-hidden-layer perceptron: tanh hidden units, sigmoid output,
//! mean cross-entropy loss, trained by full-batch gradient descent.

use rand::Rng as _;

use super::linear::sigmoid;
use super::MlpParams;
use crate::data::Dataset;
use crate::rng;

/// `tanh` through a single `exp`, which is markedly cheaper than the libm
/// routine in the training loop.
fn tanh(z: f64) -> f64 {
    if z.abs() > 20.0 {
        return z.signum();
    }
    let e = (2.0 * z).exp();
    (e - 1.0) / (e + 1.0)
}

/// Parameters stored flat as `[w1, b1, w2, b2]`, where `w1` is input-major:
/// entry `j * hidden + h` connects input `j` to hidden unit `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n_in: usize,
    hidden: usize,
    params: Vec<f64>,
}

impl Network {
    pub fn param_count(n_in: usize, hidden: usize) -> usize {
        hidden * n_in + 2 * hidden + 1
    }

    pub fn from_params(n_in: usize, hidden: usize, params: Vec<f64>) -> Self {
        assert_eq!(params.len(), Self::param_count(n_in, hidden), "parameter vector length");
        Self { n_in, hidden, params }
    }

    /// Weights uniform in `(-range, range)`, biases zero.
    pub fn random(n_in: usize, hidden: usize, range: f64, seed: u64) -> Self {
        let mut r = rng::stream(seed, &[]);
        let mut params = vec![0.0; Self::param_count(n_in, hidden)];
        let (w1, rest) = params.split_at_mut(hidden * n_in);
        w1.iter_mut().for_each(|w| *w = r.gen_range(-range..range));
        rest[hidden..2 * hidden].iter_mut().for_each(|w| *w = r.gen_range(-range..range));
        Self { n_in, hidden, params }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (w1, rest) = self.params.split_at(self.hidden * self.n_in);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden);
        (w1, b1, w2, b2[0])
    }

    /// Output logit; fills `act` with the hidden activations.
    fn logit(&self, row: &[f64], act: &mut [f64]) -> f64 {
        let (w1, b1, w2, b2) = self.split();
        act.copy_from_slice(b1);
        for (x, w) in row.iter().zip(w1.chunks_exact(self.hidden)) {
            act.iter_mut().zip(w).for_each(|(a, wh)| *a += x * wh);
        }
        act.iter_mut().for_each(|a| *a = tanh(*a));
        b2 + act.iter().zip(w2).map(|(a, w)| a * w).sum::<f64>()
    }

    pub fn forward(&self, row: &[f64]) -> f64 {
        let mut act = vec![0.0; self.hidden];
        sigmoid(self.logit(row, &mut act))
    }

    /// Adds the gradient of the mean cross-entropy over `(x, y)` into `grad`
    /// (which must be zeroed by the caller) and returns the loss.
    fn accumulate(&self, x: &[f64], y: &[u8], grad: &mut [f64], act: &mut [f64]) -> f64 {
        let (n, hidden) = (self.n_in, self.hidden);
        let w2_start = hidden * n + hidden;
        let m = y.len() as f64;
        let mut loss = 0.0;
        let mut d_hidden = vec![0.0; hidden];
        for (row, &label) in x.chunks_exact(n).zip(y) {
            let out = self.logit(row, act);
            let target = f64::from(label);
            loss += if out > 0.0 { out + (-out).exp().ln_1p() } else { out.exp().ln_1p() } - target * out;
            let d_out = (sigmoid(out) - target) / m;
            let w2 = &self.params[w2_start..w2_start + hidden];
            let (gw1, rest) = grad.split_at_mut(hidden * n);
            let (gb1, rest) = rest.split_at_mut(hidden);
            let (gw2, gb2) = rest.split_at_mut(hidden);
            gb2[0] += d_out;
            for h in 0..hidden {
                gw2[h] += d_out * act[h];
                d_hidden[h] = d_out * w2[h] * (1.0 - act[h] * act[h]);
                gb1[h] += d_hidden[h];
            }
            for (x, g) in row.iter().zip(gw1.chunks_exact_mut(hidden)) {
                g.iter_mut().zip(&d_hidden).for_each(|(gh, dh)| *gh += x * dh);
            }
        }
        loss / m
    }

    /// Mean cross-entropy over `(x, y)` and its gradient in the flat
    /// parameter layout.
    pub fn loss_and_gradient(&self, x: &[f64], y: &[u8]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut act = vec![0.0; self.hidden];
        let loss = self.accumulate(x, y, &mut grad, &mut act);
        (loss, grad)
    }
}

pub(crate) fn train(p: &MlpParams, train: &Dataset, seed: u64) -> Network {
    let mut net = Network::random(train.n(), p.hidden, p.init_range, seed);
    let labels = train.labels();
    let mut grad = vec![0.0; net.params.len()];
    let mut act = vec![0.0; p.hidden];
    for _ in 0..p.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        net.accumulate(train.values(), labels, &mut grad, &mut act);
        net.params.iter_mut().zip(&grad).for_each(|(w, g)| *w -= p.learning_rate * g);
    }
    net
}
