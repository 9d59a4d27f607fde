use rand::seq::SliceRandom;

use super::{LogisticParams, SvmParams};
use crate::data::Dataset;
use crate::rng;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    /// Full-batch gradient descent from zero weights.
    pub(crate) fn fit_logistic(p: &LogisticParams, train: &Dataset) -> Self {
        let n = train.n();
        let labels = train.labels();
        let mut params = vec![0.0; n + 1];
        for _ in 0..p.epochs {
            let (_, grad) = logistic_loss_and_gradient(&params, train.values(), labels, p.l2);
            params.iter_mut().zip(&grad).for_each(|(w, g)| *w -= p.learning_rate * g);
        }
        let bias = params.pop().unwrap();
        LinearModel { weights: params, bias }
    }

    /// Per-sample subgradient descent on the L2-regularised hinge loss. The
    /// step at sample step `t` is `learning_rate / (1 + t / m)`; each epoch
    /// visits records in a freshly shuffled order.
    pub(crate) fn fit_svm(p: &SvmParams, train: &Dataset, seed: u64) -> Self {
        let m = train.m();
        let labels = train.labels();
        let mut w = vec![0.0; train.n()];
        let mut b = 0.0;
        let mut order: Vec<usize> = (0..m).collect();
        let mut t = 0usize;
        for epoch in 0..p.epochs {
            order.shuffle(&mut rng::stream(seed, &[epoch as u64]));
            for &i in &order {
                let eta = p.learning_rate / (1.0 + t as f64 / m as f64);
                t += 1;
                let x = train.row(i);
                let y = if labels[i] == 1 { 1.0 } else { -1.0 };
                let margin = b + w.iter().zip(x).map(|(wj, xj)| wj * xj).sum::<f64>();
                let shrink = 1.0 - eta * p.l2;
                if y * margin < 1.0 {
                    w.iter_mut().zip(x).for_each(|(wj, xj)| *wj = shrink * *wj + eta * y * xj);
                    b += eta * y;
                } else {
                    w.iter_mut().for_each(|wj| *wj *= shrink);
                }
            }
        }
        LinearModel { weights: w, bias: b }
    }
}

/// Mean cross-entropy plus `l2 / 2 * |w|^2` (bias unpenalised) and its
/// gradient. `params` holds the weights followed by the bias; `x` is
/// row-major with `params.len() - 1` columns.
pub fn logistic_loss_and_gradient(params: &[f64], x: &[f64], y: &[u8], l2: f64) -> (f64, Vec<f64>) {
    let n = params.len() - 1;
    let m = y.len() as f64;
    let (w, b) = (&params[..n], params[n]);
    let mut grad = vec![0.0; n + 1];
    let mut loss = 0.0;
    for (row, &label) in x.chunks_exact(n).zip(y) {
        let z = b + w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>();
        let target = f64::from(label);
        loss += softplus(z) - target * z;
        let err = sigmoid(z) - target;
        grad[..n].iter_mut().zip(row).for_each(|(g, v)| *g += err * v);
        grad[n] += err;
    }
    grad.iter_mut().for_each(|g| *g /= m);
    loss /= m;
    for (g, wj) in grad[..n].iter_mut().zip(w) {
        *g += l2 * wj;
    }
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    (loss, grad)
}
