mod common;

use rand::Rng;
use stackga_core::learners::{logistic_loss_and_gradient, Network};
use stackga_core::rng;

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn central_difference(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-6;
    (0..params.len())
        .map(|k| {
            let mut p = params.to_vec();
            p[k] += h;
            let up = f(&p);
            p[k] -= 2.0 * h;
            (up - f(&p)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let ds = common::heart();
    let scaled = stackga_core::data::fit_scaler(&ds).apply(&ds).unwrap();
    let (x, y) = (scaled.values(), scaled.labels());
    for point in 0..20u64 {
        let mut r = rng::stream(11, &[point]);
        let params: Vec<f64> = (0..=ds.n()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let (_, grad) = logistic_loss_and_gradient(&params, x, y, 1e-2);
        let numeric = central_difference(&params, |p| logistic_loss_and_gradient(p, x, y, 1e-2).0);
        let err = relative_error(&grad, &numeric);
        assert!(err < 1e-4, "point {point}: relative error {err}");
    }
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let ds = common::two_informative(4, 50, 3);
    let (x, y) = (ds.values(), ds.labels());
    for point in 0..20u64 {
        let mut r = rng::stream(5, &[point]);
        let params = (0..Network::param_count(4, 6)).map(|_| r.gen_range(-1.0..1.0)).collect();
        let net = Network::from_params(4, 6, params);
        let (_, grad) = net.loss_and_gradient(x, y);
        let numeric = central_difference(net.params(), |p| {
            Network::from_params(4, 6, p.to_vec()).loss_and_gradient(x, y).0
        });
        let err = relative_error(&grad, &numeric);
        assert!(err < 1e-4, "point {point}: relative error {err}");
    }
}
