use super::KnnParams;
use crate::data::Dataset;

#[derive(Debug, Clone)]
pub(crate) struct Knn {
    k: usize,
    n: usize,
    rows: Vec<f64>,
    labels: Vec<u8>,
}

impl Knn {
    pub(crate) fn fit(p: &KnnParams, train: &Dataset) -> Self {
        Self {
            k: p.k,
            n: train.n(),
            rows: train.values().to_vec(),
            labels: train.labels().to_vec(),
        }
    }

    /// Fraction of the `k` nearest records labelled 1. Distance ties go to
    /// the lower record index. An exact vote tie resolves toward class 0, so
    /// it scores just under 0.5.
    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .chunks_exact(self.n)
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let ones = dist[..k].iter().filter(|(_, i)| self.labels[*i] == 1).count();
        if 2 * ones == k {
            0.5f64.next_down()
        } else {
            ones as f64 / k as f64
        }
    }
}
