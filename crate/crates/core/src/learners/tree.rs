use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;

use super::{CartParams, ForestParams};
use crate::data::Dataset;
use crate::rng::{self, Rng};

#[derive(Debug, Clone)]
enum Node {
    Leaf { score: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Binary tree grown on Gini impurity; `x[feature] <= threshold` goes left.
#[derive(Debug, Clone)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

struct Grower<'a> {
    values: &'a [f64],
    labels: &'a [u8],
    n: usize,
    max_depth: usize,
    min_leaf: usize,
    /// Per-split feature subsampling (random forest); `None` scans all.
    max_features: Option<usize>,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    purity: f64,
}

/// `sum_c count_c^2 / total`; weighted Gini = total - this, so larger is purer.
fn purity(ones: usize, total: usize) -> f64 {
    let zeros = total - ones;
    ((ones * ones + zeros * zeros) as f64) / total as f64
}

impl Grower<'_> {
    fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn best_split(&self, idx: &[usize], features: &[usize]) -> Option<BestSplit> {
        let total = idx.len();
        let ones_total = idx.iter().filter(|&&i| self.labels[i] == 1).count();
        let parent = purity(ones_total, total);
        let mut best: Option<BestSplit> = None;
        let mut order = idx.to_vec();
        for &f in features {
            order.sort_by(|&a, &b| self.value(a, f).total_cmp(&self.value(b, f)));
            let mut ones_left = 0;
            for pos in 0..total - 1 {
                ones_left += usize::from(self.labels[order[pos]] == 1);
                let (lo, hi) = (self.value(order[pos], f), self.value(order[pos + 1], f));
                let n_left = pos + 1;
                if lo == hi || n_left < self.min_leaf || total - n_left < self.min_leaf {
                    continue;
                }
                let p = purity(ones_left, n_left) + purity(ones_total - ones_left, total - n_left);
                let improves = p > parent * (1.0 + 1e-12);
                if improves && best.as_ref().is_none_or(|b| p > b.purity) {
                    best = Some(BestSplit { feature: f, threshold: 0.5 * (lo + hi), purity: p });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut Option<Rng>) -> usize {
        let ones = idx.iter().filter(|&&i| self.labels[i] == 1).count();
        let leaf = Node::Leaf { score: ones as f64 / idx.len() as f64 };
        let pure = ones == 0 || ones == idx.len();
        if pure || depth >= self.max_depth || idx.len() < 2 * self.min_leaf {
            self.nodes.push(leaf);
            return self.nodes.len() - 1;
        }
        let features: Vec<usize> = match (self.max_features, rng.as_mut()) {
            (Some(k), Some(r)) if k < self.n => {
                let mut f = sample(r, self.n, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.n).collect(),
        };
        let Some(split) = self.best_split(&idx, &features) else {
            self.nodes.push(leaf);
            return self.nodes.len() - 1;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.value(i, split.feature) <= split.threshold);

        let id = self.nodes.len();
        self.nodes.push(leaf);
        let l = self.grow(left, depth + 1, rng);
        let r = self.grow(right, depth + 1, rng);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left: l, right: r };
        id
    }
}

impl Tree {
    fn grow(
        train: &Dataset,
        labels: &[u8],
        idx: Vec<usize>,
        max_depth: usize,
        min_leaf: usize,
        max_features: Option<usize>,
        mut rng: Option<Rng>,
    ) -> Self {
        let mut g = Grower {
            values: train.values(),
            labels,
            n: train.n(),
            max_depth,
            min_leaf,
            max_features,
            nodes: Vec::new(),
        };
        g.grow(idx, 0, &mut rng);
        Tree { nodes: g.nodes }
    }

    pub(crate) fn fit_cart(p: &CartParams, train: &Dataset) -> Self {
        let labels = train.labels();
        Self::grow(train, labels, (0..train.m()).collect(), p.max_depth, p.min_samples_leaf, None, None)
    }

    /// Class-1 fraction of the leaf `row` falls into.
    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { score } => return score,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Bagged trees; tree `t` draws its bootstrap and feature subsets from a
/// stream keyed by `(seed, t)`.
#[derive(Debug, Clone)]
pub(crate) struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub(crate) fn fit(p: &ForestParams, train: &Dataset, seed: u64) -> Self {
        let m = train.m();
        let n = train.n();
        let max_features = p
            .max_features
            .unwrap_or_else(|| (n as f64).sqrt().ceil() as usize)
            .clamp(1, n);
        let labels = train.labels();
        let trees = (0..p.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::stream(seed, &[t as u64]);
                let idx: Vec<usize> = (0..m).map(|_| r.gen_range(0..m)).collect();
                Tree::grow(train, labels, idx, p.max_depth, p.min_samples_leaf, Some(max_features), Some(r))
            })
            .collect();
        Forest { trees }
    }

    /// Fraction of trees voting for class 1.
    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.score(row) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}
