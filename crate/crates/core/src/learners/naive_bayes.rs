use super::NaiveBayesParams;
use crate::data::Dataset;

/// Gaussian naive Bayes with per-class, per-feature means and variances.
#[derive(Debug, Clone)]
pub(crate) struct GaussianNb {
    log_prior: [f64; 2],
    means: [Vec<f64>; 2],
    vars: [Vec<f64>; 2],
}

impl GaussianNb {
    pub(crate) fn fit(p: &NaiveBayesParams, train: &Dataset) -> Self {
        let n = train.n();
        let labels = train.labels();
        let mut counts = [0usize; 2];
        let mut means = [vec![0.0; n], vec![0.0; n]];
        for (row, &y) in train.rows().zip(labels) {
            let c = y as usize;
            counts[c] += 1;
            means[c].iter_mut().zip(row).for_each(|(acc, v)| *acc += v);
        }
        for c in 0..2 {
            if counts[c] > 0 {
                means[c].iter_mut().for_each(|v| *v /= counts[c] as f64);
            }
        }
        let mut vars = [vec![0.0; n], vec![0.0; n]];
        for (row, &y) in train.rows().zip(labels) {
            let c = y as usize;
            for ((acc, v), mu) in vars[c].iter_mut().zip(row).zip(&means[c]) {
                *acc += (v - mu) * (v - mu);
            }
        }
        for c in 0..2 {
            if counts[c] > 0 {
                vars[c].iter_mut().for_each(|v| *v /= counts[c] as f64);
            }
        }

        // smoothing is relative to the widest feature over the whole partition
        let m = train.m() as f64;
        let max_var = (0..n)
            .map(|j| {
                let col = train.column(j);
                let mu = col.iter().sum::<f64>() / m;
                col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m
            })
            .fold(0.0, f64::max);
        let eps = if max_var > 0.0 { p.var_smoothing * max_var } else { p.var_smoothing.max(1e-12) };
        vars.iter_mut().flatten().for_each(|v| *v += eps);

        let log_prior = counts.map(|c| if c == 0 { f64::NEG_INFINITY } else { (c as f64 / m).ln() });
        Self { log_prior, means, vars }
    }

    fn log_joint(&self, c: usize, row: &[f64]) -> f64 {
        self.log_prior[c]
            + row
                .iter()
                .zip(&self.means[c])
                .zip(&self.vars[c])
                .map(|((x, mu), var)| {
                    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mu) * (x - mu) / (2.0 * var)
                })
                .sum::<f64>()
    }

    /// Posterior probability of class 1.
    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        if self.log_prior[1] == f64::NEG_INFINITY {
            return 0.0;
        }
        if self.log_prior[0] == f64::NEG_INFINITY {
            return 1.0;
        }
        let d = self.log_joint(0, row) - self.log_joint(1, row);
        1.0 / (1.0 + d.exp())
    }
}

#[cfg(test)]
mod tests {
    use crate::data::Dataset;
    use crate::learners::{ClassifierSpec, Family, Predictor};

    #[test]
    fn single_class_always_predicts_it() {
        let ds = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 0], None).unwrap();
        let m = ClassifierSpec::new(Family::NaiveBayes).fit(&ds).unwrap();
        for x in [-100.0, 2.0, 1e6] {
            assert_eq!(m.predict(&[x]).unwrap(), 0);
        }
    }

    #[test]
    fn posterior_matches_closed_form() {
        // class 0 ~ {0, 2}: mean 1, var 1; class 1 ~ {4, 6}: mean 5, var 1
        let ds = Dataset::from_rows(&[vec![0.0], vec![2.0], vec![4.0], vec![6.0]], vec![0, 0, 1, 1], None)
            .unwrap();
        let m = ClassifierSpec::new(Family::NaiveBayes)
            .with_param("var_smoothing", 0.0)
            .fit(&ds)
            .unwrap();
        // equal priors and variances: log-odds = ((x-1)^2 - (x-5)^2) / 2
        let x: f64 = 2.5;
        let expected = 1.0 / (1.0 + (-((x - 1.0).powi(2) - (x - 5.0).powi(2)) / 2.0).exp());
        assert!((m.score(&[x]).unwrap() - expected).abs() < 1e-12);
        assert_eq!(m.predict(&[3.0]).unwrap(), 1);
    }
}
