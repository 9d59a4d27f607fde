use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{arg_err, Result};

/// Per-column z-score parameters fitted on a training partition.
///
/// Continuous and ordinal columns are standardised with the population
/// standard deviation; binary and nominal columns pass through. A column
/// with zero spread maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub scaled: Vec<bool>,
}

pub fn fit_scaler(train: &Dataset) -> Scaler {
    let m = train.m() as f64;
    let n = train.n();
    let mut means = vec![0.0; n];
    for row in train.rows() {
        for (acc, v) in means.iter_mut().zip(row) {
            *acc += v;
        }
    }
    means.iter_mut().for_each(|v| *v /= m);
    let mut vars = vec![0.0; n];
    for row in train.rows() {
        for ((acc, v), mu) in vars.iter_mut().zip(row).zip(&means) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let stds = vars.iter().map(|v| (v / m).sqrt()).collect();
    let scaled = train.specs().iter().map(|s| s.kind.is_numeric()).collect();
    Scaler { means, stds, scaled }
}

impl Scaler {
    pub fn n(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n() {
            return arg_err(format!("row has {} values, scaler expects {}", row.len(), self.n()));
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| self.transform_value(j, v))
            .collect())
    }

    fn transform_value(&self, j: usize, v: f64) -> f64 {
        if !self.scaled[j] {
            v
        } else if self.stds[j] == 0.0 {
            0.0
        } else {
            (v - self.means[j]) / self.stds[j]
        }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.n() != self.n() {
            return arg_err(format!("dataset has {} features, scaler expects {}", ds.n(), self.n()));
        }
        let n = self.n();
        let values = ds
            .values()
            .iter()
            .enumerate()
            .map(|(idx, &v)| self.transform_value(idx % n, v))
            .collect();
        ds.with_values(values, ds.specs().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{statlog_specs, FeatureKind, FeatureSpec};

    fn column(values: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        let labels = (0..values.len()).map(|i| (i % 2) as u8).collect();
        Dataset::from_rows(&rows, labels, None).unwrap()
    }

    #[test]
    fn constant_column_scales_to_zero() {
        let ds = column(&[5.0, 5.0, 5.0]);
        let out = fit_scaler(&ds).apply(&ds).unwrap();
        assert_eq!(out.column(0), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_point_population_std() {
        let ds = column(&[0.0, 2.0]);
        let s = fit_scaler(&ds);
        assert_eq!((s.means[0], s.stds[0]), (1.0, 1.0));
        assert_eq!(s.apply(&ds).unwrap().column(0), vec![-1.0, 1.0]);
    }

    #[test]
    fn standardised_moments() {
        let ds = column(&[3.0, 7.5, -1.0, 12.0, 4.25, 0.5, 9.0]);
        let col = fit_scaler(&ds).apply(&ds).unwrap().column(0);
        let m = col.len() as f64;
        let mean = col.iter().sum::<f64>() / m;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((sd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn categorical_columns_pass_through() {
        let specs = vec![
            FeatureSpec::new("a", FeatureKind::Continuous, 0),
            FeatureSpec::new("b", FeatureKind::Nominal, 1),
            FeatureSpec::new("c", FeatureKind::Binary, 2),
        ];
        let rows = vec![vec![1.0, 3.0, 0.0], vec![3.0, 7.0, 1.0]];
        let ds = Dataset::from_rows(&rows, vec![0, 1], Some(specs)).unwrap();
        let out = fit_scaler(&ds).apply(&ds).unwrap();
        assert_eq!(out.row(0), &[-1.0, 3.0, 0.0]);
        assert_eq!(out.specs(), ds.specs());
        assert_eq!(out.labels(), ds.labels());
    }

    #[test]
    fn dimension_mismatch() {
        let ds = column(&[1.0, 2.0]);
        let s = fit_scaler(&ds);
        let wide = Dataset::new(vec![0.0; 13], vec![0], statlog_specs()).unwrap();
        assert!(s.apply(&wide).is_err());
        assert!(s.transform_row(&[1.0, 2.0]).is_err());
    }
}
