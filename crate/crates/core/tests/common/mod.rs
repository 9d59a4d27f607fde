#![allow(dead_code)]

use rand::Rng;
use stackga_core::data::read_dataset;
use stackga_core::rng;
use stackga_core::Dataset;

pub fn heart() -> Dataset {
    read_dataset(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/heart.dat")).expect("bundled heart data")
}

/// `m` uniform rows over `n` features; label is `x0 + x1 > 0`.
pub fn two_informative(n: usize, m: usize, seed: u64) -> Dataset {
    let mut r = rng::stream(seed, &[]);
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let labels = rows.iter().map(|x| u8::from(x[0] + x[1] > 0.0)).collect();
    Dataset::from_rows(&rows, labels, None).unwrap()
}

/// Features independent of uniformly random labels.
pub fn random_labels(n: usize, m: usize, seed: u64) -> Dataset {
    let mut r = rng::stream(seed, &[1]);
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let mut labels: Vec<u8> = (0..m).map(|_| r.gen_range(0..2)).collect();
    labels[0] = 0;
    labels[1] = 1;
    Dataset::from_rows(&rows, labels, None).unwrap()
}
