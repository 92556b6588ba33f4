//! Shared fixtures for the benchmarks.

use genefilter_core::synthetic::{planted_dataset, PlantedConfig};
use genefilter_core::{Dataset, TrainSet};
use ndarray::Axis;

/// Planted dataset of the end-to-end benchmark size (1000 genes x 40 samples).
pub fn planted(n_genes: usize) -> Dataset {
    planted_dataset(&PlantedConfig {
        n_genes,
        seed: 1,
        ..Default::default()
    })
    .expect("valid planted config")
    .dataset
}

/// Samples x genes training set built from the first `k` genes of `ds`.
pub fn train_set(ds: &Dataset, k: usize) -> TrainSet {
    let genes: Vec<usize> = (0..k).collect();
    let x = ds.matrix.select(Axis(0), &genes).reversed_axes();
    TrainSet::new(x, ds.labels.clone()).expect("valid training set")
}
