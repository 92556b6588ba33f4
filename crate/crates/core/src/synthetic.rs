//! Seeded synthetic expression data with planted differentially expressed genes.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{seed, Dataset, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub n_genes: usize,
    pub n_class0: usize,
    pub n_class1: usize,
    pub n_planted: usize,
    /// Class-1 mean shift of planted genes, in units of the gene's noise sd.
    pub shift_sd: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n_genes: 1000,
            n_class0: 20,
            n_class1: 20,
            n_planted: 20,
            shift_sd: 2.0,
            seed: 0,
        }
    }
}

/// A dataset together with the indices of its planted genes (ascending).
#[derive(Debug, Clone)]
pub struct Planted {
    pub dataset: Dataset,
    pub planted: Vec<usize>,
}

/// Log-scale-like expression: every gene has a base level in `[6, 10)` and a
/// noise sd in `[0.5, 1.5)`. Planted genes get a class-1 shift of
/// `shift_sd` noise sds in a random direction. Class-0 samples come first.
pub fn planted_dataset(cfg: &PlantedConfig) -> Result<Planted> {
    let mut rng = seed::rng(cfg.seed);
    let n = cfg.n_class0 + cfg.n_class1;
    let mut genes: Vec<usize> = (0..cfg.n_genes).collect();
    genes.shuffle(&mut rng);
    let mut planted = genes[..cfg.n_planted.min(cfg.n_genes)].to_vec();
    planted.sort_unstable();

    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut matrix = Array2::zeros((cfg.n_genes, n));
    for g in 0..cfg.n_genes {
        let base = rng.random_range(6.0..10.0);
        let sd = rng.random_range(0.5..1.5);
        let shift = if planted.binary_search(&g).is_ok() {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            sign * cfg.shift_sd * sd
        } else {
            0.0
        };
        for s in 0..n {
            let offset = if s >= cfg.n_class0 { shift } else { 0.0 };
            matrix[[g, s]] = base + offset + sd * std_normal.sample(&mut rng);
        }
    }
    let labels = (0..n).map(|s| u8::from(s >= cfg.n_class0)).collect();
    Ok(Planted {
        dataset: Dataset::from_matrix(matrix, labels)?,
        planted,
    })
}
