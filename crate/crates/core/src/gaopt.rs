//! Genetic-algorithm tuning of the fuzzy regions.
//!
//! A chromosome is the six reals `[fc.alpha, fc.beta, var.alpha, var.beta,
//! rs.alpha, rs.beta]`. Fitness is the separability index of the samples
//! projected onto the top-ranked genes of the fuzzy filter.

use std::fmt::Write as _;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::standardize_genes;
use crate::fgf::{FgfParams, FuzzyGeneFilter};
use crate::rankers::GeneRanking;
use crate::{seed, Dataset, Error, Result, EPS_VAR};

const GENE_MIN: f64 = 0.01;
const GENE_MAX: f64 = 0.99;
const MIN_WIDTH: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_sigma: f64,
    pub mutation_rate: f64,
    pub elites: usize,
    pub top_n_genes: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            generations: 100,
            tournament_size: 3,
            crossover_rate: 0.8,
            mutation_sigma: 0.05,
            mutation_rate: 0.1,
            elites: 2,
            top_n_genes: 20,
            seed: 42,
        }
    }
}

impl GaConfig {
    pub fn validate(&self, n_genes: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.population_size < 2 {
            return bad("population_size must be at least 2".into());
        }
        if self.elites < 1 || self.elites >= self.population_size {
            return bad(format!(
                "elites must be in 1..population_size (got {})",
                self.elites
            ));
        }
        if self.tournament_size < 1 {
            return bad("tournament_size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("crossover_rate and mutation_rate must lie in [0, 1]".into());
        }
        if !(self.mutation_sigma > 0.0) {
            return bad("mutation_sigma must be positive".into());
        }
        if self.top_n_genes < 2 || self.top_n_genes > n_genes {
            return bad(format!(
                "top_n_genes must be in 2..={n_genes} (got {})",
                self.top_n_genes
            ));
        }
        Ok(())
    }
}

/// Best fitness and parameters after each generation; entry 0 is the initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaTrace {
    pub best_fitness: Vec<f64>,
    pub best_params: Vec<FgfParams>,
}

impl GaTrace {
    /// `generation<TAB>best_fitness` with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("generation\tbest_fitness\n");
        for (g, f) in self.best_fitness.iter().enumerate() {
            let _ = writeln!(out, "{g}\t{f}");
        }
        out
    }
}

/// Trace ratio trace(S_B) / (trace(S_W) + eps) of the samples in the subspace
/// spanned by `genes`, where rows of `standardized` are already z-scored.
///
/// Genes are summed in index order, so the result depends only on the gene set.
pub fn trace_ratio(standardized: &Array2<f64>, labels: &[u8], genes: &[usize]) -> f64 {
    let mut genes = genes.to_vec();
    genes.sort_unstable();
    let n = labels.len();
    let counts = [
        labels.iter().filter(|&&l| l == 0).count() as f64,
        labels.iter().filter(|&&l| l == 1).count() as f64,
    ];
    let mut between = 0.0;
    let mut within = 0.0;
    for g in genes {
        let row = standardized.row(g);
        let mut sums = [0.0; 2];
        for (&v, &l) in row.iter().zip(labels) {
            sums[l as usize] += v;
        }
        let grand = (sums[0] + sums[1]) / n as f64;
        let means = [sums[0] / counts[0], sums[1] / counts[1]];
        for c in 0..2 {
            between += counts[c] * (means[c] - grand).powi(2);
        }
        for (&v, &l) in row.iter().zip(labels) {
            within += (v - means[l as usize]).powi(2);
        }
    }
    between / (within + EPS_VAR)
}

/// Separability of the two classes on the `top_n` best genes of `ranking`.
pub fn separability_index(dataset: &Dataset, ranking: &GeneRanking, top_n: usize) -> Result<f64> {
    if top_n > dataset.n_genes() || top_n > ranking.order.len() {
        return Err(Error::InvalidArgument(format!(
            "top_n {top_n} exceeds gene count {}",
            dataset.n_genes()
        )));
    }
    let mut genes = ranking.top(top_n).to_vec();
    genes.sort_unstable();
    let sub = dataset.matrix.select(ndarray::Axis(0), &genes);
    let z = standardize_genes(&sub);
    let idx: Vec<usize> = (0..genes.len()).collect();
    Ok(trace_ratio(&z, &dataset.labels, &idx))
}

/// Forces a chromosome into the valid region: values in `[0.01, 0.99]` and
/// `alpha < beta` for every pair.
pub fn repair(chrom: &mut [f64; 6]) {
    for v in chrom.iter_mut() {
        *v = if v.is_nan() { GENE_MIN } else { v.clamp(GENE_MIN, GENE_MAX) };
    }
    for pair in chrom.chunks_exact_mut(2) {
        if pair[0] >= pair[1] {
            pair.swap(0, 1);
        }
        if pair[0] >= pair[1] {
            pair[1] = (pair[0] + MIN_WIDTH).min(GENE_MAX);
        }
        if pair[0] >= pair[1] {
            pair[0] = pair[1] - MIN_WIDTH;
        }
    }
}

fn random_chromosome(rng: &mut ChaCha8Rng) -> [f64; 6] {
    let mut c = [0.0; 6];
    for pair in c.chunks_exact_mut(2) {
        pair[0] = rng.random_range(0.01..0.49);
        pair[1] = rng.random_range(0.51..0.99);
    }
    c
}

fn tournament(rng: &mut ChaCha8Rng, fitness: &[f64], size: usize) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Fitness evaluator shared by all chromosomes of one run.
pub struct FitnessFn {
    filter: FuzzyGeneFilter,
    standardized: Array2<f64>,
    labels: Vec<u8>,
    top_n: usize,
}

impl FitnessFn {
    pub fn new(dataset: &Dataset, top_n: usize) -> Result<Self> {
        Ok(Self {
            filter: FuzzyGeneFilter::new(dataset)?,
            standardized: standardize_genes(&dataset.matrix),
            labels: dataset.labels.clone(),
            top_n,
        })
    }

    pub fn evaluate(&self, params: &FgfParams) -> f64 {
        let ranking = self.filter.rank(params);
        trace_ratio(&self.standardized, &self.labels, ranking.top(self.top_n))
    }
}

fn to_params(c: &[f64; 6]) -> FgfParams {
    FgfParams::from_array(*c).expect("repaired chromosome is valid")
}

/// Runs the GA and returns the best parameters ever evaluated plus the trace.
pub fn optimize_fgf(dataset: &Dataset, config: &GaConfig) -> Result<(FgfParams, GaTrace)> {
    config.validate(dataset.n_genes())?;
    let fitness_fn = FitnessFn::new(dataset, config.top_n_genes)?;
    let evaluate = |pop: &[[f64; 6]]| -> Vec<f64> {
        pop.par_iter()
            .map(|c| fitness_fn.evaluate(&to_params(c)))
            .collect()
    };

    let mut rng = seed::rng(config.seed);
    let mutation = Normal::new(0.0, config.mutation_sigma)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut population: Vec<[f64; 6]> = (0..config.population_size)
        .map(|_| random_chromosome(&mut rng))
        .collect();
    let mut fitness = evaluate(&population);

    let mut best_idx = argmax(&fitness);
    let mut best = (fitness[best_idx], population[best_idx]);
    let mut trace = GaTrace {
        best_fitness: vec![best.0],
        best_params: vec![to_params(&best.1)],
    };

    for _ in 0..config.generations {
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));

        let mut next: Vec<[f64; 6]> = ranked[..config.elites].iter().map(|&i| population[i]).collect();
        let elite_fitness: Vec<f64> = ranked[..config.elites].iter().map(|&i| fitness[i]).collect();

        while next.len() < config.population_size {
            let p1 = population[tournament(&mut rng, &fitness, config.tournament_size)];
            let p2 = population[tournament(&mut rng, &fitness, config.tournament_size)];
            let (mut c1, mut c2) = (p1, p2);
            if rng.random::<f64>() < config.crossover_rate {
                for i in 0..6 {
                    if rng.random_bool(0.5) {
                        std::mem::swap(&mut c1[i], &mut c2[i]);
                    }
                }
            }
            for child in [&mut c1, &mut c2] {
                for v in child.iter_mut() {
                    if rng.random::<f64>() < config.mutation_rate {
                        *v += mutation.sample(&mut rng);
                    }
                }
                repair(child);
            }
            next.push(c1);
            if next.len() < config.population_size {
                next.push(c2);
            }
        }

        let mut next_fitness = elite_fitness;
        next_fitness.extend(evaluate(&next[config.elites..]));
        population = next;
        fitness = next_fitness;

        best_idx = argmax(&fitness);
        if fitness[best_idx] > best.0 {
            best = (fitness[best_idx], population[best_idx]);
        }
        trace.best_fitness.push(best.0);
        trace.best_params.push(to_params(&best.1));
    }
    Ok((to_params(&best.1), trace))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rankers::RankMethod;
    use crate::synthetic::{planted_dataset, PlantedConfig};
    use ndarray::array;

    #[test]
    fn trace_ratio_hand_computed() {
        // class A = {(0,0),(1,1)}, class B = {(4,4),(5,5)}
        let m = array![[0.0, 1.0, 4.0, 5.0], [0.0, 1.0, 4.0, 5.0]];
        let ds = Dataset::from_matrix(m, vec![0, 0, 1, 1]).unwrap();
        let ranking = GeneRanking {
            method: RankMethod::TTest,
            order: vec![0, 1],
            scores: vec![0.0, 0.0],
        };
        let si = separability_index(&ds, &ranking, 2).unwrap();
        // each gene z-scored by sd sqrt(17/3): S_B = 2 * 16 * 3/17, S_W = 2 * 3/17
        let expected = (96.0 / 17.0) / (6.0 / 17.0 + EPS_VAR);
        assert!((si - expected).abs() < 1e-12, "{si} vs {expected}");
        assert!(separability_index(&ds, &ranking, 3).is_err());
    }

    #[test]
    fn constant_genes_have_zero_si() {
        let m = ndarray::Array2::from_elem((3, 6), 2.0);
        let ds = Dataset::from_matrix(m, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let ranking = GeneRanking {
            method: RankMethod::TTest,
            order: vec![0, 1, 2],
            scores: vec![1.0; 3],
        };
        assert_eq!(separability_index(&ds, &ranking, 3).unwrap(), 0.0);
    }

    #[test]
    fn repair_examples() {
        let mut c = [-0.2, 1.5, 0.7, 0.3, 0.5, 0.5];
        repair(&mut c);
        assert_eq!(&c[..4], &[0.01, 0.99, 0.3, 0.7]);
        assert!(c[4] < c[5] && (c[5] - 0.51).abs() < 1e-12);
        let mut c = [0.995, 0.999, 0.2, 0.3, 0.4, 0.6];
        repair(&mut c);
        assert!(c[0] < c[1] && c[1] <= 0.99 && c[0] > 0.0);
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let p = planted_dataset(&PlantedConfig {
            n_genes: 60,
            n_planted: 4,
            seed: 9,
            ..Default::default()
        })
        .unwrap();
        let cfg = GaConfig {
            population_size: 6,
            generations: 0,
            top_n_genes: 5,
            ..Default::default()
        };
        let (params, trace) = optimize_fgf(&p.dataset, &cfg).unwrap();
        assert_eq!(trace.best_fitness.len(), 1);
        assert_eq!(trace.best_params[0], params);
    }

    #[test]
    fn config_validation() {
        let ok = GaConfig::default();
        assert!(ok.validate(100).is_ok());
        assert!(ok.validate(10).is_err());
        assert!(GaConfig { elites: 50, ..ok.clone() }.validate(100).is_err());
        assert!(GaConfig { mutation_sigma: 0.0, ..ok.clone() }.validate(100).is_err());
        assert!(GaConfig { crossover_rate: 1.5, ..ok }.validate(100).is_err());
    }

    #[test]
    fn trace_tsv() {
        let t = GaTrace {
            best_fitness: vec![1.0, 1.5],
            best_params: vec![FgfParams::default(); 2],
        };
        assert_eq!(t.to_tsv(), "generation\tbest_fitness\n0\t1\n1\t1.5\n");
    }
}
