//! One function per subcommand. Each loads its inputs, writes its artifacts and
//! appends a run record to the output directory's manifest.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use genefilter_core::crossval::{sweep_gene_counts, SweepSummary};
use genefilter_core::dataio::{load_dataset, matrix_to_tsv, quantile_normalize, standardize_genes};
use genefilter_core::fgf::fgf_rank;
use genefilter_core::gaopt::optimize_fgf;
use genefilter_core::rankers::rank_genes;
use genefilter_core::{Classifier, Dataset, EvalConfig, FgfParams, GaConfig, RankMethod, RankScope};
use log::{info, warn};
use serde_json::json;

use crate::args::{Cli, Command, DataArgs, GaArgs};
use crate::output::{now_unix, record_run, ArtifactDir, RunRecord};
use crate::report::{anova_json, collect_results, emit_report};

pub const FGF_PARAMS: &str = "fgf_params.json";

/// Usage errors exit with status 2, everything else with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<genefilter_core::Error> for Failure {
    fn from(e: genefilter_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn usage(msg: impl fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

/// Everything a subcommand reports back for the manifest.
#[derive(Default)]
struct Run {
    inputs: Vec<PathBuf>,
    config: serde_json::Value,
}

pub fn run(cli: &Cli) -> Outcome {
    let (out_dir, run) = match &cli.command {
        Command::Ingest { data, out } => {
            let mut dir = ArtifactDir::create(&out.out, &data_inputs(data))?;
            let run = ingest(data, &mut dir)?;
            (dir, run)
        }
        Command::Normalize {
            data,
            out,
            median,
            no_quantile,
            standardize,
        } => {
            let mut dir = ArtifactDir::create(&out.out, &data_inputs(data))?;
            let run = normalize(data, *median, !*no_quantile, *standardize, &mut dir)?;
            (dir, run)
        }
        Command::Rank {
            data,
            out,
            method,
            params,
        } => {
            let methods = parse_methods(method)?;
            let fgf = resolve_fgf(&methods, params.as_deref(), &out.out, false)?;
            let mut dir = ArtifactDir::create(&out.out, &data_inputs(data))?;
            let run = rank(data, &methods, fgf, &mut dir)?;
            (dir, run)
        }
        Command::OptimizeFgf { data, out, ga } => {
            let config = ga_config(ga, cli.seed)?;
            let mut dir = ArtifactDir::create(&out.out, &data_inputs(data))?;
            let run = optimize(data, config, &mut dir)?;
            (dir, run)
        }
        Command::Evaluate {
            data,
            out,
            method,
            classifier,
            k_max,
            rank_scope,
            params,
            reoptimize,
            ga,
        } => {
            let methods = parse_methods(method)?;
            let classifiers = parse_classifiers(classifier)?;
            let scope: RankScope = rank_scope.parse().map_err(usage)?;
            if *k_max == 0 {
                return Err(usage("--k-max must be at least 1"));
            }
            let fgf = resolve_fgf(&methods, params.as_deref(), &out.out, *reoptimize)?;
            let reopt = if *reoptimize { Some(ga_config(ga, cli.seed)?) } else { None };
            let plan = EvalPlan {
                methods,
                classifiers,
                k_max: *k_max,
                scope,
                fgf,
                reoptimize: reopt,
                seed: cli.seed,
            };
            let mut dir = ArtifactDir::create(&out.out, &data_inputs(data))?;
            let run = evaluate(data, &plan, &mut dir)?;
            (dir, run)
        }
        Command::Compare { out, runs } => {
            let dirs = run_dirs(runs, &out.out);
            let results = load_results(&dirs)?;
            let mut dir = ArtifactDir::create(&out.out, &[])?;
            dir.write("anova.json", &anova_json(&results)?)?;
            (dir, Run {
                inputs: dirs,
                config: json!({ "results": results.len() }),
            })
        }
        Command::Report { out, runs, name } => {
            let dirs = run_dirs(runs, &out.out);
            let results = load_results(&dirs)?;
            let mut dir = ArtifactDir::create(&out.out, &[])?;
            emit_report(name, &results, &mut dir)?;
            (dir, Run {
                inputs: dirs,
                config: json!({ "results": results.len() }),
            })
        }
    };
    let record = RunRecord {
        command: cli.command.name().to_string(),
        argv: std::env::args().collect(),
        inputs: run.inputs,
        config: json!({ "args": &cli.command, "resolved": run.config }),
        seed: cli.seed,
        artifacts: out_dir.written().to_vec(),
        timestamp_unix: now_unix(),
    };
    record_run(&out_dir.path(""), record)?;
    Ok(())
}

fn load(data: &DataArgs) -> Outcome<Dataset> {
    let ds = load_dataset(&data.matrix, &data.labels).with_context(|| {
        format!("loading {} with {}", data.matrix.display(), data.labels.display())
    })?;
    info!(
        "loaded {} genes x {} samples ({} {}, {} {})",
        ds.n_genes(),
        ds.n_samples(),
        ds.class_counts()[0],
        ds.class_names[0],
        ds.class_counts()[1],
        ds.class_names[1]
    );
    Ok(ds)
}

fn data_inputs(data: &DataArgs) -> Vec<PathBuf> {
    vec![data.matrix.clone(), data.labels.clone()]
}

fn ingest(data: &DataArgs, dir: &mut ArtifactDir) -> Outcome<Run> {
    let ds = load(data)?;
    let [n0, n1] = ds.class_counts();
    let summary = json!({
        "n_genes": ds.n_genes(),
        "n_samples": ds.n_samples(),
        "class_names": ds.class_names,
        "class_counts": [n0, n1],
    });
    dir.write("matrix.tsv", &matrix_to_tsv(&ds.matrix, &ds.gene_ids, &ds.sample_ids))?;
    dir.write("labels.tsv", &ds.labels_to_tsv())?;
    dir.write("dataset_summary.json", &(serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)? + "\n"))?;
    Ok(Run {
        inputs: data_inputs(data),
        config: summary,
    })
}

fn normalize(data: &DataArgs, median: bool, quantile: bool, standardize: bool, dir: &mut ArtifactDir) -> Outcome<Run> {
    let ds = load(data)?;
    let mut m = ds.matrix.clone();
    if quantile {
        m = quantile_normalize(&m, median)?;
    }
    if standardize {
        m = standardize_genes(&m);
    }
    dir.write("normalized_matrix.tsv", &matrix_to_tsv(&m, &ds.gene_ids, &ds.sample_ids))?;
    dir.write("labels.tsv", &ds.labels_to_tsv())?;
    Ok(Run {
        inputs: data_inputs(data),
        config: json!({ "quantile": quantile, "median": median, "standardize": standardize }),
    })
}

fn parse_methods(names: &[String]) -> Outcome<Vec<RankMethod>> {
    let mut out = Vec::new();
    for n in names {
        let batch: Vec<RankMethod> = if n.eq_ignore_ascii_case("all") {
            RankMethod::ALL.to_vec()
        } else {
            vec![n.parse().map_err(usage)?]
        };
        for m in batch {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    Ok(out)
}

fn parse_classifiers(names: &[String]) -> Outcome<Vec<Classifier>> {
    let mut out = Vec::new();
    for n in names {
        let batch: Vec<Classifier> = if n.eq_ignore_ascii_case("all") {
            Classifier::ALL.to_vec()
        } else {
            vec![n.parse().map_err(usage)?]
        };
        for c in batch {
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Fuzzy filter parameters from `--params`, else from `<out>/fgf_params.json`.
/// Only needed when the fuzzy filter is requested without per-fold tuning.
fn resolve_fgf(methods: &[RankMethod], params: Option<&Path>, out: &Path, reoptimize: bool) -> Outcome<Option<(FgfParams, PathBuf)>> {
    if !methods.contains(&RankMethod::Fgf) || (reoptimize && params.is_none()) {
        return Ok(None);
    }
    let path = match params {
        Some(p) => p.to_path_buf(),
        None => {
            let p = out.join(FGF_PARAMS);
            if !p.is_file() {
                return Err(usage(format!(
                    "the fgf method needs fuzzy filter parameters: pass --params <file> or run optimize-fgf to create {}",
                    p.display()
                )));
            }
            p
        }
    };
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading fuzzy filter parameters {}", path.display()))
        .map_err(Failure::Usage)?;
    let p = FgfParams::from_json(&text)
        .with_context(|| format!("parsing fuzzy filter parameters {}", path.display()))
        .map_err(Failure::Usage)?;
    Ok(Some((p, path)))
}

fn ga_config(ga: &GaArgs, seed: u64) -> Outcome<GaConfig> {
    let mut config = match &ga.ga_config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading GA config {}", path.display()))
                .map_err(Failure::Usage)?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing GA config {}", path.display()))
                .map_err(Failure::Usage)?
        }
        None => GaConfig::default(),
    };
    if let Some(p) = ga.population {
        config.population_size = p;
    }
    if let Some(g) = ga.generations {
        config.generations = g;
    }
    if let Some(t) = ga.top_n {
        config.top_n_genes = t;
    }
    config.seed = seed;
    Ok(config)
}

fn rank(data: &DataArgs, methods: &[RankMethod], fgf: Option<(FgfParams, PathBuf)>, dir: &mut ArtifactDir) -> Outcome<Run> {
    let ds = load(data)?;
    let mut inputs = data_inputs(data);
    for &m in methods {
        let ranking = match m {
            RankMethod::Fgf => {
                let (p, _) = fgf.as_ref().expect("resolved before ranking");
                fgf_rank(&ds, p)?
            }
            _ => rank_genes(&ds, m)?,
        };
        dir.write(&format!("ranking_{}.tsv", m.name()), &ranking.to_tsv(&ds.gene_ids))?;
    }
    let params = fgf.map(|(p, path)| {
        inputs.push(path);
        p
    });
    Ok(Run {
        inputs,
        config: json!({ "methods": methods, "fgf_params": params }),
    })
}

fn optimize(data: &DataArgs, config: GaConfig, dir: &mut ArtifactDir) -> Outcome<Run> {
    let ds = load(data)?;
    config.validate(ds.n_genes()).map_err(|e| Failure::Usage(e.into()))?;
    let (params, trace) = optimize_fgf(&ds, &config)?;
    info!(
        "separability index {:.6} after {} generations",
        trace.best_fitness.last().copied().unwrap_or(f64::NAN),
        config.generations
    );
    dir.write(FGF_PARAMS, &(params.to_json() + "\n"))?;
    dir.write("ga_trace.tsv", &trace.to_tsv())?;
    Ok(Run {
        inputs: data_inputs(data),
        config: json!({ "ga": config }),
    })
}

struct EvalPlan {
    methods: Vec<RankMethod>,
    classifiers: Vec<Classifier>,
    k_max: usize,
    scope: RankScope,
    fgf: Option<(FgfParams, PathBuf)>,
    reoptimize: Option<GaConfig>,
    seed: u64,
}

fn evaluate(data: &DataArgs, plan: &EvalPlan, dir: &mut ArtifactDir) -> Outcome<Run> {
    let ds = load(data)?;
    if let Some(ga) = &plan.reoptimize {
        if plan.methods.contains(&RankMethod::Fgf) {
            ga.validate(ds.n_genes()).map_err(|e| Failure::Usage(e.into()))?;
        }
    }
    let mut k_max = plan.k_max;
    if k_max > ds.n_genes() {
        warn!("--k-max {k_max} exceeds the {} genes; using {}", ds.n_genes(), ds.n_genes());
        k_max = ds.n_genes();
    }
    let mut summaries: Vec<SweepSummary> = Vec::new();
    for &m in &plan.methods {
        for &c in &plan.classifiers {
            let mut cfg = EvalConfig::new(m, c);
            cfg.rank_scope = plan.scope;
            cfg.seed = plan.seed;
            if m == RankMethod::Fgf {
                cfg.fgf_params = plan.fgf.as_ref().map(|(p, _)| *p);
                cfg.fgf_reoptimize = plan.reoptimize.clone();
            }
            info!("evaluating {m} with {c} for k = 1..={k_max}");
            let sweep = sweep_gene_counts(&ds, &cfg, k_max)?;
            let stem = format!("sweep_{}_{}", m.name(), c.name());
            dir.write(&format!("{stem}.tsv"), &sweep.to_tsv())?;
            dir.write(
                &format!("{stem}.json"),
                &(serde_json::to_string_pretty(&sweep).map_err(anyhow::Error::from)? + "\n"),
            )?;
            info!("{m} + {c}: best accuracy {:.4} at k = {}", sweep.best_accuracy, sweep.best_k);
            summaries.push(sweep.summary());
        }
    }
    let mut inputs = data_inputs(data);
    if let Some((_, path)) = &plan.fgf {
        inputs.push(path.clone());
    }
    Ok(Run {
        inputs,
        config: json!({
            "k_max": k_max,
            "rank_scope": plan.scope,
            "fgf_params": plan.fgf.as_ref().map(|(p, _)| p),
            "reoptimize": plan.reoptimize,
            "results": summaries,
        }),
    })
}

fn run_dirs(runs: &[PathBuf], out: &Path) -> Vec<PathBuf> {
    if runs.is_empty() {
        vec![out.to_path_buf()]
    } else {
        runs.to_vec()
    }
}

fn load_results(dirs: &[PathBuf]) -> Outcome<Vec<SweepSummary>> {
    let refs: Vec<&Path> = dirs.iter().map(PathBuf::as_path).collect();
    let results = collect_results(&refs)?;
    if results.is_empty() {
        return Err(Failure::Runtime(anyhow!(
            "no sweep_*.json results found in {}",
            dirs.iter().map(|d| d.display().to_string()).collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(results)
}
