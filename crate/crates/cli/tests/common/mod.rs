#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use genefilter_core::synthetic::{planted_dataset, PlantedConfig};

pub const BIN: &str = env!("CARGO_BIN_EXE_genefilter");

/// Small planted dataset written as `matrix.tsv` + `labels.tsv` under `dir`.
pub fn write_dataset(dir: &Path, n_genes: usize, per_class: usize, seed: u64) -> (PathBuf, PathBuf) {
    let p = planted_dataset(&PlantedConfig {
        n_genes,
        n_class0: per_class,
        n_class1: per_class,
        n_planted: 5.min(n_genes),
        shift_sd: 2.0,
        seed,
    })
    .unwrap();
    let (m, l) = (dir.join("matrix.tsv"), dir.join("labels.tsv"));
    p.dataset.save(&m, &l).unwrap();
    (m, l)
}

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Every file in `dir` except the manifest, by name.
pub fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap()))
        .collect()
}

/// The full pipeline on a tiny dataset: every subcommand once.
pub fn pipeline(m: &Path, l: &Path, out: &Path, seed: &str) {
    let (m, l, o) = (m.to_str().unwrap(), l.to_str().unwrap(), out.to_str().unwrap());
    let data = ["--matrix", m, "--labels", l, "--out", o, "--seed", seed];
    let with = |extra: &[&'static str]| -> Vec<&str> {
        let mut v = extra.to_vec();
        v.extend_from_slice(&data);
        v
    };
    run_ok(&with(&["ingest"]));
    run_ok(&with(&["normalize", "--standardize"]));
    run_ok(&with(&["optimize-fgf", "--population", "6", "--generations", "3", "--top-n", "5"]));
    run_ok(&with(&["rank", "--method", "all"]));
    run_ok(&with(&["evaluate", "--method", "all", "--classifier", "knn,nbc", "--k-max", "3"]));
    run_ok(&["compare", "--out", o]);
    run_ok(&["report", "--out", o, "--name", "toy"]);
}
