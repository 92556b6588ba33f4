//! Tables and plot data built from completed sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use genefilter_core::crossval::{anova_oneway, SweepSummary};
use genefilter_core::{AnovaResult, Classifier, RankMethod};
use serde::Serialize;

use crate::output::ArtifactDir;

/// `"96.1% (9)"`: accuracy in percent with one decimal, best gene count in parentheses.
pub fn format_cell(accuracy: f64, best_k: usize) -> String {
    format!("{:.1}% ({best_k})", accuracy * 100.0)
}

/// Reads every `sweep_<method>_<classifier>.json` in the given directories,
/// sorted by method then classifier. A pair seen twice keeps its first result.
pub fn collect_results(dirs: &[&Path]) -> Result<Vec<SweepSummary>> {
    let mut found: BTreeMap<(RankMethod, Classifier), SweepSummary> = BTreeMap::new();
    for dir in dirs {
        let mut names: Vec<String> = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok()?.file_name().into_string().ok())
            .filter(|n| n.starts_with("sweep_") && n.ends_with(".json"))
            .collect();
        names.sort();
        for name in names {
            let path = dir.join(&name);
            let text = fs::read_to_string(&path)?;
            let s: SweepSummary =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if found.contains_key(&(s.method, s.classifier)) {
                log::warn!("ignoring duplicate result {}", path.display());
                continue;
            }
            found.insert((s.method, s.classifier), s);
        }
    }
    Ok(found.into_values().collect())
}

/// Rows are classifiers and columns ranking methods; the corner holds `name`.
pub fn summary_tsv(name: &str, results: &[SweepSummary]) -> String {
    let methods: Vec<RankMethod> = RankMethod::ALL
        .into_iter()
        .filter(|m| results.iter().any(|r| r.method == *m))
        .collect();
    let classifiers: Vec<Classifier> = Classifier::ALL
        .into_iter()
        .filter(|c| results.iter().any(|r| r.classifier == *c))
        .collect();
    let mut out = String::from(name);
    for m in &methods {
        let _ = write!(out, "\t{}", m.display_name());
    }
    out.push('\n');
    for c in &classifiers {
        out.push_str(c.display_name());
        for m in &methods {
            let cell = results
                .iter()
                .find(|r| r.method == *m && r.classifier == *c)
                .map_or_else(|| "-".to_string(), |r| format_cell(r.best_accuracy, r.best_k));
            let _ = write!(out, "\t{cell}");
        }
        out.push('\n');
    }
    out
}

/// Long format, one row per result, for box plots of accuracy by method.
pub fn boxplot_tsv(results: &[SweepSummary]) -> String {
    let mut out = String::from("method\tclassifier\taccuracy\n");
    for r in results {
        let _ = writeln!(out, "{}\t{}\t{}", r.method, r.classifier, r.best_accuracy);
    }
    out
}

#[derive(Debug, Serialize)]
pub struct AnovaReport {
    /// Best accuracies per method, in the order entered into the test.
    pub groups: BTreeMap<String, Vec<f64>>,
    #[serde(flatten)]
    pub result: Option<AnovaResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// ANOVA over methods, each group holding the best accuracy of every classifier.
pub fn anova_report(results: &[SweepSummary]) -> AnovaReport {
    let mut groups = BTreeMap::new();
    let mut ordered = Vec::new();
    for m in RankMethod::ALL {
        let g: Vec<f64> = results.iter().filter(|r| r.method == m).map(|r| r.best_accuracy).collect();
        if !g.is_empty() {
            groups.insert(m.name().to_string(), g.clone());
            ordered.push(g);
        }
    }
    match anova_oneway(&ordered) {
        Ok(r) => AnovaReport {
            groups,
            result: Some(r),
            error: None,
        },
        Err(e) => AnovaReport {
            groups,
            result: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn anova_json(results: &[SweepSummary]) -> Result<String> {
    Ok(serde_json::to_string_pretty(&anova_report(results))? + "\n")
}

/// Writes `summary.tsv`, `boxplot_data.tsv` and `anova.json`.
pub fn emit_report(name: &str, results: &[SweepSummary], out: &mut ArtifactDir) -> Result<()> {
    if results.is_empty() {
        bail!("no sweep results to report");
    }
    out.write("summary.tsv", &summary_tsv(name, results))?;
    out.write("boxplot_data.tsv", &boxplot_tsv(results))?;
    out.write("anova.json", &anova_json(results)?)?;
    Ok(())
}
