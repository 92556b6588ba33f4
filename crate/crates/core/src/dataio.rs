//! Expression matrix ingestion, normalization and standardization.
//!
//! The canonical on-disk layout is a tab-separated matrix with one header row of
//! sample ids and one gene per line, plus a two-column labels file mapping sample
//! ids to class names.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::{stats, Error, Result, EPS_VAR};

/// Expression matrix (genes x samples) with binary class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub matrix: Array2<f64>,
    pub gene_ids: Vec<String>,
    pub sample_ids: Vec<String>,
    /// Class per sample, 0 or 1.
    pub labels: Vec<u8>,
    /// Names of class 0 and class 1.
    pub class_names: [String; 2],
}

impl Dataset {
    /// Builds a dataset and checks every invariant.
    pub fn new(
        matrix: Array2<f64>,
        gene_ids: Vec<String>,
        sample_ids: Vec<String>,
        labels: Vec<u8>,
        class_names: [String; 2],
    ) -> Result<Self> {
        let ds = Self {
            matrix,
            gene_ids,
            sample_ids,
            labels,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Convenience constructor with generated gene/sample ids and class names "0"/"1".
    pub fn from_matrix(matrix: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        let gene_ids = (0..matrix.nrows()).map(|g| format!("g{g}")).collect();
        let sample_ids = (0..matrix.ncols()).map(|s| format!("s{s}")).collect();
        Self::new(
            matrix,
            gene_ids,
            sample_ids,
            labels,
            ["0".to_string(), "1".to_string()],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = self.matrix.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("empty expression matrix".into()));
        }
        if rows != self.gene_ids.len() {
            return Err(Error::Dimension(format!(
                "{rows} matrix rows but {} gene ids",
                self.gene_ids.len()
            )));
        }
        if cols != self.labels.len() || cols != self.sample_ids.len() {
            return Err(Error::Dimension(format!(
                "{cols} matrix columns but {} labels and {} sample ids",
                self.labels.len(),
                self.sample_ids.len()
            )));
        }
        if let Some(bad) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::Labels(format!("class index {bad} is not 0 or 1")));
        }
        let [n0, n1] = self.class_counts();
        if n0 < 2 || n1 < 2 {
            return Err(Error::Labels(format!(
                "each class needs at least 2 samples (have {n0} and {n1})"
            )));
        }
        if let Some(((g, s), _)) = self.matrix.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gene {} sample {}",
                self.gene_ids[g], self.sample_ids[s]
            )));
        }
        Ok(())
    }

    pub fn n_genes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let n1 = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - n1, n1]
    }

    pub fn gene(&self, g: usize) -> ArrayView1<'_, f64> {
        self.matrix.row(g)
    }

    /// Values of gene `g` split into (class 0, class 1), in sample order.
    pub fn split_gene(&self, g: usize) -> (Vec<f64>, Vec<f64>) {
        let mut c0 = Vec::new();
        let mut c1 = Vec::new();
        for (&v, &l) in self.matrix.row(g).iter().zip(&self.labels) {
            if l == 0 {
                c0.push(v);
            } else {
                c1.push(v);
            }
        }
        (c0, c1)
    }

    /// Dataset restricted to the given sample columns, in the given order.
    ///
    /// Skips validation so that callers can form training folds; use
    /// [`Dataset::validate`] when the subset must be a full dataset.
    pub fn select_samples(&self, samples: &[usize]) -> Dataset {
        Dataset {
            matrix: self.matrix.select(Axis(1), samples),
            gene_ids: self.gene_ids.clone(),
            sample_ids: samples.iter().map(|&s| self.sample_ids[s].clone()).collect(),
            labels: samples.iter().map(|&s| self.labels[s]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Dataset restricted to the given gene rows, in the given order.
    pub fn select_genes(&self, genes: &[usize]) -> Dataset {
        Dataset {
            matrix: self.matrix.select(Axis(0), genes),
            gene_ids: genes.iter().map(|&g| self.gene_ids[g].clone()).collect(),
            sample_ids: self.sample_ids.clone(),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same data with class 0 and class 1 exchanged.
    pub fn swap_classes(&self) -> Dataset {
        let mut out = self.clone();
        out.labels.iter_mut().for_each(|l| *l = 1 - *l);
        out.class_names.swap(0, 1);
        out
    }

    /// Writes the matrix and labels files in the format read by [`load_dataset`].
    pub fn save(&self, matrix_path: &Path, labels_path: &Path) -> Result<()> {
        fs::write(matrix_path, matrix_to_tsv(&self.matrix, &self.gene_ids, &self.sample_ids))?;
        fs::write(labels_path, self.labels_to_tsv())?;
        Ok(())
    }

    /// `sample_id<TAB>class_name` lines in the format read by [`read_labels`].
    pub fn labels_to_tsv(&self) -> String {
        let mut labels = String::new();
        // class-0 sample first so the class order survives the round trip
        let first0 = self.labels.iter().position(|&l| l == 0).unwrap_or(0);
        let mut order: Vec<usize> = vec![first0];
        order.extend((0..self.labels.len()).filter(|&s| s != first0));
        for s in order {
            let _ = writeln!(
                labels,
                "{}\t{}",
                self.sample_ids[s], self.class_names[self.labels[s] as usize]
            );
        }
        labels
    }
}

/// Renders an expression matrix as TSV; values use the shortest exact representation.
pub fn matrix_to_tsv(matrix: &Array2<f64>, gene_ids: &[String], sample_ids: &[String]) -> String {
    let mut out = String::from("gene_id");
    for s in sample_ids {
        out.push('\t');
        out.push_str(s);
    }
    out.push('\n');
    for (g, row) in matrix.outer_iter().enumerate() {
        out.push_str(&gene_ids[g]);
        for v in row {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

/// Raw expression matrix as read from disk, without labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTable {
    pub matrix: Array2<f64>,
    pub gene_ids: Vec<String>,
    pub sample_ids: Vec<String>,
}

pub fn read_matrix(path: &Path) -> Result<ExpressionTable> {
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, 1, "empty matrix file".into()))?;
    let sample_ids: Vec<String> = header.split('\t').skip(1).map(|s| s.trim().to_string()).collect();
    if sample_ids.is_empty() {
        return Err(parse_err(1, 2, "header has no sample columns".into()));
    }
    let mut gene_ids = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let mut fields = line.split('\t');
        let gene = fields.next().unwrap_or_default().trim();
        if gene.is_empty() {
            return Err(parse_err(line_no, 1, "missing gene id".into()));
        }
        let mut count = 0;
        for (j, cell) in fields.enumerate() {
            let column = j + 2;
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(parse_err(line_no, column, format!("blank cell for gene {gene}")));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line_no, column, format!("non-numeric cell {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, column, format!("non-finite cell {cell:?}")));
            }
            values.push(v);
            count += 1;
        }
        if count != sample_ids.len() {
            return Err(Error::Dimension(format!(
                "line {line_no} (gene {gene}) has {count} values, header declares {} samples",
                sample_ids.len()
            )));
        }
        gene_ids.push(gene.to_string());
    }
    if gene_ids.is_empty() {
        return Err(parse_err(2, 1, "matrix has no gene rows".into()));
    }
    let matrix = Array2::from_shape_vec((gene_ids.len(), sample_ids.len()), values)
        .expect("row lengths checked");
    Ok(ExpressionTable {
        matrix,
        gene_ids,
        sample_ids,
    })
}

/// Reads `sample_id<TAB>class_name` lines. Returns the pairs and the class names
/// in order of first appearance.
pub fn read_labels(path: &Path) -> Result<(Vec<(String, String)>, Vec<String>)> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    let mut classes: Vec<String> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t').map(str::trim);
        let (Some(sample), Some(class), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 1,
                message: "expected sample_id<TAB>class_name".into(),
            });
        };
        if !classes.iter().any(|c| c == class) {
            classes.push(class.to_string());
        }
        pairs.push((sample.to_string(), class.to_string()));
    }
    Ok((pairs, classes))
}

/// Loads and validates a dataset. Matrix column order defines sample order;
/// class 1 is the second class name appearing in the labels file.
pub fn load_dataset(matrix_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let table = read_matrix(matrix_path)?;
    let (pairs, classes) = read_labels(labels_path)?;
    if classes.len() > 2 {
        return Err(Error::Labels(format!(
            "more than two classes: {}",
            classes.join(", ")
        )));
    }
    if classes.len() < 2 {
        return Err(Error::Labels("fewer than two classes".into()));
    }
    let mut by_sample: HashMap<&str, u8> = HashMap::new();
    for (sample, class) in &pairs {
        let code = u8::from(class == &classes[1]);
        if by_sample.insert(sample, code).is_some_and(|prev| prev != code) {
            return Err(Error::Labels(format!("sample {sample} has conflicting classes")));
        }
        if !table.sample_ids.iter().any(|s| s == sample) {
            return Err(Error::Labels(format!("unknown sample id {sample}")));
        }
    }
    let labels = table
        .sample_ids
        .iter()
        .map(|s| {
            by_sample
                .get(s.as_str())
                .copied()
                .ok_or_else(|| Error::Labels(format!("no label for sample {s}")))
        })
        .collect::<Result<Vec<u8>>>()?;
    Dataset::new(
        table.matrix,
        table.gene_ids,
        table.sample_ids,
        labels,
        [classes[0].clone(), classes[1].clone()],
    )
}

/// Quantile normalization of the columns of `matrix`.
///
/// The reference distribution is the rank-wise mean (or median, when
/// `use_median` is set) of the sorted columns. Tied values inside a column get
/// the mean of the reference values over their rank span.
pub fn quantile_normalize(matrix: &Array2<f64>, use_median: bool) -> Result<Array2<f64>> {
    let (rows, cols) = matrix.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let sorted_cols: Vec<Vec<f64>> = matrix
        .axis_iter(Axis(1))
        .map(|c| {
            let mut v = c.to_vec();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let reference: Vec<f64> = (0..rows)
        .map(|r| {
            let mut at_rank: Vec<f64> = sorted_cols.iter().map(|c| c[r]).collect();
            if use_median {
                median_in_place(&mut at_rank)
            } else {
                stats::mean(&at_rank)
            }
        })
        .collect();

    let mut out = Array2::zeros((rows, cols));
    for (j, col) in matrix.axis_iter(Axis(1)).enumerate() {
        let mut idx: Vec<usize> = (0..rows).collect();
        idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut start = 0;
        while start < rows {
            let mut end = start + 1;
            while end < rows && col[idx[end]] == col[idx[start]] {
                end += 1;
            }
            let value = if end - start == 1 {
                reference[start]
            } else {
                stats::mean(&reference[start..end])
            };
            for &i in &idx[start..end] {
                out[[i, j]] = value;
            }
            start = end;
        }
    }
    Ok(out)
}

fn median_in_place(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Centers each row to mean 0 and scales it to unit sample standard deviation.
/// Constant rows become all zeros.
pub fn standardize_genes(matrix: &Array2<f64>) -> Array2<f64> {
    let mut out = matrix.clone();
    for mut row in out.outer_iter_mut() {
        let values = row.to_vec();
        let m = stats::mean(&values);
        let constant = values.iter().all(|&v| v == values[0]);
        let var = if constant {
            EPS_VAR
        } else {
            let v = stats::sample_variance(&values);
            if v > 0.0 {
                v
            } else {
                v + EPS_VAR
            }
        };
        let sd = var.sqrt();
        if constant {
            row.fill(0.0);
        } else {
            row.mapv_inplace(|x| (x - m) / sd);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::io::Write;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    const MATRIX: &str = "gene_id\tA\tB\tC\tD\n\
                          g1\t1\t2\t3\t4\n\
                          g2\t5.5\t6\t7\t8\n\
                          g3\t9\t10\t11\t12e0\n";

    #[test]
    fn loads_small_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_tmp(&dir, "m.tsv", MATRIX);
        let l = write_tmp(&dir, "l.tsv", "C\ttumor\nA\tnormal\nB\tnormal\nD\ttumor\n");
        let ds = load_dataset(&m, &l).unwrap();
        assert_eq!(ds.matrix.dim(), (3, 4));
        assert_eq!(ds.class_names, ["tumor".to_string(), "normal".to_string()]);
        // labels follow matrix column order A B C D
        assert_eq!(ds.labels, vec![1, 1, 0, 0]);
        assert_eq!(ds.matrix[[1, 0]], 5.5);
    }

    #[test]
    fn rejects_three_classes() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_tmp(&dir, "m.tsv", MATRIX);
        let l = write_tmp(&dir, "l.tsv", "A\tx\nB\ty\nC\tz\nD\tx\n");
        let err = load_dataset(&m, &l).unwrap_err();
        assert!(err.to_string().contains("more than two classes"), "{err}");
    }

    #[test]
    fn blank_cell_names_position() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_tmp(&dir, "m.tsv", "gene_id\tA\tB\ng1\t1\t\n");
        let err = read_matrix(&m).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn other_load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_tmp(&dir, "m.tsv", MATRIX);
        let unknown = write_tmp(&dir, "l1.tsv", "A\tx\nB\tx\nC\ty\nD\ty\nE\ty\n");
        assert!(matches!(load_dataset(&m, &unknown), Err(Error::Labels(_))));
        let small = write_tmp(&dir, "l2.tsv", "A\tx\nB\ty\nC\ty\nD\ty\n");
        assert!(matches!(load_dataset(&m, &small), Err(Error::Labels(_))));
        let ragged = write_tmp(&dir, "m2.tsv", "gene_id\tA\tB\ng1\t1\t2\t3\n");
        assert!(matches!(read_matrix(&ragged), Err(Error::Dimension(_))));
        let text = write_tmp(&dir, "m3.tsv", "gene_id\tA\ng1\tabc\n");
        assert!(matches!(read_matrix(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn quantile_single_column_unchanged() {
        let m = array![[3.0], [1.0], [2.0], [2.0]];
        assert_eq!(quantile_normalize(&m, false).unwrap(), m);
        assert_eq!(quantile_normalize(&m, true).unwrap(), m);
    }

    #[test]
    fn quantile_median_two_columns() {
        // columns [1,2,3] and [4,5,6]
        let m = array![[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]];
        let q = quantile_normalize(&m, true).unwrap();
        assert_eq!(q, array![[2.5, 2.5], [3.5, 3.5], [4.5, 4.5]]);
    }

    #[test]
    fn quantile_ties_share_reference_mean() {
        let m = array![[1.0, 10.0], [1.0, 20.0], [5.0, 30.0]];
        let q = quantile_normalize(&m, false).unwrap();
        // reference: [5.5, 10.5, 17.5]; the tied pair gets (5.5 + 10.5) / 2
        assert_eq!(q.column(0).to_vec(), vec![8.0, 8.0, 17.5]);
        assert_eq!(q.column(1).to_vec(), vec![5.5, 10.5, 17.5]);
    }

    #[test]
    fn quantile_rejects_empty() {
        assert!(quantile_normalize(&Array2::zeros((0, 3)), false).is_err());
    }

    #[test]
    fn standardize_examples() {
        let m = array![[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]];
        let z = standardize_genes(&m);
        assert_eq!(z.row(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(z.row(1).to_vec(), vec![0.0, 0.0, 0.0]);
        let again = standardize_genes(&z);
        for (a, b) in again.iter().zip(z.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_classes_roundtrip() {
        let ds = Dataset::from_matrix(array![[1.0, 2.0, 3.0, 4.0]], vec![0, 0, 1, 1]).unwrap();
        let sw = ds.swap_classes();
        assert_eq!(sw.labels, vec![1, 1, 0, 0]);
        assert_eq!(sw.swap_classes(), ds);
    }
}
