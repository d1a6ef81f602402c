//! CSV ingestion with one-hot encoding, stratified folds, the synthetic
//! threshold model and accuracy summaries.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbpmt_core::Dataset;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: missing value in column '{column}'")]
    MissingCell { row: usize, column: String },
    #[error("label column '{0}' not found")]
    UnknownLabel(String),
    #[error("column '{0}' required by the model is missing")]
    MissingColumn(String),
    #[error("row {row}: column '{column}' should be numeric, got '{value}'")]
    NotNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: expected {expected} cells, found {found}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown class '{0}'")]
    UnknownClass(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] sbpmt_core::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// How a raw input column maps to model features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    /// One 0/1 feature per level, levels sorted.
    OneHot {
        levels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    fn width(&self) -> usize {
        match &self.kind {
            ColumnKind::Numeric => 1,
            ColumnKind::OneHot { levels } => levels.len(),
        }
    }
}

/// Everything needed to encode new rows the way training rows were.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    /// Raw feature columns in input order.
    pub columns: Vec<Column>,
    pub label: String,
    /// Class names indexed by class id, in order of first appearance.
    pub class_names: Vec<String>,
}

impl Schema {
    pub fn n_features(&self) -> usize {
        self.columns.iter().map(Column::width).sum()
    }

    /// Names of the encoded features, `column=level` for one-hot features.
    pub fn feature_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.n_features());
        for c in &self.columns {
            match &c.kind {
                ColumnKind::Numeric => out.push(c.name.clone()),
                ColumnKind::OneHot { levels } => {
                    out.extend(levels.iter().map(|l| format!("{}={l}", c.name)))
                }
            }
        }
        out
    }

    pub fn class_index(&self, name: &str) -> Result<usize> {
        self.class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| DataError::UnknownClass(name.to_string()))
    }
}

/// Which column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Digits select by zero-based index, `last` the final column,
    /// anything else a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s == "last" {
            LabelColumn::Last
        } else if let Ok(i) = s.parse() {
            LabelColumn::Index(i)
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

#[derive(Debug, Clone)]
pub struct LabeledData {
    pub data: Dataset,
    pub schema: Schema,
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table<R: Read>(reader: R, has_header: bool) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut rows = Vec::new();
    let header = if has_header {
        match records.next() {
            Some(r) => r?.iter().map(str::to_string).collect(),
            None => Vec::new(),
        }
    } else {
        Vec::new()
    };
    for r in records {
        let r = r?;
        if r.len() == 1 && r[0].is_empty() {
            continue;
        }
        rows.push(r.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let width = if has_header {
        header.len()
    } else {
        rows.first().map_or(0, Vec::len)
    };
    let header = if has_header {
        header
    } else {
        (0..width).map(|i| format!("col{i}")).collect()
    };
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(DataError::RowWidth {
                row: i + 1,
                expected: width,
                found: r.len(),
            });
        }
    }
    Ok(RawTable { header, rows })
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_csv(path: &Path, label: &LabelColumn, has_header: bool) -> Result<LabeledData> {
    read_labeled(open(path)?, label, has_header)
}

/// Parses a labeled table. Columns whose cells all parse as finite numbers
/// are numeric; all others are one-hot encoded.
pub fn read_labeled<R: Read>(
    reader: R,
    label: &LabelColumn,
    has_header: bool,
) -> Result<LabeledData> {
    let table = read_table(reader, has_header)?;
    let width = table.header.len();
    let label_idx = match label {
        LabelColumn::Name(n) => table
            .header
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| DataError::UnknownLabel(n.clone()))?,
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => return Err(DataError::UnknownLabel(i.to_string())),
        LabelColumn::Last if width > 0 => width - 1,
        LabelColumn::Last => return Err(DataError::Invalid("file has no columns".into())),
    };
    if table.rows.is_empty() {
        return Err(DataError::Invalid("file has no data rows".into()));
    }
    for (i, r) in table.rows.iter().enumerate() {
        if let Some(j) = r.iter().position(String::is_empty) {
            return Err(DataError::MissingCell {
                row: i + 1,
                column: table.header[j].clone(),
            });
        }
    }

    let mut columns = Vec::new();
    let mut sources = Vec::new();
    for j in (0..width).filter(|&j| j != label_idx) {
        let numeric = table.rows.iter().all(|r| parse_number(&r[j]).is_some());
        let kind = if numeric {
            ColumnKind::Numeric
        } else {
            let mut levels: Vec<String> = table.rows.iter().map(|r| r[j].clone()).collect();
            levels.sort();
            levels.dedup();
            ColumnKind::OneHot { levels }
        };
        columns.push(Column {
            name: table.header[j].clone(),
            kind,
        });
        sources.push(j);
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(table.rows.len());
    for r in &table.rows {
        let name = &r[label_idx];
        let id = match class_names.iter().position(|c| c == name) {
            Some(i) => i,
            None => {
                class_names.push(name.clone());
                class_names.len() - 1
            }
        };
        labels.push(id);
    }
    if class_names.len() < 2 {
        return Err(DataError::Invalid(format!(
            "label column '{}' needs at least two classes",
            table.header[label_idx]
        )));
    }

    let schema = Schema {
        columns,
        label: table.header[label_idx].clone(),
        class_names,
    };
    let features = encode_rows(&schema, &sources, &table.rows)?;
    let data = Dataset::new(
        features,
        schema.n_features().max(1),
        labels,
        schema.class_names.len(),
    )?;
    Ok(LabeledData { data, schema })
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn encode_rows(schema: &Schema, sources: &[usize], rows: &[Vec<String>]) -> Result<Vec<f64>> {
    let p = schema.n_features();
    if p == 0 {
        return Err(DataError::Invalid("no feature columns".into()));
    }
    let lookups: Vec<Option<HashMap<&str, usize>>> = schema
        .columns
        .iter()
        .map(|c| match &c.kind {
            ColumnKind::Numeric => None,
            ColumnKind::OneHot { levels } => Some(
                levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i))
                    .collect(),
            ),
        })
        .collect();
    let mut out = vec![0.0; rows.len() * p];
    let mut unseen = 0usize;
    for (i, r) in rows.iter().enumerate() {
        let row = &mut out[i * p..(i + 1) * p];
        let mut offset = 0;
        for ((col, &src), lookup) in schema.columns.iter().zip(sources).zip(&lookups) {
            let cell = &r[src];
            if cell.is_empty() {
                return Err(DataError::MissingCell {
                    row: i + 1,
                    column: col.name.clone(),
                });
            }
            match lookup {
                None => {
                    row[offset] = parse_number(cell).ok_or_else(|| DataError::NotNumeric {
                        row: i + 1,
                        column: col.name.clone(),
                        value: cell.clone(),
                    })?;
                }
                Some(map) => {
                    match map.get(cell.as_str()) {
                        Some(&level) => row[offset + level] = 1.0,
                        None => {
                            unseen += 1;
                            log::warn!("row {}: unseen level '{cell}' in column '{}', encoded as all zeros", i + 1, col.name);
                        }
                    }
                }
            }
            offset += col.width();
        }
    }
    if unseen > 0 {
        log::warn!("{unseen} cells held categorical levels not seen in training");
    }
    Ok(out)
}

/// Rows to classify, encoded with a training schema.
#[derive(Debug, Clone)]
pub struct FeatureRows {
    /// Row-major, `schema.n_features()` values per row.
    pub features: Vec<f64>,
    pub n_rows: usize,
    /// Class ids when the label column was present and every value known.
    pub labels: Option<Vec<usize>>,
}

impl FeatureRows {
    pub fn row(&self, i: usize, p: usize) -> &[f64] {
        &self.features[i * p..(i + 1) * p]
    }
}

pub fn load_features(path: &Path, schema: &Schema, has_header: bool) -> Result<FeatureRows> {
    read_features(open(path)?, schema, has_header)
}

/// Encodes rows for prediction. With a header, columns are matched by name
/// and the label column is optional; without one, cells follow the
/// training column order, optionally followed by the label.
pub fn read_features<R: Read>(reader: R, schema: &Schema, has_header: bool) -> Result<FeatureRows> {
    let table = read_table(reader, has_header)?;
    let n_raw = schema.columns.len();
    let (sources, label_src) = if has_header {
        let find = |name: &str| table.header.iter().position(|h| h == name);
        let mut sources = Vec::with_capacity(n_raw);
        for c in &schema.columns {
            sources.push(find(&c.name).ok_or_else(|| DataError::MissingColumn(c.name.clone()))?);
        }
        (sources, find(&schema.label))
    } else if table.rows.is_empty() || table.header.len() == n_raw {
        ((0..n_raw).collect(), None)
    } else if table.header.len() == n_raw + 1 {
        ((0..n_raw).collect(), Some(n_raw))
    } else {
        return Err(DataError::RowWidth {
            row: 1,
            expected: n_raw,
            found: table.header.len(),
        });
    };
    let features = if table.rows.is_empty() {
        Vec::new()
    } else {
        encode_rows(schema, &sources, &table.rows)?
    };
    let labels = label_src.and_then(|j| {
        table
            .rows
            .iter()
            .map(|r| schema.class_names.iter().position(|c| *c == r[j]))
            .collect::<Option<Vec<_>>>()
    });
    Ok(FeatureRows {
        features,
        n_rows: table.rows.len(),
        labels,
    })
}

/// Stratified `k`-fold split: each class is shuffled and dealt round-robin
/// to the folds, the deal continuing across classes. Returns
/// `(train, test)` row indices per fold, each sorted.
pub fn stratified_kfold(
    labels: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 || k > labels.len() {
        return Err(DataError::Invalid(format!(
            "fold count {k} must lie in [2, {}]",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut next = 0usize;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| fold_of[i] == f);
            (train, test)
        })
        .collect())
}

/// Synthetic threshold model: `X ~ U[0,1]^d` and
/// `P(Y=1|x) = q + (1-2q)·1{x_1+…+x_E > E/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dim: usize,
    pub effective_dim: usize,
    pub bayes_error: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dim: 10,
            effective_dim: 5,
            bayes_error: 0.1,
            n_train: 2000,
            n_test: 10000,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// `P(Y=1|x)`.
    pub fn positive_probability(&self, x: &[f64]) -> f64 {
        let s: f64 = x[..self.effective_dim].iter().sum();
        let q = self.bayes_error;
        if s > self.effective_dim as f64 / 2.0 {
            1.0 - q
        } else {
            q
        }
    }

    /// Bayes rule `1{x_1+…+x_E > E/2}`.
    pub fn bayes_class(&self, x: &[f64]) -> usize {
        usize::from(x[..self.effective_dim].iter().sum::<f64>() > self.effective_dim as f64 / 2.0)
    }
}

/// Draws the training and test sets; class 1 stands for `Y = +1`.
pub fn simulate(cfg: &SimConfig) -> Result<(Dataset, Dataset)> {
    if cfg.dim == 0 || cfg.effective_dim == 0 || cfg.effective_dim > cfg.dim {
        return Err(DataError::Invalid("need 1 <= E <= d".into()));
    }
    if !(0.0..0.5).contains(&cfg.bayes_error) {
        return Err(DataError::Invalid("q must lie in [0, 0.5)".into()));
    }
    if cfg.n_train == 0 || cfg.n_test == 0 {
        return Err(DataError::Invalid("sample sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = |n: usize| -> Result<Dataset> {
        let mut x = vec![0.0; n * cfg.dim];
        let mut y = Vec::with_capacity(n);
        for row in x.chunks_mut(cfg.dim) {
            row.iter_mut().for_each(|v| *v = rng.gen::<f64>());
            y.push(usize::from(
                rng.gen::<f64>() < cfg.positive_probability(row),
            ));
        }
        Ok(Dataset::new(x, cfg.dim, y, 2)?)
    };
    let train = draw(cfg.n_train)?;
    let test = draw(cfg.n_test)?;
    Ok((train, test))
}

/// Percentage of matching entries.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(DataError::Invalid("no predictions".into()));
    }
    if predictions.len() != labels.len() {
        return Err(DataError::Invalid(
            "prediction and label counts differ".into(),
        ));
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(a, b)| a == b)
        .count();
    Ok(100.0 * hits as f64 / predictions.len() as f64)
}

/// Mean and sample standard deviation (divisor `k-1`).
pub fn summarize_cv(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(DataError::Invalid("no fold results".into()));
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)).sqrt()
    };
    Ok((mean, sd))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(text: &str) -> Result<LabeledData> {
        read_labeled(text.as_bytes(), &LabelColumn::Name("y".into()), true)
    }

    #[test]
    fn numeric_file() {
        let d = labeled("a,b,y\n1,2,no\n3,4.5,yes\n-1,0,no\n").unwrap();
        assert_eq!(d.data.n_rows(), 3);
        assert_eq!(d.data.n_features(), 2);
        assert_eq!(d.data.row(1), &[3.0, 4.5]);
        assert_eq!(d.schema.class_names, vec!["no", "yes"]);
        assert_eq!(d.data.labels(), &[0, 1, 0]);
    }

    #[test]
    fn categorical_columns_are_one_hot() {
        let d = labeled("c,x,y\nb,1,p\na,2,q\nb,3,p\n").unwrap();
        assert_eq!(d.schema.feature_names(), vec!["c=a", "c=b", "x"]);
        assert_eq!(d.data.row(0), &[0.0, 1.0, 1.0]);
        assert_eq!(d.data.row(1), &[1.0, 0.0, 2.0]);
        for i in 0..3 {
            assert_eq!(d.data.row(i)[..2].iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn label_by_index_and_last() {
        let text = "1,2,a\n3,4,b\n";
        let by_idx = read_labeled(text.as_bytes(), &LabelColumn::Index(2), false).unwrap();
        let last = read_labeled(text.as_bytes(), &LabelColumn::Last, false).unwrap();
        assert_eq!(by_idx.data, last.data);
        assert_eq!("2".parse::<LabelColumn>().unwrap(), LabelColumn::Index(2));
        assert_eq!("last".parse::<LabelColumn>().unwrap(), LabelColumn::Last);
        assert_eq!(
            "y".parse::<LabelColumn>().unwrap(),
            LabelColumn::Name("y".into())
        );
    }

    #[test]
    fn ingestion_errors() {
        match labeled("a,b,y\n1,,p\n2,3,q\n") {
            Err(DataError::MissingCell { row: 1, column }) => assert_eq!(column, "b"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            labeled("a,z\n1,p\n"),
            Err(DataError::UnknownLabel(_))
        ));
        assert!(matches!(
            labeled("a,y\n1,p\n2,p\n"),
            Err(DataError::Invalid(_))
        ));
        assert!(matches!(
            labeled("a,y\n1,p\n2,3,q\n"),
            Err(DataError::RowWidth { .. })
        ));
    }

    #[test]
    fn prediction_rows_follow_schema() {
        let d = labeled("c,x,y\nb,1,p\na,2,q\n").unwrap();
        let rows = read_features("x,c\n5,a\n6,zz\n".as_bytes(), &d.schema, true).unwrap();
        assert_eq!(rows.n_rows, 2);
        assert_eq!(rows.row(0, 3), &[1.0, 0.0, 5.0]);
        assert_eq!(rows.row(1, 3), &[0.0, 0.0, 6.0]);
        assert!(rows.labels.is_none());
        let with_label = read_features("c,x,y\na,1,q\n".as_bytes(), &d.schema, true).unwrap();
        assert_eq!(with_label.labels, Some(vec![1]));
        match read_features("c\na\n".as_bytes(), &d.schema, true) {
            Err(DataError::MissingColumn(c)) => assert_eq!(c, "x"),
            other => panic!("{other:?}"),
        }
        let empty = read_features("c,x\n".as_bytes(), &d.schema, true).unwrap();
        assert_eq!(empty.n_rows, 0);
        let positional = read_features("b,4,p\n".as_bytes(), &d.schema, false).unwrap();
        assert_eq!(positional.row(0, 3), &[0.0, 1.0, 4.0]);
        assert_eq!(positional.labels, Some(vec![0]));
    }

    #[test]
    fn balanced_folds() {
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let folds = stratified_kfold(&labels, 2, 5, 3).unwrap();
        for (train, test) in &folds {
            assert_eq!(test.len(), 2);
            assert_eq!(test.iter().filter(|&&i| labels[i] == 0).count(), 1);
            assert_eq!(train.len(), 8);
        }
        assert_eq!(folds, stratified_kfold(&labels, 2, 5, 3).unwrap());
        assert!(stratified_kfold(&labels, 2, 1, 0).is_err());
        assert!(stratified_kfold(&labels, 2, 11, 0).is_err());
    }

    #[test]
    fn folds_partition_and_stratify() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..50 {
            let n = rng.gen_range(10..200);
            let j = rng.gen_range(2..5);
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..j)).collect();
            let k = rng.gen_range(2..11);
            let folds = stratified_kfold(&labels, j, k, trial).unwrap();
            let mut seen = vec![0; n];
            for (train, test) in &folds {
                assert_eq!(train.len() + test.len(), n);
                test.iter().for_each(|&i| seen[i] += 1);
                for c in 0..j {
                    let total = labels.iter().filter(|&&l| l == c).count() as f64;
                    let here = test.iter().filter(|&&i| labels[i] == c).count() as f64;
                    assert!((here - total / k as f64).abs() <= 1.0);
                }
            }
            assert!(seen.iter().all(|&s| s == 1));
        }
    }

    #[test]
    fn simulation_probabilities() {
        let mut cfg = SimConfig {
            bayes_error: 0.0,
            ..SimConfig::default()
        };
        let x = [0.6, 0.6, 0.6, 0.6, 0.6, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(cfg.positive_probability(&x), 1.0);
        cfg.bayes_error = 0.1;
        assert_eq!(cfg.positive_probability(&x), 0.9);
        assert_eq!(cfg.positive_probability(&[0.1; 10]), 0.1);
    }

    #[test]
    fn simulated_bayes_error_is_q() {
        let cfg = SimConfig::default();
        let (train, test) = simulate(&cfg).unwrap();
        assert_eq!(
            (train.n_rows(), test.n_rows(), test.n_features()),
            (2000, 10000, 10)
        );
        let mut counts = [[0usize; 2]; 2];
        for i in 0..test.n_rows() {
            counts[cfg.bayes_class(test.row(i))][test.label(i)] += 1;
        }
        let n = test.n_rows() as f64;
        let wrong = (counts[0][1] + counts[1][0]) as f64 / n;
        let sd = (0.1 * 0.9 / n).sqrt();
        assert!((wrong - 0.1).abs() <= 3.0 * sd, "{wrong}");
        for (region, c) in counts.iter().enumerate() {
            let total = (c[0] + c[1]) as f64;
            let p1 = c[1] as f64 / total;
            let want = if region == 1 { 0.9 } else { 0.1 };
            assert!((p1 - want).abs() <= 3.0 * (0.09 / total).sqrt());
        }
        assert_eq!(simulate(&cfg).unwrap().0, train);
        assert!(simulate(&SimConfig {
            effective_dim: 11,
            ..cfg
        })
        .is_err());
    }

    #[test]
    fn accuracy_and_summary() {
        assert_eq!(accuracy(&[1, 0, 2], &[1, 0, 2]).unwrap(), 100.0);
        assert!(accuracy(&[], &[]).is_err());
        let (mean, sd) = summarize_cv(&[90.0, 100.0]).unwrap();
        assert_eq!(mean, 95.0);
        assert!((sd - 7.0710678118654755).abs() < 1e-12);
    }
}
