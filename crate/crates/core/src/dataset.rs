//! Labeled feature vectors, z-score standardization and the instance metric.
//!
//! Instances are stored row-major in one flat buffer. Categorical attributes
//! are interned per column and stored as their (exact, small integer) token
//! code, so every row is a plain `&[f64]`.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub usize);

impl ClassId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

impl AttributeKind {
    /// Parses a kinds string such as `"nnc"` (one letter per feature column).
    pub fn parse_list(spec: &str) -> Result<Vec<AttributeKind>> {
        spec.chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                'n' | 'N' => Ok(AttributeKind::Numeric),
                'c' | 'C' => Ok(AttributeKind::Categorical),
                other => Err(Error::config(format!(
                    "unknown attribute kind `{other}` (expected n or c)"
                ))),
            })
            .collect()
    }
}

/// Distance between instances: Euclidean over numeric columns, with each
/// categorical mismatch contributing 1 under the same square root.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    categorical: Vec<bool>,
    any_categorical: bool,
}

impl Metric {
    pub fn new(kinds: &[AttributeKind]) -> Self {
        let categorical: Vec<bool> = kinds
            .iter()
            .map(|k| *k == AttributeKind::Categorical)
            .collect();
        let any_categorical = categorical.iter().any(|&c| c);
        Metric {
            categorical,
            any_categorical,
        }
    }

    pub fn numeric(dim: usize) -> Self {
        Metric {
            categorical: vec![false; dim],
            any_categorical: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.categorical.len()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: a.len(),
            });
        }
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        Ok(self.dist(a, b))
    }

    /// Unchecked variant for hot loops; slices must have the metric's dimension.
    #[inline]
    pub(crate) fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        if self.any_categorical {
            let mut sum = 0.0;
            for ((x, y), &cat) in a.iter().zip(b).zip(&self.categorical) {
                if cat {
                    if x != y {
                        sum += 1.0;
                    }
                } else {
                    let d = x - y;
                    sum += d * d;
                }
            }
            sum.sqrt()
        } else {
            a.iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = x - y;
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        }
    }
}

/// Free-function form of [`Metric::distance`].
pub fn distance(a: &[f64], b: &[f64], kinds: &[AttributeKind]) -> Result<f64> {
    Metric::new(kinds).distance(a, b)
}

/// Label and category token tables shared between datasets that must agree
/// on encodings (a training file and its test file).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vocabulary {
    class_names: Vec<String>,
    categories: Vec<Vec<String>>,
}

impl Vocabulary {
    fn class_id(&mut self, name: &str) -> ClassId {
        match self.class_names.iter().position(|n| n == name) {
            Some(i) => ClassId(i),
            None => {
                self.class_names.push(name.to_string());
                ClassId(self.class_names.len() - 1)
            }
        }
    }

    fn category_code(&mut self, column: usize, token: &str) -> f64 {
        if self.categories.len() <= column {
            self.categories.resize(column + 1, Vec::new());
        }
        let tokens = &mut self.categories[column];
        let code = match tokens.iter().position(|t| t == token) {
            Some(i) => i,
            None => {
                tokens.push(token.to_string());
                tokens.len() - 1
            }
        };
        code as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<ClassId>,
    kinds: Vec<AttributeKind>,
    vocab: Vocabulary,
    standardized: bool,
}

impl LabeledDataset {
    /// Builds a numeric dataset. `class_names` fixes the label set; every
    /// label must index into it.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        labels: Vec<ClassId>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let kinds = vec![AttributeKind::Numeric; dim];
        Self::from_parts(rows, labels, class_names, kinds)
    }

    pub fn from_parts(
        rows: Vec<Vec<f64>>,
        labels: Vec<ClassId>,
        class_names: Vec<String>,
        kinds: Vec<AttributeKind>,
    ) -> Result<Self> {
        let dim = kinds.len();
        if rows.len() != labels.len() {
            return Err(Error::config(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut features = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        if let Some(bad) = labels.iter().find(|l| l.0 >= class_names.len()) {
            return Err(Error::config(format!(
                "label {bad} outside the {} declared classes",
                class_names.len()
            )));
        }
        Ok(LabeledDataset {
            features,
            dim,
            labels,
            kinds,
            vocab: Vocabulary {
                class_names,
                categories: Vec::new(),
            },
            standardized: false,
        })
    }

    /// An empty dataset sharing this one's schema and vocabulary.
    pub fn empty_like(&self) -> Self {
        LabeledDataset {
            features: Vec::new(),
            dim: self.dim,
            labels: Vec::new(),
            kinds: self.kinds.clone(),
            vocab: self.vocab.clone(),
            standardized: self.standardized,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn label(&self, i: usize) -> ClassId {
        self.labels[i]
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn kinds(&self) -> &[AttributeKind] {
        &self.kinds
    }

    pub fn metric(&self) -> Metric {
        Metric::new(&self.kinds)
    }

    pub fn class_count(&self) -> usize {
        self.vocab.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.vocab.class_names
    }

    pub fn class_name(&self, class: ClassId) -> &str {
        &self.vocab.class_names[class.0]
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count()];
        for l in &self.labels {
            sizes[l.0] += 1;
        }
        sizes
    }

    pub fn push(&mut self, row: &[f64], label: ClassId) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        if label.0 >= self.class_count() {
            return Err(Error::config(format!("unknown class {label}")));
        }
        self.features.extend_from_slice(row);
        self.labels.push(label);
        Ok(())
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut out = self.empty_like();
        out.features.reserve(indices.len() * self.dim);
        for &i in indices {
            out.features.extend_from_slice(self.row(i));
            out.labels.push(self.labels[i]);
        }
        out
    }

    pub(crate) fn set_standardized(&mut self, flag: bool) {
        self.standardized = flag;
    }

    pub(crate) fn features_mut(&mut self) -> &mut [f64] {
        &mut self.features
    }
}

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Label column index; `None` selects the last column.
    pub label_column: Option<usize>,
    /// One kind per feature column (label column excluded); `None` means all numeric.
    pub kinds: Option<Vec<AttributeKind>>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            label_column: None,
            kinds: None,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<LabeledDataset> {
    load_csv_with(path.as_ref(), opts, Vocabulary::default())
}

/// Loads a file whose labels and category tokens are encoded consistently
/// with `reference` (new tokens are appended).
pub fn load_csv_like(
    path: impl AsRef<Path>,
    opts: &CsvOptions,
    reference: &LabeledDataset,
) -> Result<LabeledDataset> {
    load_csv_with(path.as_ref(), opts, reference.vocab.clone())
}

fn load_csv_with(path: &Path, opts: &CsvOptions, mut vocab: Vocabulary) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut kinds: Option<Vec<AttributeKind>> = opts.kinds.clone();
    let first_row = if opts.has_header { 2 } else { 1 };

    for (n, record) in reader.records().enumerate() {
        let row_no = n + first_row;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            row: row_no,
            message,
        };
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_err(format!("expected {w} fields, found {}", record.len())));
        }
        if w < 2 {
            return Err(parse_err("need at least one feature and a label".into()));
        }
        let label_col = opts.label_column.unwrap_or(w - 1);
        if label_col >= w {
            return Err(parse_err(format!(
                "label column {label_col} outside the {w} fields"
            )));
        }
        let kinds = kinds.get_or_insert_with(|| vec![AttributeKind::Numeric; w - 1]);
        if kinds.len() != w - 1 {
            return Err(parse_err(format!(
                "{} attribute kinds given for {} feature columns",
                kinds.len(),
                w - 1
            )));
        }
        let mut feature = 0;
        for (col, field) in record.iter().enumerate() {
            if col == label_col {
                continue;
            }
            let value = match kinds[feature] {
                AttributeKind::Numeric => field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(
                    || parse_err(format!("column {col}: `{field}` is not a finite number")),
                )?,
                AttributeKind::Categorical => vocab.category_code(feature, field),
            };
            features.push(value);
            feature += 1;
        }
        labels.push(vocab.class_id(&record[label_col]));
    }

    let Some(width) = width else {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    };
    Ok(LabeledDataset {
        features,
        dim: width - 1,
        labels,
        kinds: kinds.unwrap_or_default(),
        vocab,
        standardized: false,
    })
}

/// Writes `ds` as CSV with a header row; the label is the last column.
pub fn write_csv<W: std::io::Write>(ds: &LabeledDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..ds.dim()).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    let io = |e: csv::Error| Error::Format {
        path: "<csv output>".into(),
        message: e.to_string(),
    };
    w.write_record(&header).map_err(io)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = ds
            .row(i)
            .iter()
            .zip(ds.kinds())
            .enumerate()
            .map(|(col, (v, kind))| match kind {
                AttributeKind::Numeric => format!("{v}"),
                AttributeKind::Categorical => ds
                    .vocab
                    .categories
                    .get(col)
                    .and_then(|t| t.get(*v as usize))
                    .cloned()
                    .unwrap_or_else(|| format!("{v}")),
            })
            .collect();
        rec.push(ds.class_name(ds.label(i)).to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv output>".into(),
        source: e,
    })?;
    Ok(())
}

/// Per-column z-score parameters fitted on one dataset and applied to others.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    /// `None` for categorical columns.
    columns: Vec<Option<(f64, f64)>>,
}

impl Standardizer {
    pub fn fit(ds: &LabeledDataset) -> Self {
        let n = ds.len();
        let columns = ds
            .kinds()
            .iter()
            .enumerate()
            .map(|(col, kind)| {
                if *kind == AttributeKind::Categorical {
                    return None;
                }
                let mean = ds.rows().map(|r| r[col]).sum::<f64>() / n.max(1) as f64;
                let var = if n > 1 {
                    ds.rows().map(|r| (r[col] - mean).powi(2)).sum::<f64>() / (n - 1) as f64
                } else {
                    0.0
                };
                Some((mean, var.sqrt()))
            })
            .collect();
        Standardizer { columns }
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for (v, col) in row.iter_mut().zip(&self.columns) {
            if let Some((mean, sd)) = *col {
                // Constant columns carry no information and map to zero.
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
    }

    pub fn transform(&self, ds: &mut LabeledDataset) {
        let dim = ds.dim();
        if dim > 0 {
            for row in ds.features_mut().chunks_mut(dim) {
                self.transform_row(row);
            }
        }
        ds.set_standardized(true);
    }
}

pub fn standardize(mut ds: LabeledDataset) -> LabeledDataset {
    Standardizer::fit(&ds).transform(&mut ds);
    ds
}

/// Indices grouped by class, each group ascending.
pub fn indices_by_class(labels: &[ClassId], class_count: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); class_count];
    for (i, l) in labels.iter().enumerate() {
        groups[l.0].push(i);
    }
    groups
}

pub fn class_names_from<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Vec<String> {
    names.into_iter().map(Into::into).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_numeric_csv() {
        let f = write_tmp("a,b,y\n1,2,red\n3,4,blue\n5,6,red\n");
        let ds = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        assert_eq!(ds.class_names(), &["red".to_string(), "blue".to_string()]);
        assert_eq!(ds.labels(), &[ClassId(0), ClassId(1), ClassId(0)]);
    }

    #[test]
    fn loads_mixed_kinds_with_label_in_front() {
        let f = write_tmp("y,0.5,a\nn,1.5,b\ny,2.5,a\n");
        let opts = CsvOptions {
            has_header: false,
            label_column: Some(0),
            kinds: Some(AttributeKind::parse_list("nc").unwrap()),
        };
        let ds = load_csv(f.path(), &opts).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.kinds(), &[AttributeKind::Numeric, AttributeKind::Categorical]);
        assert_eq!(ds.row(0)[1], ds.row(2)[1]);
        assert_ne!(ds.row(0)[1], ds.row(1)[1]);
    }

    #[test]
    fn wrong_arity_names_the_row() {
        let f = write_tmp("a,b,y\n1,2,red\n3,blue\n");
        let err = load_csv(f.path(), &CsvOptions::default()).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_tmp("a,b,y\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::default()),
            Err(Error::EmptyFile { .. })
        ));
    }

    #[test]
    fn non_numeric_value_is_a_parse_error() {
        let f = write_tmp("1,x,red\n");
        let opts = CsvOptions {
            has_header: false,
            ..Default::default()
        };
        assert!(matches!(load_csv(f.path(), &opts), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn z_score_column() {
        let ds = LabeledDataset::from_rows(
            vec![vec![2.0, 5.0], vec![4.0, 5.0], vec![6.0, 5.0]],
            vec![ClassId(0), ClassId(1), ClassId(0)],
            class_names_from(["a", "b"]),
        )
        .unwrap();
        let ds = standardize(ds);
        let col: Vec<f64> = ds.rows().map(|r| r[0]).collect();
        assert!((col.iter().sum::<f64>()).abs() < 1e-12);
        let var = col.iter().map(|v| v * v).sum::<f64>() / 2.0;
        assert!((var.sqrt() - 1.0).abs() < 1e-12);
        assert!(ds.rows().all(|r| r[1] == 0.0));
        assert!(ds.is_standardized());
    }

    #[test]
    fn standardize_is_idempotent() {
        let rows = vec![vec![1.0, -3.0], vec![2.5, 7.0], vec![-4.0, 0.5], vec![9.0, 2.0]];
        let ds = LabeledDataset::from_rows(
            rows,
            vec![ClassId(0), ClassId(1), ClassId(0), ClassId(1)],
            class_names_from(["a", "b"]),
        )
        .unwrap();
        let once = standardize(ds);
        let twice = standardize(once.clone());
        for (a, b) in once.rows().zip(twice.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn categorical_columns_are_not_standardized() {
        let ds = LabeledDataset::from_parts(
            vec![vec![1.0, 0.0], vec![3.0, 1.0]],
            vec![ClassId(0), ClassId(1)],
            class_names_from(["a", "b"]),
            vec![AttributeKind::Numeric, AttributeKind::Categorical],
        )
        .unwrap();
        let ds = standardize(ds);
        assert_eq!(ds.row(0)[1], 0.0);
        assert_eq!(ds.row(1)[1], 1.0);
    }

    #[test]
    fn distances() {
        let num = [AttributeKind::Numeric; 2];
        assert_eq!(distance(&[1.0, 2.0], &[1.0, 2.0], &num).unwrap(), 0.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], &num).unwrap(), 5.0);
        let cat = [AttributeKind::Categorical; 2];
        // ("a","b") vs ("a","c") as interned codes.
        assert_eq!(distance(&[0.0, 1.0], &[0.0, 2.0], &cat).unwrap(), 1.0);
        assert!(matches!(
            distance(&[0.0], &[0.0, 1.0], &num[..1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mixed_distance_combines_under_one_root() {
        let kinds = [AttributeKind::Numeric, AttributeKind::Categorical];
        let d = distance(&[0.0, 0.0], &[1.0, 1.0], &kinds).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let f = write_tmp("a,b,y\n1.25,-2,red\n3,4e-3,blue\n");
        let ds = load_csv(f.path(), &CsvOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let g = write_tmp(std::str::from_utf8(&buf).unwrap());
        let back = load_csv(g.path(), &CsvOptions::default()).unwrap();
        assert_eq!(ds.features, back.features);
        assert_eq!(ds.labels, back.labels);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (1usize..6).prop_flat_map(|d| {
                (
                    prop::collection::vec(-10.0f64..10.0, d),
                    prop::collection::vec(-10.0f64..10.0, d),
                )
            })
        }

        proptest! {
            #[test]
            fn symmetric_and_zero_iff_equal((a, b) in vec_pair()) {
                let m = Metric::numeric(a.len());
                let ab = m.distance(&a, &b).unwrap();
                prop_assert_eq!(ab, m.distance(&b, &a).unwrap());
                prop_assert_eq!(ab == 0.0, a == b);
                prop_assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
            }

            #[test]
            fn distance_and_reciprocal_similarity_rank_alike(
                q in prop::collection::vec(-5.0f64..5.0, 3),
                pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..20),
            ) {
                let m = Metric::numeric(3);
                let d: Vec<f64> = pts.iter().map(|p| m.distance(&q, p).unwrap()).collect();
                prop_assume!(d.iter().all(|&x| x > 0.0));
                let mut by_dist: Vec<usize> = (0..pts.len()).collect();
                by_dist.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
                let mut by_sim: Vec<usize> = (0..pts.len()).collect();
                by_sim.sort_by(|&i, &j| (1.0 / d[j]).total_cmp(&(1.0 / d[i])).then(i.cmp(&j)));
                prop_assert_eq!(by_dist, by_sim);
            }
        }
    }
}
