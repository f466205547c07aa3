//! Typed data tables with an explicit per-cell observedness mask, CSV
//! ingestion and emission, MCAR injection, and locally-complete subset
//! extraction.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::NodeType;

/// Missing-value token used by the CSV format unless overridden.
pub const DEFAULT_NA_TOKEN: &str = "NA";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected column {expected:?}, found {found:?}")]
    HeaderMismatch { expected: String, found: String },
    #[error("row {row}: unknown level {value:?} in column {column}")]
    UnknownLevel { row: usize, column: String, value: String },
    #[error("row {row}: cannot parse {value:?} as a real in column {column}")]
    BadReal { row: usize, column: String, value: String },
    #[error("row {row} has {found} fields, expected {expected}")]
    BadRowWidth { row: usize, expected: usize, found: usize },
    #[error("missingness probability {0} is outside [0, 1]")]
    BetaOutOfRange(f64),
    #[error("operation requires fully observed data")]
    NotFullyObserved,
    #[error("column shapes are not congruent")]
    ShapeMismatch,
}

/// One cell value; discrete cells hold a level index into the column's
/// declared level list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Discrete(u32),
    Real(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Discrete(Vec<u32>),
    Real(Vec<f64>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Discrete(v) => v.len(),
            ColumnData::Real(v) => v.len(),
        }
    }

    fn value(&self, row: usize) -> Value {
        match self {
            ColumnData::Discrete(v) => Value::Discrete(v[row]),
            ColumnData::Real(v) => Value::Real(v[row]),
        }
    }
}

/// Column names and types shared between datasets and networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub names: Vec<String>,
    pub types: Vec<NodeType>,
}

impl Schema {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Column-typed table with a per-cell observedness mask. Immutable once
/// built; all extraction operations are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<ColumnData>,
    observed: Vec<Vec<bool>>,
    n_rows: usize,
}

impl Dataset {
    pub fn from_parts(
        schema: Schema,
        columns: Vec<ColumnData>,
        observed: Vec<Vec<bool>>,
    ) -> Result<Self, DataError> {
        if columns.len() != schema.names.len() || observed.len() != columns.len() {
            return Err(DataError::ShapeMismatch);
        }
        let n_rows = columns.first().map_or(0, ColumnData::len);
        for (col, mask) in columns.iter().zip(&observed) {
            if col.len() != n_rows || mask.len() != n_rows {
                return Err(DataError::ShapeMismatch);
            }
        }
        Ok(Dataset { schema, columns, observed, n_rows })
    }

    /// Fully observed dataset with placeholder values, for row-wise builders.
    pub(crate) fn zeroed(schema: Schema, n_rows: usize) -> Self {
        let columns = schema
            .types
            .iter()
            .map(|t| match t {
                NodeType::Discrete { .. } => ColumnData::Discrete(vec![0; n_rows]),
                NodeType::Gaussian => ColumnData::Real(vec![0.0; n_rows]),
            })
            .collect();
        let observed = vec![vec![true; n_rows]; schema.names.len()];
        Dataset { schema, columns, observed, n_rows }
    }

    pub(crate) fn set(&mut self, col: usize, row: usize, value: Value) {
        match (&mut self.columns[col], value) {
            (ColumnData::Discrete(v), Value::Discrete(x)) => v[row] = x,
            (ColumnData::Real(v), Value::Real(x)) => v[row] = x,
            _ => panic!("cell type mismatch at column {col}"),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn names(&self) -> &[String] {
        &self.schema.names
    }

    pub fn types(&self) -> &[NodeType] {
        &self.schema.types
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.names.len()
    }

    pub fn column(&self, col: usize) -> &ColumnData {
        &self.columns[col]
    }

    pub fn is_observed(&self, col: usize, row: usize) -> bool {
        self.observed[col][row]
    }

    /// Observed value of a cell, `None` when masked out.
    pub fn value(&self, col: usize, row: usize) -> Option<Value> {
        if self.observed[col][row] {
            Some(self.columns[col].value(row))
        } else {
            None
        }
    }

    pub fn is_fully_observed(&self) -> bool {
        self.observed.iter().all(|m| m.iter().all(|&o| o))
    }

    pub fn missing_fraction(&self) -> f64 {
        let cells = self.n_rows * self.n_cols();
        if cells == 0 {
            return 0.0;
        }
        let missing: usize = self
            .observed
            .iter()
            .map(|m| m.iter().filter(|&&o| !o).count())
            .sum();
        missing as f64 / cells as f64
    }

    /// Indices of the rows where `node` and every listed parent are
    /// observed; missingness in other columns is ignored.
    pub fn locally_complete_rows(&self, node: usize, parents: &[usize]) -> Vec<usize> {
        (0..self.n_rows)
            .filter(|&r| {
                self.observed[node][r] && parents.iter().all(|&p| self.observed[p][r])
            })
            .collect()
    }

    /// The observed assignments of one row, as `(column, value)` evidence.
    pub fn row_evidence(&self, row: usize) -> Vec<(usize, Value)> {
        (0..self.n_cols())
            .filter_map(|c| self.value(c, row).map(|v| (c, v)))
            .collect()
    }

    /// Masks each cell independently with probability `beta`. The input
    /// must be fully observed; the result is reproducible bit-for-bit for
    /// a given seed (cells visited row-major).
    pub fn inject_mcar(&self, beta: f64, seed: u64) -> Result<Dataset, DataError> {
        if !(0.0..=1.0).contains(&beta) || beta.is_nan() {
            return Err(DataError::BetaOutOfRange(beta));
        }
        if !self.is_fully_observed() {
            return Err(DataError::NotFullyObserved);
        }
        let mut out = self.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for row in 0..self.n_rows {
            for col in 0..self.n_cols() {
                if rng.random::<f64>() < beta {
                    out.observed[col][row] = false;
                }
            }
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        self.write_csv_with(path, DEFAULT_NA_TOKEN)
    }

    pub fn write_csv_with(&self, path: impl AsRef<Path>, na_token: &str) -> Result<(), DataError> {
        let mut file = File::create(path)?;
        let text = self.to_csv_string(na_token);
        file.write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn to_csv_string(&self, na_token: &str) -> String {
        let mut out = String::new();
        out.push_str(&self.schema.names.join(","));
        out.push('\n');
        for row in 0..self.n_rows {
            let mut fields = Vec::with_capacity(self.n_cols());
            for col in 0..self.n_cols() {
                match self.value(col, row) {
                    None => fields.push(na_token.to_string()),
                    Some(Value::Discrete(level)) => match &self.schema.types[col] {
                        NodeType::Discrete { levels } => {
                            fields.push(levels[level as usize].clone())
                        }
                        NodeType::Gaussian => unreachable!("discrete cell in gaussian column"),
                    },
                    Some(Value::Real(x)) => fields.push(format!("{x}")),
                }
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn read_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset, DataError> {
    read_csv_with(path, schema, DEFAULT_NA_TOKEN)
}

pub fn read_csv_with(
    path: impl AsRef<Path>,
    schema: &Schema,
    na_token: &str,
) -> Result<Dataset, DataError> {
    let file = File::open(path)?;
    read_csv_reader(file, schema, na_token)
}

pub fn read_csv_reader(
    reader: impl Read,
    schema: &Schema,
    na_token: &str,
) -> Result<Dataset, DataError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    if headers.len() != schema.names.len() {
        return Err(DataError::HeaderMismatch {
            expected: schema.names.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    for (expected, found) in schema.names.iter().zip(headers.iter()) {
        if expected != found {
            return Err(DataError::HeaderMismatch {
                expected: expected.clone(),
                found: found.to_string(),
            });
        }
    }

    let n_cols = schema.names.len();
    let mut columns: Vec<ColumnData> = schema
        .types
        .iter()
        .map(|t| match t {
            NodeType::Discrete { .. } => ColumnData::Discrete(Vec::new()),
            NodeType::Gaussian => ColumnData::Real(Vec::new()),
        })
        .collect();
    let mut observed: Vec<Vec<bool>> = vec![Vec::new(); n_cols];

    for (row_idx, record) in csv_reader.records().enumerate() {
        let record = record?;
        if record.len() != n_cols {
            return Err(DataError::BadRowWidth {
                row: row_idx,
                expected: n_cols,
                found: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let missing = field == na_token;
            observed[col].push(!missing);
            match (&mut columns[col], &schema.types[col]) {
                (ColumnData::Discrete(v), NodeType::Discrete { levels }) => {
                    if missing {
                        v.push(0);
                    } else {
                        let idx = levels.iter().position(|l| l == field).ok_or_else(|| {
                            DataError::UnknownLevel {
                                row: row_idx,
                                column: schema.names[col].clone(),
                                value: field.to_string(),
                            }
                        })?;
                        v.push(idx as u32);
                    }
                }
                (ColumnData::Real(v), NodeType::Gaussian) => {
                    if missing {
                        v.push(0.0);
                    } else {
                        let x: f64 = field.parse().map_err(|_| DataError::BadReal {
                            row: row_idx,
                            column: schema.names[col].clone(),
                            value: field.to_string(),
                        })?;
                        v.push(x);
                    }
                }
                _ => unreachable!("column type desynchronized from schema"),
            }
        }
    }

    Dataset::from_parts(schema.clone(), columns, observed)
}
