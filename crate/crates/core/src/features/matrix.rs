use serde::{Deserialize, Serialize};

use super::{FeatureGroup, FeatureSpec};
use crate::error::{Error, Result};
use crate::evaluation::median;

const SCHEMA_FORMAT: &str = "fulfillkit.feature_schema";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    format: String,
    version: u32,
    transformed: bool,
    features: Vec<FeatureSpec>,
}

/// Row-major projects × features table. Missing values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub schema: FeatureSchema,
    values: Vec<f64>,
    /// Set once [`log1p_matrix`] has been applied.
    pub transformed: bool,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, schema: FeatureSchema, values: Vec<f64>) -> Result<Self> {
        if values.len() != ids.len() * schema.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * schema.len(),
                actual: values.len(),
            });
        }
        Ok(FeatureMatrix {
            ids,
            schema,
            values,
            transformed: false,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(self.n_rows() * cols.len());
        for i in 0..self.n_rows() {
            values.extend(cols.iter().map(|&j| self.get(i, j)));
        }
        FeatureMatrix {
            ids: self.ids.clone(),
            schema: FeatureSchema {
                features: cols.iter().map(|&j| self.schema.features[j].clone()).collect(),
            },
            values,
            transformed: self.transformed,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols());
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            schema: self.schema.clone(),
            values,
            transformed: self.transformed,
        }
    }

    /// Columns by name, failing on the first unknown one.
    pub fn select_named(&self, names: &[String]) -> Result<FeatureMatrix> {
        let cols = names
            .iter()
            .map(|n| {
                self.schema
                    .index_of(n)
                    .ok_or_else(|| Error::SchemaMismatch(format!("feature `{n}` is not in the matrix")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&cols))
    }

    /// Every column not in `group`.
    pub fn without_group(&self, group: FeatureGroup) -> FeatureMatrix {
        let keep: Vec<usize> = (0..self.n_cols()).filter(|&j| self.schema.features[j].group != group).collect();
        self.select_columns(&keep)
    }

    /// Median of the finite values in each column; 0 for all-missing columns.
    pub fn column_medians(&self) -> Vec<f64> {
        (0..self.n_cols()).map(|j| median(&self.column(j)).unwrap_or(0.0)).collect()
    }

    /// Replaces NaN in column `j` by `fill[j]`.
    pub fn fill_missing(&mut self, fill: &[f64]) {
        let p = self.n_cols();
        for (k, v) in self.values.iter_mut().enumerate() {
            if v.is_nan() {
                *v = fill[k % p];
            }
        }
    }

    /// Comma-separated table with an `id` column; missing values are empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        let mut header = vec!["id"];
        header.extend(self.schema.names());
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![self.ids[i].clone()];
            rec.extend(self.row(i).iter().map(|x| if x.is_nan() { String::new() } else { x.to_string() }));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn schema_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SchemaFile {
            format: SCHEMA_FORMAT.into(),
            version: 1,
            transformed: self.transformed,
            features: self.schema.features.clone(),
        })?)
    }

    /// Reads a table written by [`Self::to_csv`] and its sidecar schema.
    /// Lines starting with `#` are skipped. The header must match the schema.
    pub fn from_csv(csv_text: &str, schema_json: &str) -> Result<FeatureMatrix> {
        let file: SchemaFile = serde_json::from_str(strip_comments(schema_json).as_str())?;
        if file.format != SCHEMA_FORMAT || file.version != 1 {
            return Err(Error::SchemaMismatch(format!(
                "unsupported schema `{}` version {}",
                file.format, file.version
            )));
        }
        let schema = FeatureSchema { features: file.features };
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(csv_text.as_bytes());
        let malformed = |line: usize, message: String| Error::Malformed {
            path: "<features>".into(),
            line,
            field: "features".into(),
            message,
        };
        let header = r.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
        let mut expect = vec!["id"];
        expect.extend(schema.names());
        if header.iter().collect::<Vec<_>>() != expect {
            return Err(Error::SchemaMismatch("csv header does not match the schema".into()));
        }
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| malformed(k + 2, e.to_string()))?;
            ids.push(rec[0].to_string());
            for cell in rec.iter().skip(1) {
                values.push(if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.parse().map_err(|_| malformed(k + 2, format!("non-numeric value `{cell}`")))?
                });
            }
        }
        let mut m = FeatureMatrix::new(ids, schema, values)?;
        m.transformed = file.transformed;
        Ok(m)
    }
}

fn strip_comments(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

/// `log(1 + x)` on every column flagged for it. NaN stays NaN; a negative
/// value or an already-transformed matrix is an error.
pub fn log1p_matrix(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if m.transformed {
        return Err(Error::InvalidInput("feature matrix is already log-transformed".into()));
    }
    let mut out = m.clone();
    let p = m.n_cols();
    for (k, v) in out.values.iter_mut().enumerate() {
        let spec = &m.schema.features[k % p];
        if !spec.log_transform || v.is_nan() {
            continue;
        }
        if *v < 0.0 {
            return Err(Error::InvalidInput(format!(
                "negative value {} in log-transformed feature `{}` (row `{}`)",
                v,
                spec.name,
                m.ids[k / p]
            )));
        }
        *v = v.ln_1p();
    }
    out.transformed = true;
    Ok(out)
}
