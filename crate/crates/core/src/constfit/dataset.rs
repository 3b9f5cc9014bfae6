use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Tabular regression data: a row-major feature matrix and a target column.
///
/// Distances are in Å and energies in eV throughout the materials layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    feature_names: Vec<String>,
    target_name: String,
}

impl Dataset {
    pub fn new(
        rows: Vec<Vec<f64>>,
        y: Vec<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} targets",
                rows.len(),
                y.len()
            )));
        }
        if feature_names.is_empty() {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        let width = feature_names.len();
        let mut x = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} features, expected {width}",
                    row.len()
                )));
            }
            x.extend_from_slice(row);
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite entry".into()));
        }
        Ok(Dataset {
            x,
            y,
            feature_names,
            target_name: target_name.into(),
        })
    }

    /// Single-feature dataset.
    pub fn univariate(x: Vec<f64>, y: Vec<f64>, feature: impl Into<String>, target: impl Into<String>) -> Result<Self> {
        let rows = x.into_iter().map(|v| vec![v]).collect();
        Dataset::new(rows, y, vec![feature.into()], target)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_features();
        &self.x[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks(self.n_features())
    }

    /// Values of one feature column.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn max_abs_target(&self) -> f64 {
        self.y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Comma-separated text: header of feature names then the target name,
    /// one sample per row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 {
            return Err(Error::InvalidDataset(
                "header needs at least one feature and a target".into(),
            ));
        }
        let (target, features) = header.split_last().expect("len >= 2");
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::InvalidDataset(format!("row {}: cannot parse `{s}`", i + 1)))
                })
                .collect::<Result<_>>()?;
            if vals.len() != header.len() {
                return Err(Error::InvalidDataset(format!(
                    "row {} has {} fields, expected {}",
                    i + 1,
                    vals.len(),
                    header.len()
                )));
            }
            let (t, f) = vals.split_last().expect("non-empty");
            rows.push(f.to_vec());
            y.push(*t);
        }
        Dataset::new(rows, y, features.to_vec(), target.clone())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Dataset::read_csv(f)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.feature_names.clone();
        header.push(self.target_name.clone());
        w.write_record(&header)?;
        for (row, t) in self.rows().zip(&self.y) {
            let rec: Vec<String> = row.iter().chain(std::iter::once(t)).map(|v| format!("{v:?}")).collect();
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}
