use serde::{Deserialize, Serialize};

use super::{validate_metric, FiniteMetricSpace, Metric};
use crate::error::{Error, Result};

/// JSON matrix form: `n`, the condensed upper triangle (row-major over
/// `i < j`) and optional labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub d: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl MatrixJson {
    pub fn from_space(m: &FiniteMetricSpace) -> Self {
        MatrixJson {
            n: m.len(),
            d: m.upper_triangle(),
            labels: m.labels().map(|l| l.to_vec()).unwrap_or_default(),
        }
    }

    pub fn into_space(self) -> Result<FiniteMetricSpace> {
        self.into_space_with(None)
    }

    /// As [`MatrixJson::into_space`], with an explicit triangle tolerance.
    pub fn into_space_with(self, tolerance: Option<f64>) -> Result<FiniteMetricSpace> {
        let n = self.n;
        let expected = n * n.saturating_sub(1) / 2;
        if self.d.len() != expected {
            return Err(Error::Parse(format!(
                "upper triangle of {n} points needs {expected} entries, got {}",
                self.d.len()
            )));
        }
        let mut rows = vec![vec![0.0; n]; n];
        let mut it = self.d.into_iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = it.next().expect("length checked");
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let space = validate_metric(&rows, tolerance)?;
        if self.labels.is_empty() {
            Ok(space)
        } else {
            space.with_labels(self.labels)
        }
    }
}

pub fn matrix_from_json(text: &str) -> Result<FiniteMetricSpace> {
    serde_json::from_str::<MatrixJson>(text)?.into_space()
}

/// JSON when the text starts with `{`, CSV otherwise.
pub fn parse_matrix(text: &str, tolerance: Option<f64>) -> Result<FiniteMetricSpace> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str::<MatrixJson>(text)?.into_space_with(tolerance)
    } else {
        matrix_from_csv_with(text, tolerance)
    }
}

pub fn matrix_to_json(m: &FiniteMetricSpace) -> String {
    serde_json::to_string(&MatrixJson::from_space(m)).expect("matrix serializes")
}

/// Parses a row-major CSV matrix. A first row that does not parse as numbers
/// is taken as a header of point labels.
pub fn matrix_from_csv(text: &str) -> Result<FiniteMetricSpace> {
    matrix_from_csv_with(text, None)
}

pub fn matrix_from_csv_with(text: &str, tolerance: Option<f64>) -> Result<FiniteMetricSpace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut labels = None;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => labels = Some(record.iter().map(str::to_string).collect::<Vec<_>>()),
            Err(e) => return Err(Error::Parse(format!("CSV row {}: {e}", line + 1))),
        }
    }
    let space = validate_metric(&rows, tolerance)?;
    match labels {
        Some(l) => space.with_labels(l),
        None => Ok(space),
    }
}

pub fn matrix_to_csv(m: &FiniteMetricSpace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(l) = m.labels() {
        w.write_record(l).expect("in-memory write");
    }
    for i in 0..m.len() {
        w.write_record((0..m.len()).map(|j| format!("{}", m.dist(i, j))))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
