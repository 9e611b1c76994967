//! Multivariate time series in CSV: one row per time step, a sample-id column groups rows
//! into samples, a label column carries the class, every other column is a channel.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledSample, SampleInput};
use crate::error::{Error, Result};
use crate::spikes::Trace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub sample_column: String,
    pub label_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            sample_column: "sample".into(),
            label_column: "label".into(),
        }
    }
}

pub fn load_csv_series(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Vec<LabeledSample>> {
    let path = path.as_ref();
    let csv_err = |reason: String| Error::Csv {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(csv_err("empty file".into()));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| csv_err(format!("missing column `{name}`")))
    };
    let id_col = find(&schema.sample_column)?;
    let label_col = find(&schema.label_column)?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != id_col && c != label_col).collect();
    if feature_cols.is_empty() {
        return Err(csv_err("no feature columns".into()));
    }

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, (usize, Vec<f64>)> = HashMap::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let id = record[id_col].to_string();
        let label: usize = record[label_col].trim().parse().map_err(|_| {
            csv_err(format!(
                "line {line}: label `{}` is not a class index",
                &record[label_col]
            ))
        })?;
        let entry = groups.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            (label, Vec::new())
        });
        if entry.0 != label {
            return Err(csv_err(format!(
                "line {line}: sample `{id}` changes label from {} to {label}",
                entry.0
            )));
        }
        for &c in &feature_cols {
            let cell = record[c].trim();
            let value: f64 = cell.parse().map_err(|_| {
                csv_err(format!(
                    "line {line}, column `{}`: `{cell}` is not numeric",
                    &headers[c]
                ))
            })?;
            if !value.is_finite() {
                return Err(csv_err(format!(
                    "line {line}, column `{}`: non-finite value",
                    &headers[c]
                )));
            }
            entry.1.push(value);
        }
    }
    if order.is_empty() {
        return Err(csv_err("no data rows".into()));
    }
    let channels = feature_cols.len();
    order
        .into_iter()
        .map(|id| {
            let (label, values) = groups.remove(&id).expect("grouped above");
            let steps = values.len() / channels;
            Ok(LabeledSample {
                input: SampleInput::Series(Trace::from_vec(steps, channels, values)?),
                label: Label::Class(label),
            })
        })
        .collect()
}

/// Per-channel min-max scaling, fitted on one split and applied to any.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    pub fn fit(samples: &[LabeledSample]) -> Result<Self> {
        let mut stats: Option<MinMax> = None;
        for s in samples {
            let SampleInput::Series(series) = &s.input else {
                return Err(Error::param("samples", "min-max fitting needs time-series inputs"));
            };
            let st = stats.get_or_insert_with(|| MinMax {
                min: vec![f64::INFINITY; series.channels()],
                max: vec![f64::NEG_INFINITY; series.channels()],
            });
            if st.min.len() != series.channels() {
                return Err(Error::shape("series channels", st.min.len(), series.channels()));
            }
            for t in 0..series.horizon() {
                for (c, &x) in series.row(t).iter().enumerate() {
                    st.min[c] = st.min[c].min(x);
                    st.max[c] = st.max[c].max(x);
                }
            }
        }
        stats.ok_or(Error::EmptyDataset)
    }

    /// Maps the fitted range onto `[0, 1]`; constant channels map to 0.
    pub fn apply(&self, series: &Trace) -> Trace {
        let mut out = series.clone();
        for t in 0..series.horizon() {
            for (c, x) in out.row_mut(t).iter_mut().enumerate() {
                let span = self.max[c] - self.min[c];
                *x = if span > 0.0 { (*x - self.min[c]) / span } else { 0.0 };
            }
        }
        out
    }

    pub fn apply_all(&self, samples: &mut [LabeledSample]) {
        for s in samples {
            if let SampleInput::Series(series) = &s.input {
                s.input = SampleInput::Series(self.apply(series));
            }
        }
    }
}
