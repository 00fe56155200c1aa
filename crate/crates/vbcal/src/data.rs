//! Prediction data model and delimited-file ingestion.
//!
//! A prediction file is comma-delimited with a header row:
//! `prob_0,...,prob_{K-1},label,<var1>,<var2>,...`. Probabilities are stored
//! at full precision so that write/load round-trips are lossless.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-6;

/// One instance: per-class probabilities, true label, and named metadata variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub probs: Vec<f64>,
    pub label: usize,
    pub variables: BTreeMap<String, f64>,
}

impl PredictionRecord {
    /// Confidence `s = max(probs)` and predicted label (argmax, lowest index on ties).
    pub fn confidence_and_prediction(&self) -> (f64, usize) {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        (self.probs[best], best)
    }

    pub fn is_correct(&self) -> bool {
        self.confidence_and_prediction().1 == self.label
    }

    fn validate(&self, k: usize, row: usize) -> Result<()> {
        if self.probs.len() != k {
            return Err(Error::Validation {
                row,
                msg: format!("expected {} probabilities, found {}", k, self.probs.len()),
            });
        }
        let mut sum = 0.0;
        for &p in &self.probs {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation {
                    row,
                    msg: format!("probability {p} outside [0, 1]"),
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Validation {
                row,
                msg: format!("probabilities sum to {sum}"),
            });
        }
        if self.label >= k {
            return Err(Error::Validation {
                row,
                msg: format!("label {} out of range for {} classes", self.label, k),
            });
        }
        for (name, v) in &self.variables {
            if !v.is_finite() {
                return Err(Error::Validation {
                    row,
                    msg: format!("variable `{name}` is not finite"),
                });
            }
        }
        Ok(())
    }
}

/// An immutable, validated collection of prediction records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<PredictionRecord>,
    num_classes: usize,
    variable_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, checking every record against the shared invariants.
    pub fn new(
        records: Vec<PredictionRecord>,
        num_classes: usize,
        variable_names: Vec<String>,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Parameter(format!(
                "num_classes must be >= 2, got {num_classes}"
            )));
        }
        if records.is_empty() {
            return Err(Error::Parameter("dataset must be nonempty".into()));
        }
        for (i, rec) in records.iter().enumerate() {
            rec.validate(num_classes, i + 1)?;
            if rec.variables.len() != variable_names.len()
                || !variable_names.iter().all(|n| rec.variables.contains_key(n))
            {
                return Err(Error::Validation {
                    row: i + 1,
                    msg: "variable set differs from dataset variable names".into(),
                });
            }
        }
        Ok(Self {
            records,
            num_classes,
            variable_names,
        })
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    /// Per-record confidence scores.
    pub fn confidences(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.confidence_and_prediction().0)
            .collect()
    }

    /// Per-record 0/1 correctness indicators.
    pub fn correctness(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| if r.is_correct() { 1.0 } else { 0.0 })
            .collect()
    }

    /// Values of a named variable, in record order.
    pub fn variable_values(&self, name: &str) -> Result<Vec<f64>> {
        if !self.variable_names.iter().any(|n| n == name) {
            return Err(Error::UnknownVariable(name.to_string()));
        }
        Ok(self.records.iter().map(|r| r.variables[name]).collect())
    }

    /// Class-1 probability per record; only meaningful for binary datasets.
    pub fn class1_probs(&self) -> Result<Vec<f64>> {
        if self.num_classes != 2 {
            return Err(Error::NotApplicable(format!(
                "binary operation on {}-class dataset",
                self.num_classes
            )));
        }
        Ok(self.records.iter().map(|r| r.probs[1]).collect())
    }

    /// A new dataset holding clones of the records at `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let records = indices.iter().map(|&i| self.records[i].clone()).collect();
        Self::new(records, self.num_classes, self.variable_names.clone())
    }

    /// A new dataset with the same labels/variables but replaced probability rows.
    pub fn with_probs(&self, probs: Vec<Vec<f64>>) -> Result<Self> {
        assert_eq!(probs.len(), self.records.len());
        let records = self
            .records
            .iter()
            .zip(probs)
            .map(|(r, p)| PredictionRecord {
                probs: p,
                label: r.label,
                variables: r.variables.clone(),
            })
            .collect();
        Self::new(records, self.num_classes, self.variable_names.clone())
    }
}

/// Loads and validates a prediction file.
///
/// Probability columns must be exactly `prob_0..prob_{K-1}`; `label` is
/// required; every remaining column is treated as a real-valued variable.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();

    let mut prob_cols: Vec<(usize, usize)> = Vec::new(); // (class index, column index)
    let mut label_col = None;
    let mut var_cols: Vec<(String, usize)> = Vec::new();
    for (ci, h) in headers.iter().enumerate() {
        if let Some(idx) = h.strip_prefix("prob_") {
            let class: usize = idx
                .parse()
                .map_err(|_| Error::Schema(format!("bad probability column `{h}`")))?;
            prob_cols.push((class, ci));
        } else if h == "label" {
            label_col = Some(ci);
        } else {
            var_cols.push((h.to_string(), ci));
        }
    }
    let label_col =
        label_col.ok_or_else(|| Error::Schema("missing `label` column".into()))?;
    prob_cols.sort();
    let k = prob_cols.len();
    if k < 2 {
        return Err(Error::Schema(format!(
            "need at least prob_0 and prob_1 columns, found {k}"
        )));
    }
    for (want, &(class, _)) in prob_cols.iter().enumerate() {
        if class != want {
            return Err(Error::Schema(format!(
                "probability columns are not contiguous: missing prob_{want}"
            )));
        }
    }

    let parse_num = |field: &str, row: usize, col: &str| -> Result<f64> {
        let v: f64 = field.trim().parse().map_err(|_| Error::Validation {
            row,
            msg: format!("cannot parse `{field}` in column {col}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Validation {
                row,
                msg: format!("non-finite value in column {col}"),
            });
        }
        Ok(v)
    };

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let rownum = i + 1;
        let mut probs = Vec::with_capacity(k);
        for &(class, ci) in &prob_cols {
            probs.push(parse_num(&row[ci], rownum, &format!("prob_{class}"))?);
        }
        let label_raw = parse_num(&row[label_col], rownum, "label")?;
        if label_raw.fract() != 0.0 || label_raw < 0.0 {
            return Err(Error::Validation {
                row: rownum,
                msg: format!("label `{label_raw}` is not a non-negative integer"),
            });
        }
        let label = label_raw as usize;
        let mut variables = BTreeMap::new();
        for (name, ci) in &var_cols {
            variables.insert(name.clone(), parse_num(&row[*ci], rownum, name)?);
        }
        records.push(PredictionRecord {
            probs,
            label,
            variables,
        });
    }

    let variable_names = var_cols.into_iter().map(|(n, _)| n).collect();
    Dataset::new(records, k, variable_names)
}

/// Writes a dataset in the standard schema; round-trips losslessly.
pub fn write_predictions(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = (0..dataset.num_classes())
        .map(|i| format!("prob_{i}"))
        .collect();
    header.push("label".into());
    header.extend(dataset.variable_names().iter().cloned());
    writer.write_record(&header)?;
    for rec in dataset.records() {
        let mut row: Vec<String> = rec.probs.iter().map(|p| format!("{p}")).collect();
        row.push(format!("{}", rec.label));
        for name in dataset.variable_names() {
            row.push(format!("{}", rec.variables[name]));
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
