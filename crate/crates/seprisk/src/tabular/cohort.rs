use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Binary,
    Ordinal,
}

/// Which acquisition stream a feature belongs to. Clinical descriptors (CD)
/// and echo-derived measurements (EDM) form the two tabular modalities; the
/// video stream enters the models as a scalar score, not as a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Cd,
    Edm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub modality: Modality,
    /// Physiologic plausibility limits `[lo, hi]` in original units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<(f64, f64)>,
}

impl FeatureSpec {
    pub fn continuous(name: &str, modality: Modality) -> Self {
        FeatureSpec { name: name.into(), kind: FeatureKind::Continuous, modality, limits: None }
    }

    pub fn binary(name: &str, modality: Modality) -> Self {
        FeatureSpec { name: name.into(), kind: FeatureKind::Binary, modality, limits: None }
    }

    pub fn with_limits(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "limits for {}: lo {lo} must be below hi {hi}",
                self.name
            )));
        }
        self.limits = Some((lo, hi));
        Ok(self)
    }
}

/// A tabular cohort: one row per study, a binary one-year mortality label,
/// and per-feature values with an explicit missing marker.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub specs: Vec<FeatureSpec>,
    pub patient_ids: Vec<String>,
    pub study_times: Vec<NaiveDateTime>,
    pub labels: Vec<u8>,
    /// Row-major `n_rows x n_features`.
    values: Vec<Option<f64>>,
}

pub const RESERVED_COLUMNS: [&str; 3] = ["patient_id", "study_time", "label"];
const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

impl Cohort {
    pub fn new(
        specs: Vec<FeatureSpec>,
        patient_ids: Vec<String>,
        study_times: Vec<NaiveDateTime>,
        labels: Vec<u8>,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        for (i, s) in specs.iter().enumerate() {
            if RESERVED_COLUMNS.contains(&s.name.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "feature name {} collides with a reserved column",
                    s.name
                )));
            }
            if specs[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::InvalidArgument(format!("duplicate feature name {}", s.name)));
            }
        }
        let n = labels.len();
        if patient_ids.len() != n || study_times.len() != n || values.len() != n * specs.len() {
            return Err(Error::ShapeMismatch(format!(
                "cohort with {} labels, {} patients, {} times, {} values for {} features",
                n,
                patient_ids.len(),
                study_times.len(),
                values.len(),
                specs.len()
            )));
        }
        if let Some(y) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidArgument(format!("label {y} is not binary")));
        }
        Ok(Cohort { specs, patient_ids, study_times, labels, values })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.specs.len()
    }

    pub fn value(&self, row: usize, feature: usize) -> Option<f64> {
        self.values[row * self.specs.len() + feature]
    }

    pub fn set_value(&mut self, row: usize, feature: usize, v: Option<f64>) {
        self.values[row * self.specs.len() + feature] = v;
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.specs
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.into()))
    }

    pub fn column(&self, feature: usize) -> Vec<Option<f64>> {
        (0..self.n_rows()).map(|r| self.value(r, feature)).collect()
    }

    pub fn set_column(&mut self, feature: usize, col: &[Option<f64>]) -> Result<()> {
        if col.len() != self.n_rows() {
            return Err(Error::ShapeMismatch(format!(
                "column of {} values for {} rows",
                col.len(),
                self.n_rows()
            )));
        }
        for (r, v) in col.iter().enumerate() {
            self.set_value(r, feature, *v);
        }
        Ok(())
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// New cohort holding only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Cohort {
        let p = self.specs.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for &r in rows {
            values.extend_from_slice(&self.values[r * p..(r + 1) * p]);
        }
        Cohort {
            specs: self.specs.clone(),
            patient_ids: rows.iter().map(|&r| self.patient_ids[r].clone()).collect(),
            study_times: rows.iter().map(|&r| self.study_times[r]).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            values,
        }
    }

    /// Feature matrix as rows of optional values.
    pub fn to_matrix(&self) -> Vec<Vec<Option<f64>>> {
        let p = self.specs.len();
        (0..self.n_rows())
            .map(|r| self.values[r * p..(r + 1) * p].to_vec())
            .collect()
    }

    pub fn set_from_matrix(&mut self, matrix: &[Vec<f64>]) -> Result<()> {
        if matrix.len() != self.n_rows() {
            return Err(Error::ShapeMismatch(format!(
                "matrix with {} rows for cohort of {}",
                matrix.len(),
                self.n_rows()
            )));
        }
        for (r, row) in matrix.iter().enumerate() {
            if row.len() != self.specs.len() {
                return Err(Error::ShapeMismatch(format!(
                    "matrix row {r} has {} values for {} features",
                    row.len(),
                    self.specs.len()
                )));
            }
            for (f, v) in row.iter().enumerate() {
                self.set_value(r, f, Some(*v));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = RESERVED_COLUMNS.to_vec();
        header.extend(self.specs.iter().map(|s| s.name.as_str()));
        wtr.write_record(&header).map_err(csv_io)?;
        for r in 0..self.n_rows() {
            let mut record = vec![
                self.patient_ids[r].clone(),
                self.study_times[r].format(TIME_FORMAT).to_string(),
                self.labels[r].to_string(),
            ];
            for f in 0..self.specs.len() {
                record.push(match self.value(r, f) {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                });
            }
            wtr.write_record(&record).map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        crate::cli::fsutil::write_atomic(path, |w| self.write_csv(w))
    }

    /// Reads a cohort CSV. The header must contain the reserved columns
    /// `patient_id`, `study_time`, `label`; every other column is a feature.
    /// Feature kinds are inferred: a column whose observed values are all 0
    /// or 1 is binary, anything else continuous. Names starting with `edm_`
    /// are tagged as echo-derived, the rest as clinical descriptors.
    pub fn read_csv<R: Read>(reader: R) -> Result<Cohort> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers().map_err(csv_io)?.clone();
        let mut reserved_idx = [usize::MAX; 3];
        let mut feature_cols: Vec<(usize, String)> = Vec::new();
        for (i, name) in header.iter().enumerate() {
            match RESERVED_COLUMNS.iter().position(|r| *r == name) {
                Some(k) => reserved_idx[k] = i,
                None => feature_cols.push((i, name.to_string())),
            }
        }
        for (k, name) in RESERVED_COLUMNS.iter().enumerate() {
            if reserved_idx[k] == usize::MAX {
                return Err(Error::Csv { line: 1, message: format!("missing column {name}") });
            }
        }

        let mut patient_ids = Vec::new();
        let mut study_times = Vec::new();
        let mut labels = Vec::new();
        let mut values: Vec<Option<f64>> = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(csv_io)?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != header.len() {
                return Err(Error::Csv {
                    line,
                    message: format!("{} fields, header has {}", record.len(), header.len()),
                });
            }
            patient_ids.push(record[reserved_idx[0]].to_string());
            study_times.push(parse_time(&record[reserved_idx[1]], line)?);
            labels.push(parse_label(&record[reserved_idx[2]], line)?);
            for (col, name) in &feature_cols {
                let field = record[*col].trim();
                if field.is_empty() {
                    values.push(None);
                } else {
                    let v: f64 = field.parse().map_err(|_| Error::Csv {
                        line,
                        message: format!("column {name}: cannot parse {field:?} as a number"),
                    })?;
                    values.push(Some(v));
                }
            }
        }

        let n_features = feature_cols.len();
        let specs = feature_cols
            .iter()
            .enumerate()
            .map(|(f, (_, name))| {
                let binary = values
                    .iter()
                    .skip(f)
                    .step_by(n_features.max(1))
                    .flatten()
                    .all(|v| *v == 0.0 || *v == 1.0);
                let modality = if name.starts_with("edm_") { Modality::Edm } else { Modality::Cd };
                FeatureSpec {
                    name: name.clone(),
                    kind: if binary { FeatureKind::Binary } else { FeatureKind::Continuous },
                    modality,
                    limits: None,
                }
            })
            .collect();
        Cohort::new(specs, patient_ids, study_times, labels, values)
    }

    pub fn read_csv_path(path: &Path) -> Result<Cohort> {
        let file = std::fs::File::open(path)?;
        Cohort::read_csv(std::io::BufReader::new(file))
    }
}

fn parse_time(field: &str, line: u64) -> Result<NaiveDateTime> {
    let field = field.trim();
    if let Ok(t) = NaiveDateTime::parse_from_str(field, TIME_FORMAT) {
        return Ok(t);
    }
    if let Ok(t) = chrono::DateTime::parse_from_rfc3339(field) {
        return Ok(t.naive_utc());
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(field, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight exists"));
    }
    Err(Error::Csv { line, message: format!("cannot parse study_time {field:?} as ISO-8601") })
}

fn parse_label(field: &str, line: u64) -> Result<u8> {
    match field.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Csv { line, message: format!("label {other:?} is not 0 or 1") }),
    }
}

fn csv_io(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Csv { line, message: e.to_string() }
}

/// Seconds since the epoch, the time axis for interpolation.
pub fn time_seconds(t: NaiveDateTime) -> f64 {
    t.and_utc().timestamp() as f64
}
