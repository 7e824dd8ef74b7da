//! CSV matrices and JSON model documents.
//!
//! Numbers are written with Rust's shortest round-trip `f64` formatting so
//! re-parsing recovers every bit. The model document layout is described by
//! `schema/model.schema.json` at the repository root.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::admm::{RplsConfig, RplsModel, RplsState, TraceEntry};
use crate::baselines::{self, LinearModel, MethodTag};
use crate::eval::ExperimentReport;
use crate::projection::ProjectionRegressor;
use crate::{DenseMatrix, Error, Result};

/// Current model document version.
pub const SCHEMA_VERSION: u32 = 1;

/// A delimited numeric text file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub has_header: bool,
    pub delimiter: u8,
}

impl DatasetFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        DatasetFile {
            path: path.into(),
            has_header: false,
            delimiter: b',',
        }
    }

    pub fn with_header(mut self, has_header: bool) -> Self {
        self.has_header = has_header;
        self
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }
}

/// Reads a matrix with one row per data line.
pub fn load_csv(file: &DatasetFile) -> Result<DenseMatrix> {
    let reader = BufReader::new(File::open(&file.path)?);
    read_csv(reader, file.has_header, file.delimiter)
}

pub fn read_csv<R: Read>(reader: R, has_header: bool, delimiter: u8) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line() as usize);
        if std::mem::take(&mut first) && has_header {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    line,
                    column: None,
                    message: format!("expected {w} fields, found {}", record.len()),
                });
            }
            _ => {}
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: Some(j + 1),
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: Some(j + 1),
                    message: format!("'{cell}' is not finite"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    match width {
        Some(w) if w > 0 && rows > 0 => Ok(DenseMatrix::from_row_slice(rows, w, &values)),
        _ => Err(Error::InvalidInput("no data rows".into())),
    }
}

/// Writes `m` with an optional header line.
pub fn write_csv(path: impl AsRef<Path>, m: &DenseMatrix, header: Option<&[String]>) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_csv_to(file, m, header)
}

pub fn write_csv_to<W: Write>(writer: W, m: &DenseMatrix, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| format_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

/// Row-major matrix as stored in model documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DenseMatrix> for MatrixDoc {
    fn from(m: &DenseMatrix) -> Self {
        MatrixDoc {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl MatrixDoc {
    fn into_matrix(self, name: &str) -> Result<DenseMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidInput(format!(
                "{name}: {}x{} matrix carries {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{name} has non-finite entries"
            )));
        }
        Ok(DenseMatrix::from_row_slice(
            self.rows, self.cols, &self.data,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RplsModelDoc {
    pub schema_version: u32,
    pub n: usize,
    pub p: usize,
    pub r: usize,
    pub k: usize,
    pub config: RplsConfig,
    pub converged: bool,
    pub iterations: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub x_means: Vec<f64>,
    pub y_means: Vec<f64>,
    pub x_scales: Vec<f64>,
    pub y_scales: Vec<f64>,
    pub q: MatrixDoc,
    pub lambda_x: MatrixDoc,
    pub lambda_y: MatrixDoc,
    pub delta_x: MatrixDoc,
    pub delta_y: MatrixDoc,
    pub l: MatrixDoc,
    pub m: MatrixDoc,
    pub residual_trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModelDoc {
    pub schema_version: u32,
    pub method: MethodTag,
    pub p: usize,
    pub r: usize,
    pub n_components: usize,
    pub rank_deficient: bool,
    pub x_means: Vec<f64>,
    pub y_means: Vec<f64>,
    pub theta: MatrixDoc,
}

/// On-disk model document, discriminated by `"kind"`.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDoc {
    Rpls(RplsModelDoc),
    Linear(LinearModelDoc),
}

/// A model that can be saved, loaded and used for prediction.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Rpls(RplsModel),
    Linear(LinearModel),
}

impl From<&RplsModel> for RplsModelDoc {
    fn from(m: &RplsModel) -> Self {
        let s = &m.state;
        RplsModelDoc {
            schema_version: SCHEMA_VERSION,
            n: m.n_samples(),
            p: m.n_predictors(),
            r: m.n_responses(),
            k: s.q.ncols(),
            config: m.config.clone(),
            converged: m.converged,
            iterations: s.iter,
            alpha1: s.alpha1,
            alpha2: s.alpha2,
            x_means: m.x_means.clone(),
            y_means: m.y_means.clone(),
            x_scales: m.x_scales.clone(),
            y_scales: m.y_scales.clone(),
            q: (&s.q).into(),
            lambda_x: (&s.lambda_x).into(),
            lambda_y: (&s.lambda_y).into(),
            delta_x: (&s.delta_x).into(),
            delta_y: (&s.delta_y).into(),
            l: (&s.l).into(),
            m: (&s.m).into(),
            residual_trace: m.residual_trace.clone(),
        }
    }
}

fn expect_shape(m: &DenseMatrix, name: &str, shape: (usize, usize)) -> Result<()> {
    if m.shape() != shape {
        return Err(Error::InvalidInput(format!(
            "{name} is {}x{}, expected {}x{}",
            m.nrows(),
            m.ncols(),
            shape.0,
            shape.1
        )));
    }
    Ok(())
}

impl TryFrom<RplsModelDoc> for RplsModel {
    type Error = Error;

    fn try_from(d: RplsModelDoc) -> Result<Self> {
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema version {}",
                d.schema_version
            )));
        }
        let (n, p, r, k) = (d.n, d.p, d.r, d.k);
        let state = RplsState {
            q: d.q.into_matrix("q")?,
            lambda_x: d.lambda_x.into_matrix("lambda_x")?,
            lambda_y: d.lambda_y.into_matrix("lambda_y")?,
            delta_x: d.delta_x.into_matrix("delta_x")?,
            delta_y: d.delta_y.into_matrix("delta_y")?,
            l: d.l.into_matrix("l")?,
            m: d.m.into_matrix("m")?,
            alpha1: d.alpha1,
            alpha2: d.alpha2,
            iter: d.iterations,
        };
        expect_shape(&state.q, "q", (n, k))?;
        expect_shape(&state.lambda_x, "lambda_x", (p, k))?;
        expect_shape(&state.lambda_y, "lambda_y", (r, k))?;
        expect_shape(&state.delta_x, "delta_x", (n, p))?;
        expect_shape(&state.delta_y, "delta_y", (n, r))?;
        expect_shape(&state.l, "l", (n, p))?;
        expect_shape(&state.m, "m", (n, r))?;
        if d.x_means.len() != p || d.y_means.len() != r {
            return Err(Error::InvalidInput(
                "mean vectors do not match p and r".into(),
            ));
        }
        if d.x_scales.len() != p || d.y_scales.len() != r {
            return Err(Error::InvalidInput(
                "scale vectors do not match p and r".into(),
            ));
        }
        if d.x_scales
            .iter()
            .chain(&d.y_scales)
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::InvalidInput("scales must be positive".into()));
        }
        Ok(RplsModel {
            state,
            config: d.config,
            converged: d.converged,
            residual_trace: d.residual_trace,
            x_means: d.x_means,
            y_means: d.y_means,
            x_scales: d.x_scales,
            y_scales: d.y_scales,
        })
    }
}

impl From<&LinearModel> for LinearModelDoc {
    fn from(m: &LinearModel) -> Self {
        LinearModelDoc {
            schema_version: SCHEMA_VERSION,
            method: m.method,
            p: m.n_predictors(),
            r: m.n_responses(),
            n_components: m.n_components,
            rank_deficient: m.rank_deficient,
            x_means: m.x_means.clone(),
            y_means: m.y_means.clone(),
            theta: (&m.theta).into(),
        }
    }
}

impl TryFrom<LinearModelDoc> for LinearModel {
    type Error = Error;

    fn try_from(d: LinearModelDoc) -> Result<Self> {
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema version {}",
                d.schema_version
            )));
        }
        let theta = d.theta.into_matrix("theta")?;
        expect_shape(&theta, "theta", (d.p, d.r))?;
        if d.x_means.len() != d.p || d.y_means.len() != d.r {
            return Err(Error::InvalidInput(
                "mean vectors do not match p and r".into(),
            ));
        }
        Ok(LinearModel {
            theta,
            x_means: d.x_means,
            y_means: d.y_means,
            method: d.method,
            n_components: d.n_components,
            rank_deficient: d.rank_deficient,
        })
    }
}

impl SavedModel {
    pub fn to_doc(&self) -> ModelDoc {
        match self {
            SavedModel::Rpls(m) => ModelDoc::Rpls(m.into()),
            SavedModel::Linear(m) => ModelDoc::Linear(m.into()),
        }
    }

    pub fn from_doc(doc: ModelDoc) -> Result<Self> {
        Ok(match doc {
            ModelDoc::Rpls(d) => SavedModel::Rpls(d.try_into()?),
            ModelDoc::Linear(d) => SavedModel::Linear(d.try_into()?),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        SavedModel::from_doc(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        f.write_all(self.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        SavedModel::from_json(&text)
    }

    /// RPLS models predict by projection, linear models through `θ`.
    pub fn predict(&self, x_new: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            SavedModel::Rpls(m) => ProjectionRegressor::from_rpls(m)?.predict(x_new),
            SavedModel::Linear(m) => baselines::predict(m, x_new),
        }
    }
}

/// Column labels for a method's `r` responses: the bare name when `r = 1`,
/// otherwise `name_1 .. name_r`.
fn labels(name: &str, r: usize) -> Vec<String> {
    if r == 1 {
        vec![name.to_string()]
    } else {
        (1..=r).map(|j| format!("{name}_{j}")).collect()
    }
}

/// One row per test sample with the reference responses followed by each
/// method's predictions, then a final `NMSE` row. Failed methods leave
/// their cells empty.
pub fn write_report_csv_to<W: Write>(writer: W, report: &ExperimentReport) -> Result<()> {
    let r = report.y_test.ncols();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["sample".to_string()];
    header.extend(labels("true", r));
    for method in report.results.keys() {
        header.extend(labels(method.as_str(), r));
    }
    w.write_record(&header)?;

    for (i, row) in report.split.test().iter().enumerate() {
        let mut record = vec![row.to_string()];
        record.extend(report.y_test.row(i).iter().map(|v| format_f64(*v)));
        for outcome in report.results.values() {
            match outcome {
                Ok(o) => record.extend(o.predictions.row(i).iter().map(|v| format_f64(*v))),
                Err(_) => record.extend(std::iter::repeat_n(String::new(), r)),
            }
        }
        w.write_record(&record)?;
    }

    let mut last = vec!["NMSE".to_string()];
    last.extend(std::iter::repeat_n(String::new(), r));
    for outcome in report.results.values() {
        let cell = outcome
            .as_ref()
            .map_or(String::new(), |o| format_f64(o.nmse));
        last.extend(std::iter::repeat_n(cell, r));
    }
    w.write_record(&last)?;
    w.flush()?;
    Ok(())
}

pub fn write_report_csv(path: impl AsRef<Path>, report: &ExperimentReport) -> Result<()> {
    write_report_csv_to(BufWriter::new(File::create(path)?), report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResultDoc {
    pub method: MethodTag,
    pub nmse: Option<f64>,
    pub error: Option<String>,
    pub converged: Option<bool>,
    pub n_components: Option<usize>,
    pub rank_deficient: Option<bool>,
    pub predictions: Option<MatrixDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub dataset: String,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub y_test: MatrixDoc,
    pub results: Vec<MethodResultDoc>,
}

impl From<&ExperimentReport> for ReportDoc {
    fn from(report: &ExperimentReport) -> Self {
        let results = report
            .results
            .iter()
            .map(|(method, outcome)| match outcome {
                Ok(o) => MethodResultDoc {
                    method: *method,
                    nmse: Some(o.nmse),
                    error: None,
                    converged: o.converged,
                    n_components: Some(o.model.n_components),
                    rank_deficient: Some(o.model.rank_deficient),
                    predictions: Some((&o.predictions).into()),
                },
                Err(e) => MethodResultDoc {
                    method: *method,
                    nmse: None,
                    error: Some(e.clone()),
                    converged: None,
                    n_components: None,
                    rank_deficient: None,
                    predictions: None,
                },
            })
            .collect();
        ReportDoc {
            dataset: report.dataset_tag.clone(),
            train_rows: report.split.train().to_vec(),
            test_rows: report.split.test().to_vec(),
            y_test: (&report.y_test).into(),
            results,
        }
    }
}

pub fn write_report_json(path: impl AsRef<Path>, report: &ExperimentReport) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, &ReportDoc::from(report))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
