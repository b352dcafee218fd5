//! File formats.
//!
//! * Datasets: a features CSV with a header of feature names and one row
//!   per sample, and a labels CSV with header `label` and one class token
//!   per row. Classes are numbered by first appearance.
//! * Models: TOML with box coordinates, feature weights, Λ, scaling bounds,
//!   hyperparameters and names. Floats are written in shortest round-trip
//!   form, so a saved model predicts exactly like the original.
//! * Reports: TOML with `format_version = 1`. Wall-clock times never appear
//!   in report files; they go to a separate `timing.toml`.
//! * AUC surfaces: CSV `D,T,method,mean_auc,std_auc,mean_seconds`.

use std::fs;
use std::path::{Path, PathBuf};

use espa_core::{EspaModel, FeatureMatrix, Hyperparams, LabelMatrix, Matrix, MinMaxScaler, Mode, SimplexVector};
use serde::{Deserialize, Serialize};

use crate::config::Scale;
use crate::error::{Error, Result};
use crate::harness::{BarrierOutcome, CvReport, GridResult, Method, SweepReport, Trained};

pub const FORMAT_VERSION: u32 = 1;

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Creates `dir` if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

/// Reads a features CSV into a D×T matrix with feature names.
pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let mut rdr = csv_reader(path)?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let d = names.len();
    let mut data = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::format(
                    path,
                    format!("non-numeric cell {cell:?} at row {}, column {} ({})", row + 1, col + 1, names[col]),
                )
            })?;
            data.push(v);
        }
    }
    if data.is_empty() {
        return Err(Error::format(path, "no samples"));
    }
    let t = data.len() / d;
    // one row per sample is exactly one column of the D×T matrix
    let x = FeatureMatrix::new(Matrix::from_col_major(d, t, data)).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(x.with_names(names)?)
}

/// Reads a labels CSV; classes are numbered by first appearance.
pub fn load_labels(path: &Path) -> Result<LabelMatrix> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() != 1 || &header[0] != "label" {
        return Err(Error::format(path, format!("expected the single header `label`, got {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut classes: Vec<String> = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let token = &record[0];
        if token.is_empty() {
            return Err(Error::format(path, format!("empty class label at row {}", row + 1)));
        }
        let idx = match classes.iter().position(|c| c == token) {
            Some(i) => i,
            None => {
                classes.push(token.to_string());
                classes.len() - 1
            }
        };
        labels.push(idx);
    }
    if labels.is_empty() {
        return Err(Error::format(path, "no samples"));
    }
    Ok(LabelMatrix::from_indices(&labels, classes)?)
}

/// Loads a features/labels file pair.
pub fn load_dataset(features: &Path, labels: &Path) -> Result<(FeatureMatrix, LabelMatrix)> {
    let x = load_features(features)?;
    let pi = load_labels(labels)?;
    if x.len() != pi.len() {
        return Err(Error::Data(format!(
            "{} has {} samples but {} has {}",
            features.display(),
            x.len(),
            labels.display(),
            pi.len()
        )));
    }
    Ok((x, pi))
}

/// Writes `features.csv` and `labels.csv` into `dir`.
pub fn save_dataset(dir: &Path, x: &FeatureMatrix, pi: &LabelMatrix) -> Result<(PathBuf, PathBuf)> {
    ensure_dir(dir)?;
    let fpath = dir.join("features.csv");
    let lpath = dir.join("labels.csv");
    let mut w = csv::Writer::from_path(&fpath).map_err(|e| csv_error(&fpath, e))?;
    w.write_record(x.names_or_default()).map_err(|e| csv_error(&fpath, e))?;
    for sample in x.values().columns() {
        w.write_record(sample.iter().map(|v| v.to_string())).map_err(|e| csv_error(&fpath, e))?;
    }
    w.flush().map_err(|e| Error::io(&fpath, e))?;
    let mut w = csv::Writer::from_path(&lpath).map_err(|e| csv_error(&lpath, e))?;
    w.write_record(["label"]).map_err(|e| csv_error(&lpath, e))?;
    for l in pi.hard_labels() {
        w.write_record([&pi.class_names()[l]]).map_err(|e| csv_error(&lpath, e))?;
    }
    w.flush().map_err(|e| Error::io(&lpath, e))?;
    Ok((fpath, lpath))
}

/// Writes predicted labels and class probabilities, one row per sample.
pub fn save_predictions(path: &Path, class_names: &[String], pred: &espa_core::Prediction) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = std::iter::once("label".to_string()).chain(class_names.iter().map(|c| format!("p_{c}")));
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for (t, &l) in pred.labels.iter().enumerate() {
        let row = std::iter::once(class_names[l].clone()).chain(pred.proba.col(t).iter().map(|v| v.to_string()));
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRecord {
    #[serde(rename = "K")]
    pub k: usize,
    pub epsilon_e: f64,
    #[serde(rename = "epsilon_CL")]
    pub epsilon_cl: f64,
    #[serde(rename = "epsilon_S")]
    pub epsilon_s: f64,
    pub mode: String,
    pub tol: f64,
    pub max_iter: usize,
    pub n_restarts: usize,
    pub seed: u64,
}

impl From<&Hyperparams> for HyperRecord {
    fn from(h: &Hyperparams) -> Self {
        Self {
            k: h.k,
            epsilon_e: h.epsilon_e,
            epsilon_cl: h.epsilon_cl,
            epsilon_s: h.epsilon_s,
            mode: h.mode.as_str().to_string(),
            tol: h.tol,
            max_iter: h.max_iter,
            n_restarts: h.n_restarts,
            seed: h.seed,
        }
    }
}

impl HyperRecord {
    fn to_hyper(&self) -> Result<Hyperparams> {
        let h = Hyperparams {
            k: self.k,
            epsilon_e: self.epsilon_e,
            epsilon_cl: self.epsilon_cl,
            epsilon_s: self.epsilon_s,
            mode: self.mode.parse::<Mode>()?,
            tol: self.tol,
            max_iter: self.max_iter,
            n_restarts: self.n_restarts,
            seed: self.seed,
        };
        h.validate()?;
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScalingRecord {
    kind: String,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelRecord {
    format_version: u32,
    kind: String,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    /// Feature weights W, one per feature.
    weights: Vec<f64>,
    /// Box coordinates, one list of D values per box.
    boxes: Vec<Vec<f64>>,
    /// Label probabilities, one list of M values per box.
    lambda: Vec<Vec<f64>>,
    hyperparameters: HyperRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    scaling: Option<ScalingRecord>,
}

/// Saves a trained classifier.
pub fn save_model(path: &Path, trained: &Trained, class_names: &[String], feature_names: &[String]) -> Result<()> {
    let m = &trained.model;
    let rec = ModelRecord {
        format_version: FORMAT_VERSION,
        kind: "model".into(),
        class_names: class_names.to_vec(),
        feature_names: feature_names.to_vec(),
        weights: m.w.as_slice().to_vec(),
        boxes: m.s.columns().map(<[f64]>::to_vec).collect(),
        lambda: m.lambda.columns().map(<[f64]>::to_vec).collect(),
        hyperparameters: (&m.hyper).into(),
        scaling: trained.scaler.as_ref().map(|s| ScalingRecord {
            kind: "minmax".into(),
            lo: s.lo().to_vec(),
            hi: s.hi().to_vec(),
        }),
    };
    let text = toml::to_string(&rec).map_err(|e| Error::format(path, e.to_string()))?;
    write(path, &text)
}

/// A model file's contents.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub trained: Trained,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
}

fn stack(path: &Path, what: &str, cols: &[Vec<f64>], rows: usize) -> Result<Matrix> {
    let mut data = Vec::with_capacity(rows * cols.len());
    for (i, c) in cols.iter().enumerate() {
        if c.len() != rows {
            return Err(Error::format(path, format!("{what} entry {i} has {} values, expected {rows}", c.len())));
        }
        data.extend_from_slice(c);
    }
    Ok(Matrix::from_col_major(rows, cols.len(), data))
}

/// Loads a model saved by [`save_model`].
pub fn load_model(path: &Path) -> Result<SavedModel> {
    let text = read_to_string(path)?;
    let rec: ModelRecord = toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if rec.format_version != FORMAT_VERSION || rec.kind != "model" {
        return Err(Error::format(path, format!("not a version {FORMAT_VERSION} model file")));
    }
    let d = rec.weights.len();
    let m = rec.class_names.len();
    let bad = |e: espa_core::EspaError| Error::format(path, e.to_string());
    let model = EspaModel {
        s: stack(path, "boxes", &rec.boxes, d)?,
        gamma: Matrix::zeros(rec.boxes.len(), 0),
        w: SimplexVector::new(rec.weights).map_err(bad)?,
        lambda: stack(path, "lambda", &rec.lambda, m)?,
        hyper: rec.hyperparameters.to_hyper().map_err(|e| Error::format(path, e.to_string()))?,
        loss_trace: Vec::new(),
    };
    model.validate().map_err(bad)?;
    let scaler = match rec.scaling {
        Some(s) if s.kind == "minmax" => Some(MinMaxScaler::from_bounds(s.lo, s.hi).map_err(bad)?),
        Some(s) => return Err(Error::format(path, format!("unknown scaling {:?}", s.kind))),
        None => None,
    };
    if rec.feature_names.len() != d {
        return Err(Error::format(path, "feature_names does not match weights"));
    }
    Ok(SavedModel {
        trained: Trained { model, scaler },
        class_names: rec.class_names,
        feature_names: rec.feature_names,
    })
}

#[derive(Serialize)]
struct ReplicateRecord {
    auc: Option<f64>,
    relevant_weight: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct CvRecord {
    hyperparameters: HyperRecord,
    mean_auc: f64,
    std_auc: f64,
    n_failed: usize,
    replicates: Vec<ReplicateRecord>,
}

impl From<&CvReport> for CvRecord {
    fn from(r: &CvReport) -> Self {
        Self {
            hyperparameters: (&r.hyper).into(),
            mean_auc: r.mean_auc,
            std_auc: r.std_auc,
            n_failed: r.n_failed,
            replicates: r
                .replicates
                .iter()
                .map(|rep| match &rep.outcome {
                    Ok(s) => ReplicateRecord {
                        auc: Some(s.auc),
                        relevant_weight: s.relevant_weight,
                        error: None,
                    },
                    Err(e) => ReplicateRecord {
                        auc: None,
                        relevant_weight: None,
                        error: Some(e.clone()),
                    },
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct GridRowRecord {
    #[serde(rename = "K")]
    k: usize,
    epsilon_e: f64,
    #[serde(rename = "epsilon_CL")]
    epsilon_cl: f64,
    #[serde(rename = "epsilon_S")]
    epsilon_s: f64,
    mean_auc: f64,
    std_auc: f64,
    n_failed: usize,
}

#[derive(Serialize)]
struct CvFile {
    format_version: u32,
    kind: &'static str,
    method: &'static str,
    source: String,
    scale: &'static str,
    n_replicates: usize,
    train_fraction: f64,
    master_seed: u64,
    selected: CvRecord,
    grid: Vec<GridRowRecord>,
}

#[derive(Serialize)]
struct CellTiming {
    index: usize,
    mean_seconds: f64,
    total_seconds: f64,
}

#[derive(Serialize)]
struct TimingFile {
    format_version: u32,
    cells: Vec<CellTiming>,
}

/// Run metadata written next to a report.
#[derive(Debug, Clone, Copy)]
pub struct RunInfo {
    pub method: Method,
    pub scale: Scale,
    pub n_replicates: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
}

fn to_toml<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes `cv_report.toml` (selected cell and full table) and `timing.toml`.
pub fn save_cv_report(dir: &Path, result: &GridResult, info: RunInfo) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("cv_report.toml");
    let best = result.best();
    let file = CvFile {
        format_version: FORMAT_VERSION,
        kind: "cv",
        method: info.method.as_str(),
        source: best.source.clone(),
        scale: info.scale.as_str(),
        n_replicates: info.n_replicates,
        train_fraction: info.train_fraction,
        master_seed: info.master_seed,
        selected: best.into(),
        grid: result
            .table
            .iter()
            .map(|r| GridRowRecord {
                k: r.hyper.k,
                epsilon_e: r.hyper.epsilon_e,
                epsilon_cl: r.hyper.epsilon_cl,
                epsilon_s: r.hyper.epsilon_s,
                mean_auc: r.mean_auc,
                std_auc: r.std_auc,
                n_failed: r.n_failed,
            })
            .collect(),
    };
    write(&path, &to_toml(&path, &file)?)?;
    let timing_path = dir.join("timing.toml");
    let timing = TimingFile {
        format_version: FORMAT_VERSION,
        cells: result
            .table
            .iter()
            .enumerate()
            .map(|(index, r)| CellTiming {
                index,
                mean_seconds: r.mean_seconds,
                total_seconds: r.total_seconds,
            })
            .collect(),
    };
    write(&timing_path, &to_toml(&timing_path, &timing)?)?;
    Ok(path)
}

#[derive(Serialize)]
struct SweepCellRecord {
    #[serde(rename = "D")]
    d: usize,
    #[serde(rename = "T")]
    t: usize,
    method: &'static str,
    mean_auc: f64,
    std_auc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected: Option<HyperRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_failed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct BarrierRecord {
    method: &'static str,
    threshold: f64,
    outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<Vec<(usize, f64)>>,
}

#[derive(Serialize)]
struct SweepFile {
    format_version: u32,
    kind: &'static str,
    n_replicates: usize,
    master_seed: u64,
    cells: Vec<SweepCellRecord>,
    barriers: Vec<BarrierRecord>,
}

pub const NO_BARRIER: &str = "no barrier in grid";

/// Human-readable barrier outcome.
pub fn describe_barrier(outcome: &std::result::Result<BarrierOutcome, String>) -> String {
    match outcome {
        Ok(BarrierOutcome::NoBarrier) => NO_BARRIER.to_string(),
        Ok(BarrierOutcome::Fit(f)) => format!(
            "T* = {:.4} D + {:.4} (R^2 = {:.4}, p = {:.3e})",
            f.slope, f.intercept, f.r2, f.p_value
        ),
        Err(e) => format!("error: {e}"),
    }
}

/// Writes `sweep_report.toml`, `surface.csv` and `timing.toml`.
pub fn save_sweep_report(dir: &Path, report: &SweepReport) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("sweep_report.toml");
    let file = SweepFile {
        format_version: FORMAT_VERSION,
        kind: "sweep",
        n_replicates: report.n_replicates,
        master_seed: report.master_seed,
        cells: report
            .cells
            .iter()
            .map(|c| SweepCellRecord {
                d: c.d,
                t: c.t,
                method: c.method.as_str(),
                mean_auc: c.mean_auc(),
                std_auc: c.std_auc(),
                selected: c.report.as_ref().map(|r| (&r.hyper).into()),
                n_failed: c.report.as_ref().map(|r| r.n_failed),
                error: c.error.clone(),
            })
            .collect(),
        barriers: report
            .barriers
            .iter()
            .map(|(m, outcome)| {
                let fit = match outcome {
                    Ok(BarrierOutcome::Fit(f)) => Some(f),
                    _ => None,
                };
                BarrierRecord {
                    method: m.as_str(),
                    threshold: report.threshold,
                    outcome: match outcome {
                        Ok(BarrierOutcome::Fit(_)) => "fit".to_string(),
                        other => describe_barrier(other),
                    },
                    slope: fit.map(|f| f.slope),
                    intercept: fit.map(|f| f.intercept),
                    r2: fit.map(|f| f.r2),
                    p_value: fit.map(|f| f.p_value),
                    points: fit.map(|f| f.points.clone()),
                }
            })
            .collect(),
    };
    write(&path, &to_toml(&path, &file)?)?;
    save_surface(&dir.join("surface.csv"), report)?;
    let timing_path = dir.join("timing.toml");
    let timing = TimingFile {
        format_version: FORMAT_VERSION,
        cells: report
            .cells
            .iter()
            .enumerate()
            .map(|(index, c)| CellTiming {
                index,
                mean_seconds: c.mean_seconds(),
                total_seconds: c.report.as_ref().map_or(f64::NAN, |r| r.total_seconds),
            })
            .collect(),
    };
    write(&timing_path, &to_toml(&timing_path, &timing)?)?;
    Ok(path)
}

/// Writes the flat AUC surface for plotting.
pub fn save_surface(path: &Path, report: &SweepReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["D", "T", "method", "mean_auc", "std_auc", "mean_seconds"])
        .map_err(|e| csv_error(path, e))?;
    for c in &report.cells {
        w.write_record([
            c.d.to_string(),
            c.t.to_string(),
            c.method.as_str().to_string(),
            c.mean_auc().to_string(),
            c.std_auc().to_string(),
            c.mean_seconds().to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
