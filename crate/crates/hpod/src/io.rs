//! CSV datasets, corpus directories and HP-space manifests.

use std::fs;
use std::path::{Path, PathBuf};

use hpod_core::{Algorithm, Corpus, Dataset, HpSpace, Matrix};

use crate::error::{CliError, Result};

pub const DEFAULT_LABEL_COL: &str = "outlier";

/// A dataset read from disk and the number of rows dropped for missing values.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

fn parse_cell(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() || t == "?" {
        return Some(f64::NAN);
    }
    t.parse::<f64>().ok()
}

/// Reads a headed CSV. Every column except `label_col` is a feature; rows
/// with a missing or NaN cell are dropped. The label column is optional
/// unless `require_labels` is set and must hold 0/1 values.
pub fn load_dataset(path: &Path, label_col: &str, require_labels: bool) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::data(path, format!("{other:?}")),
        })?;
    let headers = rdr.headers().map_err(|e| CliError::data(path, e.to_string()))?.clone();
    let label_idx = headers.iter().position(|h| h == label_col);
    if require_labels && label_idx.is_none() {
        return Err(CliError::data(path, format!("no label column `{label_col}`")));
    }
    let d = headers.len() - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(CliError::data(path, "no feature columns"));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    let mut row = Vec::with_capacity(d);
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(path, e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(CliError::data(path, format!("row {} has {} fields, expected {}", line + 2, rec.len(), headers.len())));
        }
        row.clear();
        let mut label = None;
        for (k, cell) in rec.iter().enumerate() {
            let v = parse_cell(cell)
                .ok_or_else(|| CliError::data(path, format!("row {}: `{cell}` is not numeric", line + 2)))?;
            if Some(k) == label_idx {
                label = Some(v);
            } else {
                row.push(v);
            }
        }
        if row.iter().any(|v| !v.is_finite()) || label.is_some_and(f64::is_nan) {
            dropped += 1;
            continue;
        }
        if let Some(l) = label {
            if l != 0.0 && l != 1.0 {
                return Err(CliError::data(path, format!("row {}: label {l} is not 0 or 1", line + 2)));
            }
            labels.push(l as u8);
        }
        data.extend_from_slice(&row);
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows with missing values", path.display());
    }
    let n = data.len() / d;
    let x = Matrix::from_vec(n, d, data)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let y = label_idx.map(|_| labels);
    let dataset = Dataset::new(name, x, y)
        .map_err(|e| CliError::data(path, e.to_string()))?
        .with_source(path.display().to_string());
    Ok(Loaded { dataset, dropped_rows: dropped })
}

/// Loads every `*.csv` in `dir`, ordered by file name.
pub fn load_corpus(dir: &Path, label_col: &str) -> Result<Corpus> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!("corpus directory {} does not exist", dir.display())));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("no CSV files in {}", dir.display())));
    }
    let datasets = files
        .iter()
        .map(|f| {
            let ds = load_dataset(f, label_col, true)?.dataset;
            if !ds.has_both_classes() {
                return Err(CliError::data(f, "labels must contain both classes"));
            }
            Ok(ds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::new(datasets)?)
}

/// Reads an HP-space manifest (the JSON form of [`HpSpace`]).
pub fn load_space(path: &Path) -> Result<HpSpace> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let space: HpSpace = serde_json::from_str(&text).map_err(|e| CliError::Json { path: path.into(), source: e })?;
    space.validate().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(space)
}

/// The manifest at `path`, or the built-in space for `algorithm`.
pub fn resolve_space(algorithm: Algorithm, path: Option<&Path>) -> Result<HpSpace> {
    let space = match path {
        Some(p) => load_space(p)?,
        None => HpSpace::for_algorithm(algorithm),
    };
    if space.algorithm != algorithm {
        return Err(CliError::Config(format!(
            "space manifest is for `{}` but --algo is `{algorithm}`",
            space.algorithm
        )));
    }
    Ok(space)
}
