//! CSV ingestion.

use std::collections::HashMap;
use std::path::PathBuf;

use acev::PointMatrix;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// A column picked by header name or by 0-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    /// Digits select by position, anything else by name. A header that
    /// literally contains the digits still wins at resolution time.
    pub fn parse(s: &str) -> Self {
        match s.parse() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        }
    }

    fn resolve(&self, header: Option<&[String]>, width: usize) -> Option<usize> {
        match self {
            ColumnRef::Name(name) => header?.iter().position(|h| h == name),
            ColumnRef::Index(i) => {
                let by_name = header.and_then(|h| h.iter().position(|c| *c == i.to_string()));
                by_name.or((*i < width).then_some(*i))
            }
        }
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Name(n) => write!(f, "{n:?}"),
            ColumnRef::Index(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub delimiter: u8,
    pub has_header: bool,
    pub label_column: Option<ColumnRef>,
    pub mask_column: Option<ColumnRef>,
}

impl DatasetFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            delimiter: b',',
            has_header: false,
            label_column: None,
            mask_column: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: PointMatrix,
    /// Dense ids in order of first appearance.
    pub labels: Option<Vec<usize>>,
    pub mask: Option<Vec<bool>>,
    /// Coordinate column names, when the file has a header.
    pub columns: Option<Vec<String>>,
    /// Hex SHA-256 of the raw file bytes.
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn load_dataset(spec: &DatasetFile) -> Result<Dataset> {
    let bytes = std::fs::read(&spec.path).map_err(|e| CliError::io(&spec.path, e))?;
    parse_dataset(spec, &bytes)
}

/// Parses dataset bytes as if they were read from `spec.path`.
pub fn parse_dataset(spec: &DatasetFile, bytes: &[u8]) -> Result<Dataset> {
    let path = &spec.path;
    let data_err = |message: String| CliError::Dataset {
        path: path.clone(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(spec.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let header: Option<Vec<String>> = if spec.has_header {
        let h = reader
            .headers()
            .map_err(|e| data_err(format!("unreadable header: {e}")))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| data_err(e.to_string()))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(data_err("no data rows".into()));
    }

    let width = header.as_ref().map_or(records[0].1.len(), Vec::len);
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(CliError::Parse {
                path: path.clone(),
                row: *line,
                column: "*".into(),
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
    }

    let resolve = |col: &Option<ColumnRef>, what: &str| -> Result<Option<usize>> {
        match col {
            None => Ok(None),
            Some(c) => c
                .resolve(header.as_deref(), width)
                .map(Some)
                .ok_or_else(|| data_err(format!("{what} column {c} not found"))),
        }
    };
    let label_idx = resolve(&spec.label_column, "label")?;
    let mask_idx = resolve(&spec.mask_column, "mask")?;
    if label_idx.is_some() && label_idx == mask_idx {
        return Err(data_err("label and mask columns must differ".into()));
    }

    let coord_cols: Vec<usize> = (0..width)
        .filter(|&c| Some(c) != label_idx && Some(c) != mask_idx)
        .collect();
    if coord_cols.is_empty() {
        return Err(data_err("no coordinate columns left".into()));
    }
    let column_name = |c: usize| {
        header
            .as_ref()
            .map_or_else(|| c.to_string(), |h| h[c].clone())
    };

    let mut data = Vec::with_capacity(records.len() * coord_cols.len());
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut mask = Vec::new();
    for (line, rec) in &records {
        for &c in &coord_cols {
            let cell = &rec[c];
            let v: f64 = cell.parse().map_err(|_| CliError::Parse {
                path: path.clone(),
                row: *line,
                column: column_name(c),
                message: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::Parse {
                    path: path.clone(),
                    row: *line,
                    column: column_name(c),
                    message: format!("{cell:?} is not finite"),
                });
            }
            data.push(v);
        }
        if let Some(c) = label_idx {
            let next = label_ids.len();
            labels.push(*label_ids.entry(rec[c].to_string()).or_insert(next));
        }
        if let Some(c) = mask_idx {
            mask.push(parse_flag(&rec[c]).ok_or_else(|| CliError::Parse {
                path: path.clone(),
                row: *line,
                column: column_name(c),
                message: format!("{:?} is not a 0/1 flag", &rec[c]),
            })?);
        }
    }

    let points = PointMatrix::new(data, records.len(), coord_cols.len())?;
    Ok(Dataset {
        points,
        labels: label_idx.map(|_| labels),
        mask: mask_idx.map(|_| mask),
        columns: header.map(|h| coord_cols.iter().map(|&c| h[c].clone()).collect()),
        digest: sha256_hex(bytes),
    })
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}
