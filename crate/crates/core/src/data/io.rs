use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::DataMatrix;
use crate::error::{MiscError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// One sample per line, one feature per column (the usual CSV layout).
    SamplesAsRows,
    /// One feature per line, one sample per column.
    FeaturesAsRows,
}

impl FromStr for Orientation {
    type Err = MiscError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "samples_as_rows" => Ok(Orientation::SamplesAsRows),
            "features_as_rows" => Ok(Orientation::FeaturesAsRows),
            other => Err(MiscError::invalid(format!("unknown orientation `{other}`"))),
        }
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| MiscError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Reads a rectangular table of numbers; a first line that does not parse as numbers is a header.
fn read_table(path: &Path) -> Result<(Option<Vec<String>>, Vec<Vec<f64>>)> {
    let mut rdr = reader(path)?;
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = idx + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if idx == 0 && record.iter().any(|c| c.parse::<f64>().is_err()) {
            header = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(MiscError::RaggedRow {
                    row: row_no,
                    expected: w,
                    found: record.len(),
                })
            }
            None => width = Some(record.len()),
            _ => {}
        }
        let parsed = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().map_err(|_| MiscError::Parse {
                    row: row_no,
                    col: c + 1,
                    message: format!("`{cell}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(parsed);
    }
    Ok((header, rows))
}

/// Loads a numeric CSV file as a `d × n` matrix.
pub fn load_csv(path: impl AsRef<Path>, orientation: Orientation) -> Result<DataMatrix> {
    let path = path.as_ref();
    let (header, rows) = read_table(path)?;
    if rows.is_empty() {
        return Err(MiscError::invalid(format!("{} has no data rows", path.display())));
    }
    let (r, c) = (rows.len(), rows[0].len());
    let table = Array2::from_shape_fn((r, c), |(i, j)| rows[i][j]);
    match orientation {
        Orientation::SamplesAsRows => {
            DataMatrix::with_names(table.reversed_axes().as_standard_layout().to_owned(), header)
        }
        // a header in this layout names samples, not features
        Orientation::FeaturesAsRows => DataMatrix::new(table),
    }
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| MiscError::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| MiscError::io(path, e))?;
    Ok(BufWriter::new(file))
}

/// Writes samples as rows with a feature-name header (`x1..xd` when unnamed).
pub fn write_data_csv(path: impl AsRef<Path>, data: &DataMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let names: Vec<String> = match data.feature_names() {
        Some(n) => n.to_vec(),
        None => (1..=data.dim()).map(|i| format!("x{i}")).collect(),
    };
    let io = |e| MiscError::io(path, e);
    writeln!(w, "{}", names.join(",")).map_err(io)?;
    for col in data.values().columns() {
        let line: Vec<String> = col.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One column per view, header carries the view names.
pub fn write_views_csv(path: impl AsRef<Path>, views: &[(String, Vec<usize>)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let io = |e| MiscError::io(path, e);
    let header: Vec<&str> = views.iter().map(|(n, _)| n.as_str()).collect();
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    let n = views.first().map_or(0, |(_, l)| l.len());
    for j in 0..n {
        let line: Vec<String> = views.iter().map(|(_, l)| l[j].to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes `sample_index,label` rows.
pub fn write_labels_csv(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let io = |e| MiscError::io(path, e);
    writeln!(w, "sample_index,label").map_err(io)?;
    for (i, l) in labels.iter().enumerate() {
        writeln!(w, "{i},{l}").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn to_label(v: f64, row: usize, col: usize) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(MiscError::Parse {
            row,
            col,
            message: format!("`{v}` is not a nonnegative integer label"),
        })
    }
}

/// Reads a file written by [`write_labels_csv`]; a single-column file is read as bare labels.
pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let (header, rows) = read_table(path.as_ref())?;
    let offset = usize::from(header.is_some());
    let col = match rows.first().map(Vec::len) {
        Some(1) => 0,
        Some(_) => 1,
        None => return Ok(Vec::new()),
    };
    rows.iter()
        .enumerate()
        .map(|(i, r)| to_label(r[col], i + 1 + offset, col + 1))
        .collect()
}

/// Reads a views file: one column per view, optional header with the view names.
pub fn read_views_csv(path: impl AsRef<Path>) -> Result<Vec<(String, Vec<usize>)>> {
    let (header, rows) = read_table(path.as_ref())?;
    let width = rows.first().map_or(0, Vec::len);
    let names = header.unwrap_or_else(|| (1..=width).map(|i| format!("view{i}")).collect());
    let offset = 2;
    (0..width)
        .map(|c| {
            let labels = rows
                .iter()
                .enumerate()
                .map(|(i, r)| to_label(r[c], i + offset, c + 1))
                .collect::<Result<Vec<_>>>()?;
            Ok((names[c].clone(), labels))
        })
        .collect()
}
