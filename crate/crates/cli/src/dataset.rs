//! Comma-separated numeric datasets with an optional header row.

use std::path::Path;

use nalgebra::DMatrix;

use crate::CliError;

/// A rectangular numeric dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub data: DMatrix<f64>,
}

impl Dataset {
    pub fn columns(&self) -> usize {
        self.data.ncols()
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_dataset(&text)
}

/// Parses `text`. The first row is a header when any of its cells fails to
/// parse as a number. Row numbers in messages are 1-based file lines.
pub fn parse_dataset(text: &str) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::input(format!("malformed CSV: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((line, rec));
    }
    let Some((_, first)) = records.first() else {
        return Err(CliError::input("dataset is empty".into()));
    };

    let header = if first.iter().any(|c| c.parse::<f64>().is_err()) {
        let names = first.iter().map(str::to_string).collect();
        records.remove(0);
        Some(names)
    } else {
        None
    };
    let Some((_, row0)) = records.first() else {
        return Err(CliError::input(
            "dataset has a header but no data rows".into(),
        ));
    };
    let width = header.as_ref().map_or(row0.len(), Vec::len);

    let mut values = Vec::with_capacity(records.len() * width);
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(CliError::input(format!(
                "row {line}: expected {width} columns, found {}",
                rec.len()
            )));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v = cell.parse::<f64>().ok().filter(|v| v.is_finite());
            let Some(v) = v else {
                let name = header
                    .as_ref()
                    .map(|h| format!(" ('{}')", h[j]))
                    .unwrap_or_default();
                return Err(CliError::input(format!(
                    "row {line}, column {}{name}: '{cell}' is not a finite number",
                    j + 1
                )));
            };
            values.push(v);
        }
    }
    let data = DMatrix::from_row_slice(records.len(), width, &values);
    Ok(Dataset { data })
}
