//! Input files: long-format CSV datasets and custom contrast matrices.

use std::collections::HashMap;
use std::path::Path;

use ortrend::contrasts::{ContrastKind, ContrastMatrix};
use ortrend::estimators::OneWayLayout;

use crate::CliError;

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))
}

fn row_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(String::new(), |p| format!(" at line {}", p.line()));
    CliError::Data(format!("{}{line}: {e}", path.display()))
}

/// Reads a long-format CSV (one observation per row) into a layout. Levels
/// keep the order of first appearance unless `level_order` is given.
pub fn ingest_csv(
    path: &Path,
    group_column: &str,
    response_column: &str,
    level_order: Option<&[String]>,
) -> Result<OneWayLayout, CliError> {
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| row_error(path, e))?.clone();
    if headers.is_empty() {
        return Err(CliError::Data(format!("{}: empty file", path.display())));
    }
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!(
                "{}: no column '{name}' (columns: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let gi = column(group_column)?;
    let ri = column(response_column)?;

    let mut levels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut responses: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| row_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let group = record.get(gi).unwrap_or("");
        let raw = record.get(ri).unwrap_or("");
        if group.is_empty() {
            return Err(CliError::Data(format!(
                "{} line {line}: empty group label",
                path.display()
            )));
        }
        let value: f64 = raw.parse().map_err(|_| {
            CliError::Data(format!(
                "{} line {line}: response '{raw}' is not a number",
                path.display()
            ))
        })?;
        if !value.is_finite() {
            return Err(CliError::Data(format!(
                "{} line {line}: response '{raw}' is not finite",
                path.display()
            )));
        }
        let slot = *index.entry(group.to_string()).or_insert_with(|| {
            levels.push(group.to_string());
            responses.push(Vec::new());
            levels.len() - 1
        });
        responses[slot].push(value);
    }
    if levels.is_empty() {
        return Err(CliError::Data(format!("{}: no observations", path.display())));
    }

    if let Some(order) = level_order {
        let missing: Vec<&str> = order
            .iter()
            .filter(|l| !index.contains_key(l.as_str()))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Config(format!(
                "levels not present in the data: {}",
                missing.join(", ")
            )));
        }
        let unknown: Vec<&str> = levels
            .iter()
            .filter(|l| !order.contains(l))
            .map(String::as_str)
            .collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(format!(
                "data levels missing from --levels: {}",
                unknown.join(", ")
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = order.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(CliError::Config(format!("level '{dup}' listed twice")));
        }
        let reordered = order.iter().map(|l| responses[index[l]].clone()).collect();
        return Ok(OneWayLayout::new(order.to_vec(), reordered)?);
    }
    Ok(OneWayLayout::new(levels, responses)?)
}

/// Reads a contrast matrix: one row per contrast, `k` reals separated by
/// commas or whitespace, no header. `#` starts a comment.
pub fn read_contrast_file(path: &Path, group_sizes: &[usize]) -> Result<ContrastMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Config(format!(
                        "{} line {}: '{f}' is not a number",
                        path.display(),
                        i + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    ContrastMatrix::new(rows, ContrastKind::Custom, group_sizes.to_vec())
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
