//! CSV ingestion.

use std::io::Read;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Observations read from a CSV file with a `value` column, an optional
/// integer `year` column and any number of numeric covariate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub values: Vec<f64>,
    pub year: Option<Vec<i64>>,
    /// `(name, column)` in file order.
    pub covariates: Vec<(String, Vec<f64>)>,
    pub source_path: String,
}

impl Dataset {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> CliResult<Self> {
        let err = |line: u64, msg: String| CliError::input(format!("{source}: line {line}: {msg}"));
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_error(source, &e))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.iter().all(|h| h.is_empty()) {
            return Err(CliError::input(format!("{source}: empty file (expected a header row)")));
        }
        let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let value_col = find("value").ok_or_else(|| err(1, "missing required column 'value'".into()))?;
        let year_col = find("year");
        for (i, h) in headers.iter().enumerate() {
            if h.is_empty() {
                return Err(err(1, format!("column {} has an empty name", i + 1)));
            }
            if headers[..i].iter().any(|o| o.eq_ignore_ascii_case(h)) {
                return Err(err(1, format!("duplicate column '{h}'")));
            }
        }
        let cov_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != value_col && Some(i) != year_col).collect();

        let mut values = Vec::new();
        let mut years = Vec::new();
        let mut covs: Vec<Vec<f64>> = vec![Vec::new(); cov_cols.len()];
        for record in rdr.records() {
            let record = record.map_err(|e| csv_error(source, &e))?;
            let line = record.position().map_or(0, |p| p.line());
            let number = |col: usize| -> CliResult<f64> {
                let field = &record[col];
                match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(err(line, format!("column '{}': '{field}' is not a finite number", headers[col]))),
                }
            };
            values.push(number(value_col)?);
            if let Some(c) = year_col {
                let field = &record[c];
                let y: i64 = field
                    .parse()
                    .map_err(|_| err(line, format!("column '{}': '{field}' is not an integer year", headers[c])))?;
                if let Some(&prev) = years.last() {
                    if y <= prev {
                        return Err(err(line, format!("year {y} does not increase (previous {prev})")));
                    }
                }
                years.push(y);
            }
            for (k, &c) in cov_cols.iter().enumerate() {
                covs[k].push(number(c)?);
            }
        }
        if values.is_empty() {
            return Err(CliError::input(format!("{source}: no data rows")));
        }
        Ok(Dataset {
            values,
            year: year_col.map(|_| years),
            covariates: cov_cols.iter().map(|&c| headers[c].clone()).zip(covs).collect(),
            source_path: source.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn csv_error(source: &str, e: &csv::Error) -> CliError {
    match e.position() {
        Some(p) => CliError::input(format!("{source}: line {}: {}", p.line(), describe(e))),
        None => CliError::input(format!("{source}: {e}")),
    }
}

fn describe(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => e.to_string(),
    }
}
