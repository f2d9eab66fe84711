//! CSV ingestion.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

const MISSING: [&str; 8] = ["", "na", "nan", "n/a", "null", "none", ".", "-"];

/// Observed series, periods in rows, columns in file order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
    /// Set when a leading non-numeric column was dropped.
    pub dropped: Option<String>,
}

impl Dataset {
    pub fn p(&self) -> usize {
        self.values.ncols()
    }
}

fn is_missing(cell: &str) -> bool {
    MISSING.contains(&cell.trim().to_ascii_lowercase().as_str())
}

fn parse_num(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Reads a comma-separated file with a header row. A leading column holding
/// non-numeric, non-missing content (dates, labels) is dropped.
pub fn ingest_csv(path: &Path) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(CliError::Input(format!("{}: missing header row", path.display())));
    }
    let width = header.len();
    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(CliError::Input(format!(
                "{}: line {line} has {} fields, the header has {width}",
                path.display(),
                rec.len()
            )));
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    let drop_first = rows.iter().any(|(_, r)| !is_missing(&r[0]) && parse_num(&r[0]).is_none());
    let first = usize::from(drop_first);
    if first == width {
        return Err(CliError::Input(format!("{}: no numeric columns", path.display())));
    }
    let names = header[first..].to_vec();
    let mut missing = Vec::new();
    let mut bad = Vec::new();
    let mut values = DMatrix::zeros(rows.len(), width - first);
    for (t, (line, row)) in rows.iter().enumerate() {
        for (j, cell) in row[first..].iter().enumerate() {
            let at = format!("line {line}, column '{}'", names[j]);
            if is_missing(cell) {
                missing.push(at);
            } else if let Some(x) = parse_num(cell) {
                values[(t, j)] = x;
            } else {
                bad.push(format!("{at} ('{}')", cell.trim()));
            }
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Input(format!(
            "{}: {} missing value(s) at {}",
            path.display(),
            missing.len(),
            missing.join("; ")
        )));
    }
    if !bad.is_empty() {
        return Err(CliError::Input(format!("{}: non-numeric value(s) at {}", path.display(), bad.join("; "))));
    }
    Ok(Dataset {
        names,
        values,
        dropped: drop_first.then(|| header[0].clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_columns() {
        let mut text = String::from("a,b,c\n");
        for t in 0..100 {
            text += &format!("{t},{},{}\n", 0.5 * t as f64, -(t as f64));
        }
        let d = ingest_csv(file(&text).path()).unwrap();
        assert_eq!(d.values.shape(), (100, 3));
        assert_eq!(d.names, ["a", "b", "c"]);
        assert_eq!(d.values[(99, 1)], 49.5);
        assert!(d.dropped.is_none());
    }

    #[test]
    fn date_column_dropped() {
        let d = ingest_csv(file("date,x,y\n2001-01,1,2\n2001-02,3,4\n").path()).unwrap();
        assert_eq!(d.p(), 2);
        assert_eq!(d.dropped.as_deref(), Some("date"));
        assert_eq!(d.values[(1, 0)], 3.0);
    }

    #[test]
    fn na_cell_named() {
        let err = ingest_csv(file("x,y\n1,2\n3,NA\n").path()).unwrap_err();
        let msg = err.to_string();
        assert_eq!(err.exit_code(), 2);
        assert!(msg.contains("line 3") && msg.contains("'y'"), "{msg}");
    }

    #[test]
    fn ragged_row_reports_line() {
        let msg = ingest_csv(file("x,y\n1,2\n3\n5,6\n").path()).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn garbage_in_numeric_column() {
        let msg = ingest_csv(file("x,y\n1,2\n3,abc\n").path()).unwrap_err().to_string();
        assert!(msg.contains("non-numeric") && msg.contains("abc"), "{msg}");
    }

    #[test]
    fn header_only() {
        assert!(ingest_csv(file("x,y\n").path()).is_err());
    }
}
